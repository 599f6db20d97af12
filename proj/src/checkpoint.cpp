#include "smn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "smn/error.hpp"

namespace smn {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j, const std::string& name) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw FormatError("checkpoint tensor \"" + name + "\" has inconsistent shape");
    }
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

}  // namespace

json config_to_json(const TrainConfig& c) {
    return {{"backbone", to_string(c.model.backbone)},
            {"layers", c.model.layers},
            {"pool_ratio", c.model.pool_ratio},
            {"delta", c.model.delta},
            {"heads", c.model.heads.to_string()},
            {"image_hidden", c.model.image_hidden},
            {"mutual_include_diagonal", c.model.mutual_include_diagonal},
            {"image_relu_output", c.model.image_relu_output},
            {"lambda1", c.loss.lambda1},
            {"lambda2", c.loss.lambda2},
            {"huber_delta", c.loss.huber_delta},
            {"lr", c.schedule.lr0},
            {"t0", c.schedule.t0},
            {"t_mult", c.schedule.t_mult},
            {"lr_min", c.schedule.lr_min},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"split", {c.split.train, c.split.val, c.split.test}}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.model.backbone = parse_backbone(j.at("backbone").get<std::string>());
    c.model.layers = j.at("layers").get<std::size_t>();
    c.model.pool_ratio = j.at("pool_ratio").get<double>();
    c.model.delta = j.at("delta").get<double>();
    c.model.heads = HeadToggles::parse(j.at("heads").get<std::string>());
    c.model.image_hidden = j.at("image_hidden").get<std::size_t>();
    c.model.mutual_include_diagonal = j.at("mutual_include_diagonal").get<bool>();
    c.model.image_relu_output = j.at("image_relu_output").get<bool>();
    c.loss.lambda1 = j.at("lambda1").get<double>();
    c.loss.lambda2 = j.at("lambda2").get<double>();
    c.loss.huber_delta = j.at("huber_delta").get<double>();
    c.schedule.lr0 = j.at("lr").get<double>();
    c.schedule.t0 = j.at("t0").get<std::size_t>();
    c.schedule.t_mult = j.at("t_mult").get<double>();
    c.schedule.lr_min = j.at("lr_min").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto split = j.at("split").get<std::vector<double>>();
    if (split.size() != 3) throw FormatError("config split must have three ratios");
    c.split = {split[0], split[1], split[2]};
    c.validate();
    return c;
}

std::string serialize_checkpoint(const TrainState& state) {
    json params = json::object();
    state.params.weights.for_each([&](const std::string& name, const Matrix& m) { params[name] = matrix_to_json(m); });
    json j = {{"format", kCheckpointFormat},
              {"vocab_hash", state.vocab_hash},
              {"epoch", state.epoch},
              {"config", config_to_json(state.config)},
              {"scheduler",
               {{"lr0", state.config.schedule.lr0},
                {"t0", state.config.schedule.t0},
                {"t_mult", state.config.schedule.t_mult},
                {"epoch", state.epoch}}},
              {"popularity", {{"min", state.range.min}, {"max", state.range.max}}},
              {"params", params},
              {"mask", matrix_to_json(state.params.w_mask)}};
    return j.dump() + "\n";
}

TrainState deserialize_checkpoint(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed checkpoint: ") + e.what());
    }
    if (j.value("format", std::string{}) != kCheckpointFormat) {
        throw FormatError(std::string("checkpoint must declare format \"") + kCheckpointFormat + "\"");
    }
    TrainState state;
    try {
        state.config = config_from_json(j.at("config"));
        state.vocab_hash = j.at("vocab_hash").get<std::string>();
        state.epoch = j.at("epoch").get<std::size_t>();
        state.range = {j.at("popularity").at("min").get<double>(), j.at("popularity").at("max").get<double>()};
        const json& params = j.at("params");
        auto& w = state.params.weights;
        w.gnn_weight.resize(state.config.model.layers);
        if (state.config.model.backbone == BackboneKind::gat) w.gnn_attention.resize(state.config.model.layers);
        w.for_each([&](const std::string& name, Matrix& m) {
            if (!params.contains(name)) throw FormatError("checkpoint is missing tensor \"" + name + "\"");
            m = matrix_from_json(params.at(name), name);
        });
        state.params.w_mask = matrix_from_json(j.at("mask"), "mask");
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad checkpoint: ") + e.what());
    }
    if (state.params.w_mask.rows() != state.params.weights.w_beta.rows() ||
        state.params.w_mask.cols() != state.params.weights.w_beta.cols()) {
        throw FormatError("checkpoint mask shape does not match self.w_beta");
    }
    return state;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    out << serialize_checkpoint(state);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

}  // namespace smn
