#include "support.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "smn/cli.hpp"
#include "smn/random.hpp"

namespace support {

smn::Event event(std::string id, std::vector<std::string> tokens, double popularity,
                 std::optional<std::vector<double>> image) {
    smn::Event e;
    e.id = std::move(id);
    e.tokens = std::move(tokens);
    e.popularity_raw = popularity;
    e.popularity = popularity;
    e.image_feature = std::move(image);
    return e;
}

std::vector<std::string> word_list(std::size_t vocab) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < vocab; ++i) words.push_back("w" + std::to_string(i));
    return words;
}

smn::EmbeddingFile random_embeddings(const std::vector<std::string>& keys, std::size_t dim, std::uint64_t seed) {
    auto rng = smn::make_rng(seed, 0xE3B);
    std::normal_distribution<double> normal(0.0, 1.0);
    smn::EmbeddingFile file;
    file.dim = dim;
    for (const auto& k : keys) {
        std::vector<float> row(dim);
        for (auto& v : row) v = static_cast<float>(normal(rng) * 0.5);
        file.add(k, std::move(row));
    }
    return file;
}

smn::Corpus random_corpus(std::size_t vocab, std::size_t events, std::size_t max_tokens, std::size_t fc,
                          std::uint64_t seed) {
    auto rng = smn::make_rng(seed, 0xC0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto words = word_list(vocab);
    smn::Corpus corpus;
    corpus.header.count = events;
    if (fc > 0) corpus.header.fc = fc;
    for (std::size_t e = 0; e < events; ++e) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng() % (max_tokens - 1));
        const auto perm = smn::shuffled_indices(vocab, rng);
        std::vector<std::string> tokens;
        for (std::size_t t = 0; t < m; ++t) tokens.push_back(words[perm[t]]);
        std::optional<std::vector<double>> image;
        if (fc > 0) {
            image.emplace(fc);
            for (auto& v : *image) v = normal(rng);
        }
        corpus.events.push_back(event("e" + std::to_string(e), tokens, smn::uniform01(rng), image));
    }
    return corpus;
}

Fixture make_fixture(std::size_t vocab, std::size_t f, std::size_t events, std::size_t fc, std::uint64_t seed,
                     std::size_t max_tokens) {
    Fixture fx;
    fx.corpus = random_corpus(vocab, events, max_tokens, fc, seed);
    fx.words = random_embeddings(word_list(vocab), f, seed);
    fx.graph = smn::build_graph(fx.corpus.events, fx.words, seed);
    return fx;
}

std::vector<std::size_t> pooled_nodes(const smn::Model& model, const smn::ModelParams& params) {
    smn::ad::Tape tape;
    const auto vars = model.bind(tape, params, false);
    return model.graph_pass(tape, vars).pool.idx;
}

double total_loss(const smn::Model& model, const smn::ModelParams& params, const std::vector<smn::Event>& events,
                  const std::vector<std::size_t>& idx, const smn::LossWeights& weights) {
    smn::ad::Tape tape;
    const auto vars = model.bind(tape, params, false);
    std::optional<smn::GraphPass> pass;
    if (model.config().heads.any_text()) pass = model.graph_pass(tape, vars, idx);
    double total = 0.0;
    for (const auto& ev : events) {
        const auto fwd = model.forward_event(tape, ev, model.event_nodes(ev), pass, vars, params.w_mask);
        total += smn::event_loss(fwd, ev.popularity, weights).scalar();
    }
    return total;
}

smn::ParamSet<smn::Matrix> total_gradient(const smn::Model& model, const smn::ModelParams& params,
                                          const std::vector<smn::Event>& events,
                                          const std::vector<std::size_t>& idx, const smn::LossWeights& weights) {
    smn::ad::Tape tape;
    const auto vars = model.bind(tape, params, true);
    std::optional<smn::GraphPass> pass;
    if (model.config().heads.any_text()) pass = model.graph_pass(tape, vars, idx);
    std::optional<smn::ad::Var> total;
    for (const auto& ev : events) {
        const auto fwd = model.forward_event(tape, ev, model.event_nodes(ev), pass, vars, params.w_mask);
        const auto loss = smn::event_loss(fwd, ev.popularity, weights);
        total = total ? smn::ad::add(*total, loss) : loss;
    }
    tape.backward(*total);
    std::vector<smn::Matrix> grads;
    vars.for_each([&](const std::string&, const smn::ad::Var& v) { grads.push_back(v.grad()); });
    smn::ParamSet<smn::Matrix> out = params.weights;
    std::size_t i = 0;
    out.for_each([&](const std::string&, smn::Matrix& m) { m = grads[i++]; });
    return out;
}

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliResult r;
    std::vector<std::string> argv{"smn"};
    argv.insert(argv.end(), args.begin(), args.end());
    r.code = smn::cli::run(argv, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace support
