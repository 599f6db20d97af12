#include "smn/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>
#include <json.hpp>

#include "smn/checkpoint.hpp"
#include "smn/error.hpp"
#include "smn/graph.hpp"
#include "smn/image.hpp"
#include "smn/metrics.hpp"
#include "smn/model.hpp"
#include "smn/semb.hpp"

namespace smn::cli {

using nlohmann::json;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::io: return 2;
        case ErrorKind::format:
        case ErrorKind::validation:
        case ErrorKind::shape: return 3;
        case ErrorKind::numeric: return 4;
        case ErrorKind::config: return 5;
    }
    return 1;
}

namespace {

Corpus load_inputs(const std::filesystem::path& corpus_path, const std::optional<std::filesystem::path>& images) {
    Corpus corpus = load_corpus(corpus_path);
    if (images) attach_image_features(corpus, load_semb(*images));
    return corpus;
}

std::vector<Event> events_for_split(const PreparedData& data, const Corpus& corpus, const std::string& split,
                                    const PopularityRange& range) {
    if (split == "train") return data.train;
    if (split == "val") return data.val;
    if (split == "test") return data.test;
    if (split == "all") return apply_popularity_range(corpus.events, range);
    throw ConfigError("unknown split \"" + split + "\" (expected train, val, test or all)");
}

struct LoadedRun {
    TrainState state;
    WordGraph graph;
    Corpus corpus;
    std::vector<Event> events;
};

LoadedRun load_run(const EvalOptions& options) {
    LoadedRun run;
    run.state = load_checkpoint(options.ckpt);
    run.graph = load_graph(options.graph);
    if (run.graph.vocab.hash() != run.state.vocab_hash) {
        throw ValidationError("vocabulary hash mismatch: checkpoint " + run.state.vocab_hash + ", graph " +
                              run.graph.vocab.hash());
    }
    run.corpus = load_inputs(options.corpus, options.images);
    const PreparedData data =
        prepare_data(run.corpus, run.state.config.split, run.state.config.seed, run.state.range);
    run.events = events_for_split(data, run.corpus, options.split, run.state.range);
    if (run.events.empty()) throw ValidationError("split \"" + options.split + "\" has no events");
    return run;
}

std::vector<ScoredEvent> score(const std::vector<Event>& events, const std::vector<EventPrediction>& preds) {
    std::vector<ScoredEvent> scored;
    scored.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        scored.push_back({events[i].id, events[i].popularity, preds[i].breakdown.total});
    }
    return scored;
}

json breakdown_json(const PredictionBreakdown& b) {
    return {{"base", b.base}, {"self", b.self}, {"mutual", b.mutual}, {"image", b.image}, {"total", b.total}};
}

}  // namespace

int cmd_build_graph(const BuildGraphOptions& options, std::ostream& out) {
    const Corpus corpus = load_corpus(options.corpus);
    const EmbeddingFile embeddings = load_semb(options.embeddings);
    const WordGraph graph = build_graph(corpus.events, embeddings, options.seed);
    save_graph(options.out, graph);
    out << json{{"n", graph.size()}, {"edges", graph.edge_count()}, {"f", graph.dim()}, {"oov", graph.oov_count}}.dump()
        << '\n';
    return 0;
}

int cmd_train(const TrainOptions& options, std::ostream& out) {
    options.config.validate();
    const WordGraph graph = load_graph(options.graph);
    const Corpus corpus = load_inputs(options.corpus, options.images);

    const std::filesystem::path log_path =
        options.log.empty() ? std::filesystem::path(options.out.string() + ".log.jsonl") : options.log;
    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw IoError("cannot write training log: " + log_path.string());

    const TrainRun run = train(corpus, graph, options.config, [&log](const EpochLog& e) {
        json j = {{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}};
        j["val_loss"] = e.val_loss ? json(*e.val_loss) : json(nullptr);
        j["val_MSE"] = e.val_mse ? json(*e.val_mse) : json(nullptr);
        log << j.dump() << '\n';
        log.flush();
    });
    save_checkpoint(options.out, run.state);

    json result = {{"split", "val"}, {"epochs", run.state.epoch}};
    if (!run.data.val.empty()) {
        const Model model(graph, run.state.config.model);
        const auto preds = predict(model, run.state.params, run.data.val);
        result["metrics"] = to_json(evaluate_metrics(score(run.data.val, preds)));
    } else {
        result["metrics"] = nullptr;
    }
    out << result.dump() << '\n';
    return 0;
}

int cmd_evaluate(const EvalOptions& options, std::ostream& out) {
    const LoadedRun run = load_run(options);
    const Model model(run.graph, run.state.config.model);
    const auto preds = predict(model, run.state.params, run.events);
    const MetricsReport report = evaluate_metrics(score(run.events, preds));
    json j = to_json(report);
    j["mse"] = options.mse_squared ? report.mse_sq : report.mse_abs;
    j["split"] = options.split;
    out << j.dump() << '\n';
    return 0;
}

int cmd_predict(const EvalOptions& options, std::ostream& out) {
    const LoadedRun run = load_run(options);
    const Model model(run.graph, run.state.config.model);
    const auto preds = predict(model, run.state.params, run.events);
    for (const auto& p : preds) {
        json j = breakdown_json(p.breakdown);
        j["id"] = p.id;
        j["total_raw"] = run.state.range.denormalize(p.breakdown.total);
        out << j.dump() << '\n';
    }
    return 0;
}

int cmd_explain(const EvalOptions& options, std::ostream& out) {
    if (options.top == 0) throw ConfigError("--top must be positive");
    const LoadedRun run = load_run(options);
    const Model model(run.graph, run.state.config.model);
    const auto preds = predict(model, run.state.params, run.events);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i];
        struct Entry {
            std::string word;
            double score;
            bool retained;
        };
        std::vector<Entry> entries;
        for (const auto node : model.event_nodes(run.events[i])) {
            const auto it = std::find(p.members.begin(), p.members.end(), node);
            const bool retained = it != p.members.end();
            double score = 0.0;
            if (retained && !p.beta.empty()) score = p.beta[static_cast<std::size_t>(it - p.members.begin())];
            entries.push_back({run.graph.vocab.token(node), score, retained});
        }
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Entry& a, const Entry& b) { return a.score > b.score; });
        entries.resize(std::min(entries.size(), options.top));
        json words = json::array();
        for (const auto& e : entries) {
            words.push_back({{"word", e.word}, {"score", e.score}, {"retained", e.retained}});
        }
        out << json{{"id", p.id}, {"components", breakdown_json(p.breakdown)}, {"words", words}}.dump() << '\n';
    }
    return 0;
}

int cmd_synth(const SynthCommandOptions& options, std::ostream& out) {
    const SynthCorpus synth = synthesize(options.synth);
    const SynthPaths paths = write_synth(options.out, synth);
    out << json{{"events", paths.events.string()},
                {"words", paths.words.string()},
                {"planted", paths.planted.string()},
                {"count", synth.corpus.events.size()}}
               .dump()
        << '\n';
    return 0;
}

namespace {

void add_eval_flags(CLI::App* cmd, EvalOptions& o) {
    cmd->add_option("--ckpt", o.ckpt, "Checkpoint written by train")->required();
    cmd->add_option("--graph", o.graph, "Graph file the checkpoint was trained on")->required();
    cmd->add_option("--corpus", o.corpus, "Events JSONL")->required();
    cmd->add_option("--images", o.images, "Companion image .semb keyed by event id");
    cmd->add_option("--split", o.split, "Which events to score: train, val, test or all")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Interpretable popularity prediction over a PMI word graph with excitation heads"};
    app.require_subcommand(1);

    BuildGraphOptions graph_opts;
    auto* build = app.add_subcommand("build-graph", "Build the PMI word graph from a corpus and word embeddings");
    build->add_option("--corpus", graph_opts.corpus, "Events JSONL")->required();
    build->add_option("--embeddings", graph_opts.embeddings, "Word embeddings (.semb)")->required();
    build->add_option("--out", graph_opts.out, "Graph file to write")->required();
    build->add_option("--seed", graph_opts.seed, "Seed for out-of-vocabulary embedding rows")->capture_default_str();

    TrainOptions train_opts;
    std::string backbone = "gcn";
    std::string heads = "base,self,mutual,image";
    std::vector<double> split_ratios{0.8, 0.1, 0.1};
    auto& cfg = train_opts.config;
    auto* trn = app.add_subcommand("train", "Train the model with per-event SGD and cosine warm restarts");
    trn->add_option("--graph", train_opts.graph, "Graph file from build-graph")->required();
    trn->add_option("--corpus", train_opts.corpus, "Events JSONL")->required();
    trn->add_option("--out", train_opts.out, "Checkpoint to write")->required();
    trn->add_option("--log", train_opts.log, "Per-epoch JSONL log (default <out>.log.jsonl)");
    trn->add_option("--images", train_opts.images, "Companion image .semb keyed by event id");
    trn->add_option("--backbone", backbone, "gcn or gat")->capture_default_str();
    trn->add_option("--layers", cfg.model.layers, "Graph layers")->capture_default_str();
    trn->add_option("--lr", cfg.schedule.lr0, "Base SGD learning rate (reference setting 0.01)")->capture_default_str();
    trn->add_option("--lambda1", cfg.loss.lambda1, "L1 weight on self-excitation scores (reference setting 0.001)")
        ->capture_default_str();
    trn->add_option("--lambda2", cfg.loss.lambda2, "L1 weight on pairwise products (reference setting 0.001)")
        ->capture_default_str();
    trn->add_option("--huber-delta", cfg.loss.huber_delta, "Huber transition point")->capture_default_str();
    trn->add_option("--pool-ratio", cfg.model.pool_ratio, "Fraction of word nodes kept by pooling, (0, 1]")
        ->capture_default_str();
    trn->add_option("--delta", cfg.model.delta, "Percentage of W_beta entries kept by the sparsity mask")
        ->capture_default_str();
    trn->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    trn->add_option("--seed", cfg.seed, "Seed for init, split and shuffling")->capture_default_str();
    trn->add_option("--heads", heads, "Comma-separated heads: base,self,mutual,image")->capture_default_str();
    trn->add_option("--t0", cfg.schedule.t0, "First restart period in epochs")->capture_default_str();
    trn->add_option("--t-mult", cfg.schedule.t_mult, "Restart period growth factor")->capture_default_str();
    trn->add_option("--image-hidden", cfg.model.image_hidden, "Image MLP hidden width")->capture_default_str();
    trn->add_option("--split-ratios", split_ratios, "Train, val and test fractions")->expected(3)->delimiter(',')->capture_default_str();
    trn->add_flag("--mutual-diagonal", cfg.model.mutual_include_diagonal, "Include j == k terms in the mutual sum");
    trn->add_flag("--image-relu-output", cfg.model.image_relu_output, "Rectify the image MLP output layer");

    EvalOptions eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint: MSE, OL@K, mAP, NDCG");
    add_eval_flags(evaluate, eval_opts);
    evaluate->add_flag("--mse-squared", eval_opts.mse_squared, "Report the squared form under \"mse\"");

    EvalOptions predict_opts;
    predict_opts.split = "all";
    auto* pred = app.add_subcommand("predict", "Per-event prediction breakdown as JSONL");
    add_eval_flags(pred, predict_opts);

    EvalOptions explain_opts;
    explain_opts.split = "all";
    auto* explain = app.add_subcommand("explain", "Top keywords by self-excitation score per event");
    add_eval_flags(explain, explain_opts);
    explain->add_option("--top", explain_opts.top, "Words listed per event")->capture_default_str();

    SynthCommandOptions synth_opts;
    auto& so = synth_opts.synth;
    auto* syn = app.add_subcommand("synth", "Generate a corpus from a planted additive model");
    syn->add_option("--events", so.events, "Number of events")->capture_default_str();
    syn->add_option("--vocab", so.vocab, "Vocabulary size")->capture_default_str();
    syn->add_option("--seed", so.seed, "Generator seed")->capture_default_str();
    syn->add_option("--out", synth_opts.out, "Output prefix")->required();
    syn->add_option("--dim", so.dim, "Word embedding width")->capture_default_str();
    syn->add_option("--topics", so.topics, "Word topics")->capture_default_str();
    syn->add_option("--topic-purity", so.topic_purity, "Chance a token comes from the event topic")->capture_default_str();
    syn->add_option("--topic-share", so.topic_share, "Weight of the topic level in b_w")->capture_default_str();
    syn->add_option("--min-tokens", so.min_tokens, "Fewest words per event")->capture_default_str();
    syn->add_option("--max-tokens", so.max_tokens, "Most words per event")->capture_default_str();
    syn->add_option("--noise", so.noise, "Gaussian noise sigma on raw popularity")->capture_default_str();
    syn->add_option("--base", so.base, "Planted base popularity")->capture_default_str();
    syn->add_option("--eta", so.eta, "Planted mutual amplitude")->capture_default_str();
    syn->add_option("--gamma", so.gamma, "Planted mutual kernel width")->capture_default_str();
    syn->add_option("--image-dim", so.image_dim, "Image feature width, 0 for text only")->capture_default_str();
    syn->add_option("--image-scale", so.image_scale, "Planted image term amplitude")->capture_default_str();
    syn->add_flag("--zero-weights", so.zero_weights, "Plant all-zero word, mutual and image weights");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
        return 64;
    }

    try {
        if (*build) return cmd_build_graph(graph_opts, out);
        if (*trn) {
            cfg.model.backbone = parse_backbone(backbone);
            cfg.model.heads = HeadToggles::parse(heads);
            cfg.split = {split_ratios.at(0), split_ratios.at(1), split_ratios.at(2)};
            return cmd_train(train_opts, out);
        }
        if (*evaluate) return cmd_evaluate(eval_opts, out);
        if (*pred) return cmd_predict(predict_opts, out);
        if (*explain) return cmd_explain(explain_opts, out);
        if (*syn) return cmd_synth(synth_opts, out);
    } catch (const Error& e) {
        err << json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    for (const auto& a : args) argv.push_back(a.c_str());
    argv.push_back(nullptr);
    return run(static_cast<int>(args.size()), argv.data(), out, err);
}

}  // namespace smn::cli
