#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smn/error.hpp"
#include "smn/synth.hpp"
#include "smn/train.hpp"

namespace smn::cli {

struct BuildGraphOptions {
    std::filesystem::path corpus;
    std::filesystem::path embeddings;
    std::filesystem::path out;
    std::uint64_t seed = 0;
};

struct TrainOptions {
    std::filesystem::path graph;
    std::filesystem::path corpus;
    std::filesystem::path out;
    std::filesystem::path log;  // defaults to <out>.log.jsonl
    std::optional<std::filesystem::path> images;
    TrainConfig config;
};

struct EvalOptions {
    std::filesystem::path ckpt;
    std::filesystem::path graph;
    std::filesystem::path corpus;
    std::optional<std::filesystem::path> images;
    std::string split = "test";  // train | val | test | all
    bool mse_squared = false;
    std::size_t top = 8;
};

struct SynthCommandOptions {
    SynthOptions synth;
    std::filesystem::path out;  // prefix
};

/// Exit status per error kind; 0 on success.
int exit_code(ErrorKind kind);

int cmd_build_graph(const BuildGraphOptions& options, std::ostream& out);
int cmd_train(const TrainOptions& options, std::ostream& out);
int cmd_evaluate(const EvalOptions& options, std::ostream& out);
int cmd_predict(const EvalOptions& options, std::ostream& out);
int cmd_explain(const EvalOptions& options, std::ostream& out);
int cmd_synth(const SynthCommandOptions& options, std::ostream& out);

/// Parses argv and dispatches. Failures print one JSON line
/// {"error": <kind>, "message": ...} to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smn::cli
