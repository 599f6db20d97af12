#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smn/corpus.hpp"
#include "smn/graph.hpp"
#include "smn/model.hpp"
#include "smn/semb.hpp"

namespace support {

smn::Event event(std::string id, std::vector<std::string> tokens, double popularity,
                 std::optional<std::vector<double>> image = std::nullopt);

std::vector<std::string> word_list(std::size_t vocab);

smn::EmbeddingFile random_embeddings(const std::vector<std::string>& keys, std::size_t dim, std::uint64_t seed);

/// Events over words w0..w{vocab-1} with 2..max_tokens tokens, popularity in
/// [0,1] and, when fc > 0, an image feature per event.
smn::Corpus random_corpus(std::size_t vocab, std::size_t events, std::size_t max_tokens, std::size_t fc,
                          std::uint64_t seed);

struct Fixture {
    smn::Corpus corpus;
    smn::EmbeddingFile words;
    smn::WordGraph graph;
};

Fixture make_fixture(std::size_t vocab, std::size_t f, std::size_t events, std::size_t fc, std::uint64_t seed,
                     std::size_t max_tokens = 5);

/// Pooling selection the model makes for the given parameters.
std::vector<std::size_t> pooled_nodes(const smn::Model& model, const smn::ModelParams& params);

/// Sum of per-event losses with the pooling selection held at `idx`.
double total_loss(const smn::Model& model, const smn::ModelParams& params, const std::vector<smn::Event>& events,
                  const std::vector<std::size_t>& idx, const smn::LossWeights& weights);

smn::ParamSet<smn::Matrix> total_gradient(const smn::Model& model, const smn::ModelParams& params,
                                          const std::vector<smn::Event>& events,
                                          const std::vector<std::size_t>& idx, const smn::LossWeights& weights);

/// Runs the command line in-process and captures both streams.
struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};
CliResult run_cli(const std::vector<std::string>& args);

std::string read_file(const std::string& path);

}  // namespace support
