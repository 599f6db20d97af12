#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "smn/corpus.hpp"
#include "smn/semb.hpp"

namespace smn {

/// Planted additive ground truth:
///   raw = base + sum_w b_w + eta * sum_{j != k} exp(-gamma ||e_j - e_k||^2)
///         + image_scale * (1 + tanh(v . x)) + noise
/// Words are split into topics. An event draws a topic and takes each token
/// from it with probability `topic_purity`. b_w mixes a per-topic level with
/// a per-word uniform draw by `topic_share`.
struct SynthOptions {
    std::size_t events = 200;
    std::size_t vocab = 50;
    std::size_t dim = 64;          // word embedding width
    std::size_t topics = 6;
    double topic_purity = 0.85;
    double topic_share = 0.7;
    std::size_t min_tokens = 3;
    std::size_t max_tokens = 8;
    std::uint64_t seed = 0;
    double noise = 0.02;           // Gaussian sigma on the raw score
    double base = 1.0;
    double eta = 0.05;
    double gamma = 1.0;
    std::size_t image_dim = 0;     // 0 = text-only corpus
    double image_scale = 1.0;
    bool zero_weights = false;     // b_w = eta = image_scale = 0

    void validate() const;
};

struct PlantedModel {
    double base = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
    double noise = 0.0;
    std::vector<std::string> words;
    std::vector<double> word_weights;   // b_w, parallel to words
    std::vector<std::size_t> word_topics;
    std::vector<double> image_weights;  // v
    double image_scale = 0.0;

    nlohmann::json to_json() const;
    static PlantedModel from_json(const nlohmann::json& j);
};

struct SynthCorpus {
    Corpus corpus;
    EmbeddingFile words;  // planted e_w, also the initial graph embeddings
    PlantedModel planted;
};

SynthCorpus synthesize(const SynthOptions& options);

struct SynthPaths {
    std::filesystem::path events;
    std::filesystem::path words;
    std::filesystem::path planted;
};

/// `<prefix>.events.jsonl`, `<prefix>.words.semb`, `<prefix>.planted.json`.
SynthPaths synth_paths(const std::filesystem::path& prefix);
SynthPaths write_synth(const std::filesystem::path& prefix, const SynthCorpus& synth);

}  // namespace smn
