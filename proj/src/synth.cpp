#include "smn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "smn/error.hpp"
#include "smn/random.hpp"

namespace smn {

void SynthOptions::validate() const {
    if (events == 0) throw ConfigError("synth needs at least one event");
    if (vocab < 2) throw ConfigError("synth vocabulary must have at least two words");
    if (dim == 0) throw ConfigError("synth embedding dim must be positive");
    if (min_tokens == 0 || min_tokens > max_tokens) throw ConfigError("synth token range is invalid");
    if (max_tokens > vocab) throw ConfigError("synth max tokens exceeds vocabulary size");
    if (!(noise >= 0.0)) throw ConfigError("synth noise must be nonnegative");
    if (topics == 0 || topics > vocab) throw ConfigError("synth topic count must be in [1, vocab]");
    if (!(topic_purity >= 0.0 && topic_purity <= 1.0)) throw ConfigError("synth topic purity must be in [0, 1]");
    if (!(topic_share >= 0.0 && topic_share <= 1.0)) throw ConfigError("synth topic share must be in [0, 1]");
}

nlohmann::json PlantedModel::to_json() const {
    nlohmann::json weights = nlohmann::json::object();
    for (std::size_t i = 0; i < words.size(); ++i) weights[words[i]] = word_weights[i];
    return {{"base", base},
            {"eta", eta},
            {"gamma", gamma},
            {"noise", noise},
            {"word_order", words},
            {"word_weights", weights},
            {"word_topics", word_topics},
            {"image_weights", image_weights},
            {"image_scale", image_scale}};
}

PlantedModel PlantedModel::from_json(const nlohmann::json& j) {
    PlantedModel p;
    p.base = j.at("base").get<double>();
    p.eta = j.at("eta").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.noise = j.at("noise").get<double>();
    p.words = j.at("word_order").get<std::vector<std::string>>();
    for (const auto& w : p.words) p.word_weights.push_back(j.at("word_weights").at(w).get<double>());
    if (j.contains("word_topics")) p.word_topics = j.at("word_topics").get<std::vector<std::size_t>>();
    p.image_weights = j.at("image_weights").get<std::vector<double>>();
    p.image_scale = j.at("image_scale").get<double>();
    return p;
}

SynthCorpus synthesize(const SynthOptions& options) {
    options.validate();
    SynthCorpus out;
    auto rng = make_rng(options.seed, 0x5E7A);
    std::normal_distribution<double> normal(0.0, 1.0);

    PlantedModel& planted = out.planted;
    planted.base = options.base;
    planted.eta = options.zero_weights ? 0.0 : options.eta;
    planted.gamma = options.gamma;
    planted.noise = options.noise;
    planted.image_scale = options.zero_weights ? 0.0 : options.image_scale;

    const int width = static_cast<int>(std::to_string(options.vocab - 1).size());
    const std::size_t topics = options.topics;
    std::vector<double> level(topics, 0.5);
    if (topics > 1) {
        const auto order = shuffled_indices(topics, rng);
        for (std::size_t t = 0; t < topics; ++t) level[order[t]] = static_cast<double>(t) / static_cast<double>(topics - 1);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(options.dim));
    std::vector<std::vector<double>> centroid(topics, std::vector<double>(options.dim));
    for (auto& c : centroid)
        for (auto& v : c) v = normal(rng) * scale;

    std::vector<std::vector<std::size_t>> members(topics);
    out.words.dim = options.dim;
    std::vector<std::vector<double>> embedding(options.vocab);
    for (std::size_t w = 0; w < options.vocab; ++w) {
        char name[32];
        std::snprintf(name, sizeof(name), "w%0*zu", width, w);
        const std::size_t t = w * topics / options.vocab;
        members[t].push_back(w);
        planted.words.emplace_back(name);
        planted.word_topics.push_back(t);
        const double b = options.topic_share * level[t] + (1.0 - options.topic_share) * uniform01(rng);
        planted.word_weights.push_back(options.zero_weights ? 0.0 : b);
        std::vector<float> row(options.dim);
        for (std::size_t c = 0; c < options.dim; ++c)
            row[c] = static_cast<float>(0.6 * centroid[t][c] + 0.8 * normal(rng) * scale);
        // The planted kernel uses exactly what the model will read from disk.
        embedding[w].assign(row.begin(), row.end());
        out.words.add(name, std::move(row));
    }
    for (std::size_t c = 0; c < options.image_dim; ++c) {
        planted.image_weights.push_back(normal(rng) / std::sqrt(static_cast<double>(options.image_dim)));
    }

    out.corpus.header.fc = options.image_dim > 0 ? std::optional<std::size_t>(options.image_dim) : std::nullopt;
    out.corpus.header.count = options.events;
    const int id_width = static_cast<int>(std::to_string(options.events - 1).size());
    const std::size_t span = options.max_tokens - options.min_tokens + 1;
    for (std::size_t e = 0; e < options.events; ++e) {
        Event ev;
        char id[32];
        std::snprintf(id, sizeof(id), "e%0*zu", id_width, e);
        ev.id = id;
        const std::size_t m = options.min_tokens + static_cast<std::size_t>(rng() % span);
        const auto& pool = members[static_cast<std::size_t>(rng() % topics)];
        std::vector<std::size_t> words;
        std::vector<char> used(options.vocab, 0);
        while (words.size() < m) {
            std::size_t w = uniform01(rng) < options.topic_purity ? pool[static_cast<std::size_t>(rng() % pool.size())]
                                                                  : static_cast<std::size_t>(rng() % options.vocab);
            if (used[w]) continue;
            used[w] = 1;
            words.push_back(w);
        }

        double raw = planted.base;
        for (auto w : words) {
            ev.tokens.push_back(planted.words[w]);
            raw += planted.word_weights[w];
        }
        double kernel = 0.0;
        for (auto j : words) {
            for (auto k : words) {
                if (j == k) continue;
                double d2 = 0.0;
                for (std::size_t c = 0; c < options.dim; ++c) {
                    const double diff = embedding[j][c] - embedding[k][c];
                    d2 += diff * diff;
                }
                kernel += std::exp(-planted.gamma * d2);
            }
        }
        raw += planted.eta * kernel;

        if (options.image_dim > 0) {
            std::vector<double> x(options.image_dim);
            double dot = 0.0;
            for (std::size_t c = 0; c < options.image_dim; ++c) {
                // Stored as f32 so the planted term matches what gets reloaded.
                x[c] = static_cast<double>(static_cast<float>(normal(rng)));
                dot += planted.image_weights[c] * x[c];
            }
            raw += planted.image_scale * (1.0 + std::tanh(dot));
            ev.image_feature = std::move(x);
        }
        if (planted.noise > 0.0) raw += planted.noise * normal(rng);
        ev.popularity_raw = std::max(0.0, raw);
        ev.popularity = ev.popularity_raw;
        out.corpus.events.push_back(std::move(ev));
    }
    return out;
}

SynthPaths synth_paths(const std::filesystem::path& prefix) {
    const std::string p = prefix.string();
    return {p + ".events.jsonl", p + ".words.semb", p + ".planted.json"};
}

SynthPaths write_synth(const std::filesystem::path& prefix, const SynthCorpus& synth) {
    const SynthPaths paths = synth_paths(prefix);
    write_corpus(paths.events, synth.corpus);
    write_semb(paths.words, synth.words);
    std::ofstream out(paths.planted);
    if (!out) throw IoError("cannot write planted weights: " + paths.planted.string());
    out << synth.planted.to_json().dump(2) << '\n';
    return paths;
}

}  // namespace smn
