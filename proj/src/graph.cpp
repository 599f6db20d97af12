#include "smn/graph.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "smn/error.hpp"
#include "smn/random.hpp"

namespace smn {

using nlohmann::json;

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) {
            throw ValidationError("duplicate vocabulary token \"" + tokens_[i] + "\"");
        }
    }
}

Vocabulary Vocabulary::from_events(const std::vector<Event>& events) {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& ev : events) {
        for (const auto& t : ev.tokens) {
            if (seen.emplace(t, tokens.size()).second) tokens.push_back(t);
        }
    }
    return Vocabulary(std::move(tokens));
}

std::optional<std::size_t> Vocabulary::find(const std::string& token) const {
    const auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::string Vocabulary::hash() const {
    std::uint64_t h = fnv1a({});
    for (const auto& t : tokens_) {
        h = fnv1a(t, h);
        h = fnv1a(std::string_view("\0", 1), h);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::int64_t CooccurrenceCounts::pair(std::size_t i, std::size_t j) const {
    const auto it = pair_counts.find({i, j});
    return it == pair_counts.end() ? 0 : it->second;
}

CooccurrenceCounts count_cooccurrence(const std::vector<Event>& events, const Vocabulary& vocab) {
    if (events.empty()) throw ValidationError("cannot count co-occurrence over an empty corpus");
    CooccurrenceCounts counts;
    counts.unigram_counts.assign(vocab.size(), 0);
    for (const auto& ev : events) {
        std::vector<std::size_t> nodes;
        for (const auto& t : ev.distinct_tokens()) {
            const auto idx = vocab.find(t);
            if (!idx) throw ValidationError("token \"" + t + "\" missing from vocabulary");
            nodes.push_back(*idx);
        }
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            ++counts.unigram_counts[nodes[a]];
            ++counts.total_unigrams;
            for (std::size_t b = a + 1; b < nodes.size(); ++b) {
                ++counts.pair_counts[{nodes[a], nodes[b]}];
                ++counts.pair_counts[{nodes[b], nodes[a]}];
                counts.total_pairs += 2;
            }
        }
    }
    return counts;
}

std::optional<double> pmi(const CooccurrenceCounts& counts, std::size_t i, std::size_t j) {
    if (i == j) throw ValidationError("pmi requires two distinct nodes");
    const std::int64_t dij = counts.pair(i, j);
    if (dij == 0) return std::nullopt;
    const auto di = static_cast<double>(counts.unigram_counts.at(i));
    const auto dj = static_cast<double>(counts.unigram_counts.at(j));
    const auto total_u = static_cast<double>(counts.total_unigrams);
    const double joint = static_cast<double>(dij) / static_cast<double>(counts.total_pairs);
    return std::log(joint * (total_u * total_u) / (di * dj));
}

std::size_t WordGraph::edge_count() const {
    std::size_t n = 0;
    for (Eigen::Index r = 0; r < adjacency.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(adjacency, r); it; ++it) {
            if (it.col() > r && it.value() > 0.0) ++n;
        }
    }
    return n;
}

WordGraph build_graph(const std::vector<Event>& events, const EmbeddingFile& embeddings,
                      std::uint64_t seed) {
    WordGraph graph;
    graph.vocab = Vocabulary::from_events(events);
    const std::size_t n = graph.vocab.size();
    const CooccurrenceCounts counts = count_cooccurrence(events, graph.vocab);

    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& [key, count] : counts.pair_counts) {
        const auto [i, j] = key;
        if (i >= j) continue;
        const double w = *pmi(counts, i, j);
        if (w > 0.0) {
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
            triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), w);
        }
    }
    graph.adjacency.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    graph.adjacency.setFromTriplets(triplets.begin(), triplets.end());
    graph.adjacency.makeCompressed();

    const std::size_t dim = embeddings.dim;
    if (dim == 0) throw ValidationError("embedding file declares dim=0");
    graph.embeddings.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t r = 0; r < n; ++r) {
        const std::string& token = graph.vocab.token(r);
        if (const auto* row = embeddings.find(token)) {
            if (row->size() != dim) {
                throw ValidationError("embedding for \"" + token + "\" has dimension " +
                                      std::to_string(row->size()) + ", expected " + std::to_string(dim));
            }
            for (std::size_t c = 0; c < dim; ++c) graph.embeddings(r, c) = static_cast<double>((*row)[c]);
        } else {
            ++graph.oov_count;
            auto rng = make_rng(seed, fnv1a(token));
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t c = 0; c < dim; ++c) graph.embeddings(r, c) = normal(rng) * scale;
        }
    }
    return graph;
}

std::string serialize_graph(const WordGraph& graph) {
    json edges = json::array();
    for (Eigen::Index r = 0; r < graph.adjacency.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(graph.adjacency, r); it; ++it) {
            if (it.col() > r) edges.push_back(json::array({r, it.col(), it.value()}));
        }
    }
    json h0 = json::array();
    for (Eigen::Index r = 0; r < graph.embeddings.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < graph.embeddings.cols(); ++c) row.push_back(graph.embeddings(r, c));
        h0.push_back(std::move(row));
    }
    json j = {{"format", kGraphFormat},
              {"n", graph.size()},
              {"f", graph.dim()},
              {"vocab_hash", graph.vocab.hash()},
              {"oov_count", graph.oov_count},
              {"tokens", graph.vocab.tokens()},
              {"edges", std::move(edges)},
              {"h0", std::move(h0)}};
    return j.dump() + "\n";
}

WordGraph deserialize_graph(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed graph file: ") + e.what());
    }
    if (j.value("format", std::string{}) != kGraphFormat) {
        throw FormatError(std::string("graph file must declare format \"") + kGraphFormat + "\"");
    }
    WordGraph graph;
    try {
        graph.vocab = Vocabulary(j.at("tokens").get<std::vector<std::string>>());
        const auto n = static_cast<Eigen::Index>(graph.vocab.size());
        const auto f = j.at("f").get<Eigen::Index>();
        if (j.at("n").get<Eigen::Index>() != n) throw FormatError("graph n does not match token count");
        graph.oov_count = j.value("oov_count", std::size_t{0});
        std::vector<Eigen::Triplet<double>> triplets;
        for (const auto& e : j.at("edges")) {
            const auto r = e.at(0).get<int>();
            const auto c = e.at(1).get<int>();
            const auto w = e.at(2).get<double>();
            if (r < 0 || c < 0 || r >= n || c >= n || r == c) throw FormatError("edge index out of range");
            triplets.emplace_back(r, c, w);
            triplets.emplace_back(c, r, w);
        }
        graph.adjacency.resize(n, n);
        graph.adjacency.setFromTriplets(triplets.begin(), triplets.end());
        graph.adjacency.makeCompressed();
        graph.embeddings.resize(n, f);
        const auto& h0 = j.at("h0");
        if (static_cast<Eigen::Index>(h0.size()) != n) throw FormatError("h0 row count mismatch");
        for (Eigen::Index r = 0; r < n; ++r) {
            if (static_cast<Eigen::Index>(h0[r].size()) != f) throw FormatError("h0 row width mismatch");
            for (Eigen::Index c = 0; c < f; ++c) graph.embeddings(r, c) = h0[r][c].get<double>();
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad graph file: ") + e.what());
    }
    if (j.contains("vocab_hash") && j["vocab_hash"] != graph.vocab.hash()) {
        throw ValidationError("graph vocab_hash does not match its token list");
    }
    return graph;
}

void save_graph(const std::filesystem::path& path, const WordGraph& graph) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write graph file: " + path.string());
    out << serialize_graph(graph);
}

WordGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open graph file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_graph(ss.str());
}

}  // namespace smn
