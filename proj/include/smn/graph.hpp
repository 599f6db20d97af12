#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smn/corpus.hpp"
#include "smn/semb.hpp"
#include "smn/types.hpp"

namespace smn {

/// Token <-> node index, in first-occurrence order over the corpus.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens);

    static Vocabulary from_events(const std::vector<Event>& events);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(std::size_t index) const { return tokens_.at(index); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::optional<std::size_t> find(const std::string& token) const;

    /// Order-sensitive FNV-1a digest, hex encoded. Ties checkpoints to graphs.
    std::string hash() const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Document-level co-occurrence: an event adds at most one to d(i) and to
/// each symmetric cell d(i,j), d(j,i).
struct CooccurrenceCounts {
    std::map<std::pair<std::size_t, std::size_t>, std::int64_t> pair_counts;  // both (i,j) and (j,i)
    std::vector<std::int64_t> unigram_counts;
    std::int64_t total_pairs = 0;
    std::int64_t total_unigrams = 0;

    std::int64_t pair(std::size_t i, std::size_t j) const;
};

CooccurrenceCounts count_cooccurrence(const std::vector<Event>& events, const Vocabulary& vocab);

/// Point-wise mutual information of two distinct nodes; nullopt when the pair
/// never co-occurs (no edge).
std::optional<double> pmi(const CooccurrenceCounts& counts, std::size_t i, std::size_t j);

struct WordGraph {
    Vocabulary vocab;
    SparseMatrix adjacency;   // clipped PMI, symmetric, zero diagonal
    Matrix embeddings;        // H0, N x F
    std::size_t oov_count = 0;

    std::size_t size() const { return vocab.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(embeddings.cols()); }
    std::size_t edge_count() const;  // unordered pairs with A(i,j) > 0
};

/// Builds the word graph. Tokens missing from `embeddings` get a deterministic
/// N(0, 1/F) row derived from (`seed`, token).
WordGraph build_graph(const std::vector<Event>& events, const EmbeddingFile& embeddings,
                      std::uint64_t seed = 0);

inline constexpr const char* kGraphFormat = "smn-graph/1";

void save_graph(const std::filesystem::path& path, const WordGraph& graph);
WordGraph load_graph(const std::filesystem::path& path);
std::string serialize_graph(const WordGraph& graph);
WordGraph deserialize_graph(const std::string& text);

}  // namespace smn
