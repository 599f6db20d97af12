#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace smn {

/// One webpage: pre-tokenized text, an optional image feature vector and its
/// popularity. `popularity` equals `popularity_raw` until normalized.
struct Event {
    std::string id;
    std::vector<std::string> tokens;
    std::optional<std::vector<double>> image_feature;
    double popularity_raw = 0.0;
    double popularity = 0.0;

    /// Tokens with duplicates removed, first-occurrence order.
    std::vector<std::string> distinct_tokens() const;
};

struct DatasetHeader {
    std::optional<std::size_t> fc;  // image feature width, absent for text-only corpora
    std::size_t count = 0;
};

struct Corpus {
    DatasetHeader header;
    std::vector<Event> events;
};

inline constexpr const char* kEventsFormat = "smn-events/1";

Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in);

void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
void write_corpus(std::ostream& out, const Corpus& corpus);

/// Min/max of the raw popularity used for the affine map onto [0, 1].
struct PopularityRange {
    double min = 0.0;
    double max = 1.0;

    double normalize(double raw) const { return (raw - min) / (max - min); }
    double denormalize(double value) const { return min + value * (max - min); }
};

PopularityRange popularity_range(const std::vector<Event>& events);

/// Fits the range on `events` and returns them normalized.
std::pair<std::vector<Event>, PopularityRange> normalize_popularity(std::vector<Event> events);

std::vector<Event> apply_popularity_range(std::vector<Event> events, const PopularityRange& range);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct Split {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;

    bool operator==(const Split&) const = default;
};

Split split(const std::vector<Event>& events, const SplitRatios& ratios, std::uint64_t seed);

/// Events whose id is in `ids`, in the order of `ids`.
std::vector<Event> select_events(const std::vector<Event>& events,
                                 const std::vector<std::string>& ids);

}  // namespace smn
