#include "smn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "smn/error.hpp"
#include "smn/random.hpp"

namespace smn {

using nlohmann::json;

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::io: return "io";
        case ErrorKind::format: return "format";
        case ErrorKind::validation: return "validation";
        case ErrorKind::shape: return "shape";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

std::vector<std::string> Event::distinct_tokens() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : tokens) {
        if (seen.insert(t).second) out.push_back(t);
    }
    return out;
}

namespace {

DatasetHeader parse_header(const json& j) {
    if (!j.is_object() || j.value("format", std::string{}) != kEventsFormat) {
        throw FormatError(std::string("header must declare format \"") + kEventsFormat + "\"", 1);
    }
    DatasetHeader header;
    if (!j.contains("fc") || !j.contains("count")) {
        throw FormatError("header requires \"fc\" and \"count\"", 1);
    }
    if (!j["fc"].is_null()) {
        if (!j["fc"].is_number_unsigned() || j["fc"].get<std::size_t>() == 0) {
            throw FormatError("header \"fc\" must be a positive integer or null", 1);
        }
        header.fc = j["fc"].get<std::size_t>();
    }
    if (!j["count"].is_number_unsigned()) {
        throw FormatError("header \"count\" must be a nonnegative integer", 1);
    }
    header.count = j["count"].get<std::size_t>();
    return header;
}

Event parse_event(const json& j, const DatasetHeader& header, std::size_t line) {
    if (!j.is_object()) throw FormatError("record is not a JSON object", line);
    Event ev;
    try {
        ev.id = j.at("id").get<std::string>();
        ev.tokens = j.at("tokens").get<std::vector<std::string>>();
        ev.popularity_raw = j.at("popularity").get<double>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad record field: ") + e.what(), line);
    }
    if (ev.tokens.empty()) throw FormatError("event \"" + ev.id + "\" has no tokens", line);
    if (!std::isfinite(ev.popularity_raw) || ev.popularity_raw < 0.0) {
        throw FormatError("popularity must be a finite nonnegative number", line);
    }
    ev.popularity = ev.popularity_raw;

    const auto it = j.find("image_feature");
    if (it != j.end() && !it->is_null()) {
        std::vector<double> feature;
        try {
            feature = it->get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw FormatError(std::string("bad image_feature: ") + e.what(), line);
        }
        if (!header.fc || feature.size() != *header.fc) {
            throw FormatError("image_feature dimension mismatch: got " + std::to_string(feature.size()) +
                                  ", header declares " +
                                  (header.fc ? std::to_string(*header.fc) : std::string("null")),
                              line);
        }
        ev.image_feature = std::move(feature);
    }
    return ev;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::string text;
    std::size_t line = 0;
    bool have_header = false;
    std::unordered_set<std::string> ids;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw FormatError(std::string("malformed JSON: ") + e.what(), line);
        }
        if (!have_header) {
            if (line != 1) throw FormatError("header must be the first line", line);
            corpus.header = parse_header(j);
            have_header = true;
            continue;
        }
        Event ev = parse_event(j, corpus.header, line);
        if (!ids.insert(ev.id).second) throw FormatError("duplicate id \"" + ev.id + "\"", line);
        corpus.events.push_back(std::move(ev));
    }
    if (!have_header) throw FormatError("missing header line", 1);
    if (corpus.events.size() != corpus.header.count) {
        throw FormatError("header count " + std::to_string(corpus.header.count) +
                          " does not match " + std::to_string(corpus.events.size()) + " records");
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open events file: " + path.string());
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    json header = {{"format", kEventsFormat},
                   {"fc", corpus.header.fc ? json(*corpus.header.fc) : json(nullptr)},
                   {"count", corpus.events.size()}};
    out << header.dump() << '\n';
    for (const auto& ev : corpus.events) {
        json j = {{"id", ev.id},
                  {"tokens", ev.tokens},
                  {"popularity", ev.popularity_raw},
                  {"image_feature", ev.image_feature ? json(*ev.image_feature) : json(nullptr)}};
        out << j.dump() << '\n';
    }
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write events file: " + path.string());
    write_corpus(out, corpus);
}

PopularityRange popularity_range(const std::vector<Event>& events) {
    if (events.empty()) throw ValidationError("cannot normalize popularity of an empty event list");
    const auto [lo, hi] = std::minmax_element(
        events.begin(), events.end(),
        [](const Event& a, const Event& b) { return a.popularity_raw < b.popularity_raw; });
    if (!(hi->popularity_raw > lo->popularity_raw)) {
        throw ValidationError("degenerate popularity range: all raw scores equal " +
                              std::to_string(lo->popularity_raw));
    }
    return {lo->popularity_raw, hi->popularity_raw};
}

std::vector<Event> apply_popularity_range(std::vector<Event> events, const PopularityRange& range) {
    for (auto& ev : events) ev.popularity = range.normalize(ev.popularity_raw);
    return events;
}

std::pair<std::vector<Event>, PopularityRange> normalize_popularity(std::vector<Event> events) {
    const PopularityRange range = popularity_range(events);
    return {apply_popularity_range(std::move(events), range), range};
}

Split split(const std::vector<Event>& events, const SplitRatios& ratios, std::uint64_t seed) {
    if (ratios.train <= 0.0 || ratios.val <= 0.0 || ratios.test <= 0.0 ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be positive and sum to 1");
    }
    const std::size_t n = events.size();
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n) + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n) + 1e-9));
    auto rng = make_rng(seed, 0x5b11);
    const auto order = shuffled_indices(n, rng);

    Split out;
    out.seed = seed;
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& id = events[order[i]].id;
        if (i < n_train) {
            out.train_ids.push_back(id);
        } else if (i < n_train + n_val) {
            out.val_ids.push_back(id);
        } else {
            out.test_ids.push_back(id);
        }
    }
    return out;
}

std::vector<Event> select_events(const std::vector<Event>& events, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, const Event*> by_id;
    for (const auto& ev : events) by_id.emplace(ev.id, &ev);
    std::vector<Event> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("unknown event id \"" + id + "\"");
        out.push_back(*it->second);
    }
    return out;
}

}  // namespace smn
