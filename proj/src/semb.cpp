#include "smn/semb.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "smn/error.hpp"

namespace smn {

const std::vector<float>* EmbeddingFile::find(const std::string& key) const {
    const auto it = index_.find(key);
    return it == index_.end() ? nullptr : &rows[it->second];
}

void EmbeddingFile::add(std::string key, std::vector<float> row) {
    if (row.size() != dim) {
        throw ValidationError("embedding row for \"" + key + "\" has " + std::to_string(row.size()) +
                              " values, expected " + std::to_string(dim));
    }
    if (!index_.emplace(key, keys.size()).second) {
        throw ValidationError("duplicate embedding key \"" + key + "\"");
    }
    keys.push_back(std::move(key));
    rows.push_back(std::move(row));
}

namespace {

std::size_t parse_header(const std::string& line) {
    constexpr std::string_view prefix = "semb/1 dim=";
    if (line.rfind(prefix, 0) != 0) throw FormatError("expected header \"semb/1 dim=<F>\"", 1);
    std::size_t dim = 0;
    const char* first = line.data() + prefix.size();
    const char* last = line.data() + line.size();
    const auto [ptr, ec] = std::from_chars(first, last, dim);
    if (ec != std::errc{} || ptr != last || dim == 0) throw FormatError("bad dim in header", 1);
    return dim;
}

}  // namespace

EmbeddingFile parse_semb(std::istream& in) {
    EmbeddingFile file;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty embedding file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    file.dim = parse_header(line);

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            file.warnings.push_back("line " + std::to_string(lineno) + ": blank line skipped");
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) throw FormatError("expected key<TAB>values", lineno);
        std::string key = line.substr(0, tab);
        std::vector<float> row;
        row.reserve(file.dim);
        const char* p = line.data() + tab + 1;
        const char* end = line.data() + line.size();
        while (p < end) {
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            float v = 0.0f;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || (next != end && *next != ' ')) {
                throw FormatError("bad float in row \"" + key + "\"", lineno);
            }
            if (!std::isfinite(v)) throw FormatError("non-finite value in row \"" + key + "\"", lineno);
            row.push_back(v);
            p = next;
        }
        if (row.size() != file.dim) {
            throw FormatError("row \"" + key + "\" has " + std::to_string(row.size()) +
                                  " values, header declares dim=" + std::to_string(file.dim),
                              lineno);
        }
        if (file.index_.count(key)) throw FormatError("duplicate key \"" + key + "\"", lineno);
        file.index_.emplace(key, file.keys.size());
        file.keys.push_back(std::move(key));
        file.rows.push_back(std::move(row));
    }
    return file;
}

EmbeddingFile load_semb(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path.string());
    return parse_semb(in);
}

void write_semb(std::ostream& out, const EmbeddingFile& file) {
    out << "semb/1 dim=" << file.dim << '\n';
    char buf[64];
    for (std::size_t r = 0; r < file.keys.size(); ++r) {
        out << file.keys[r] << '\t';
        for (std::size_t c = 0; c < file.rows[r].size(); ++c) {
            // Shortest representation that round-trips the f32 exactly.
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), file.rows[r][c]);
            if (c) out << ' ';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

void write_semb(const std::filesystem::path& path, const EmbeddingFile& file) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embedding file: " + path.string());
    write_semb(out, file);
}

}  // namespace smn
