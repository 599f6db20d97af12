#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace smn {

/// Keyed embedding rows as stored in a `.semb` text file. Values are f32 on
/// disk and widened to double on load.
struct EmbeddingFile {
    std::size_t dim = 0;
    std::vector<std::string> keys;           // file order
    std::vector<std::vector<float>> rows;    // parallel to keys
    std::vector<std::string> warnings;       // non-fatal parse notes

    const std::vector<float>* find(const std::string& key) const;

    void add(std::string key, std::vector<float> row);

private:
    std::unordered_map<std::string, std::size_t> index_;
    friend EmbeddingFile parse_semb(std::istream& in);
};

EmbeddingFile parse_semb(std::istream& in);
EmbeddingFile load_semb(const std::filesystem::path& path);

void write_semb(std::ostream& out, const EmbeddingFile& file);
void write_semb(const std::filesystem::path& path, const EmbeddingFile& file);

}  // namespace smn
