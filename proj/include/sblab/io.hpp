#ifndef SBLAB_IO_HPP
#define SBLAB_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace sblab::io {

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

// Writes to a temp file in the same directory, then renames into place.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

// Deterministic shortest-round-trip double formatting for data files.
std::string fmt_double(double v);

}  // namespace sblab::io

#endif
