#pragma once

// Small I/O helpers shared by the CSV/JSON writers.

#include <filesystem>
#include <string>

namespace evcharge::io {

/// RFC 4180 record terminator.
inline constexpr const char* kEol = "\r\n";

/// Shortest-roundtrip-ish fixed formatting used in every output file, so
/// repeated runs are byte-identical.
std::string number(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

} // namespace evcharge::io
