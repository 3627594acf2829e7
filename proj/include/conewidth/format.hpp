#pragma once

#include <string>
#include <vector>

namespace cw {

// Shortest round-trip decimal form of a double.
std::string fmt_double(double v);

std::string csv_join(const std::vector<std::string>& cells);

// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace cw
