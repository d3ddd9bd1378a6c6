#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace corrbin {

// Shortest round-trip decimal for a double ("%.17g" trimmed to the shortest
// representation that parses back exactly).
std::string format_double(double x);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::vector<std::string> split(std::string_view text, char sep);

// FNV-1a, 64 bit, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

std::string read_file(const std::string& path);

void write_file(const std::string& path, const std::string& contents);

// Two-sided normal quantile for a confidence level in (0, 1).
double normal_quantile_two_sided(double level);

}  // namespace corrbin
