#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wordspot::text {

std::vector<std::string_view> split(std::string_view line, char separator);
std::string_view trim(std::string_view s);

// Shortest representation that parses back to the same double.
std::string format_double(double value);
// Whole-token parse; returns false on any trailing garbage.
bool parse_double(std::string_view token, double& value);
bool parse_int(std::string_view token, long long& value);
bool parse_uint(std::string_view token, std::uint64_t& value);

// Fixed-point rendering with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

}  // namespace wordspot::text
