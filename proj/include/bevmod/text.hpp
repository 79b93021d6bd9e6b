#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bevmod::text {

// Locale-independent decimal parsing; accepts a leading '+' and exponent
// notation. Returns nullopt unless the whole token is consumed.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::vector<std::string_view> split_ws(std::string_view line);
std::string_view trim(std::string_view s);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);
// Fixed-point with `digits` decimals, locale-independent.
std::string format_fixed(double value, int digits);

}  // namespace bevmod::text
