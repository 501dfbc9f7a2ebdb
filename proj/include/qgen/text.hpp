#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qgen::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_whitespace(std::string_view s);

// Lower-cased alphanumeric word tokens; camelCase boundaries also split.
std::vector<std::string> word_tokens(std::string_view s);

// Counts whole-word, case-insensitive occurrences of `phrase` in `s`.
std::size_t count_phrase(std::string_view s, std::string_view phrase);

// Shortest round-trip decimal in fixed notation (no exponent, no
// thousands separators). -0 renders as "0".
std::string format_number(double value);

// 64-bit FNV-1a, rendered as 16 lower-case hex digits.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

// Calendar dates as days since 1970-01-01.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);
void civil_from_days(std::int64_t days, int& year, unsigned& month, unsigned& day);

// Formats use the tokens YYYY, MM and DD; every other character is a
// literal separator. MM and DD accept one or two digits when parsing.
std::optional<std::int64_t> parse_date(std::string_view cell, std::string_view format);
std::string format_date(std::int64_t days, std::string_view format);

}  // namespace qgen::text
