#include "qgen/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace qgen::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

unsigned days_in_month(int year, unsigned month) {
    static constexpr unsigned kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return kDays[month - 1];
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = lower(c);
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (lower(a[i]) != lower(b[i])) return false;
    return true;
}

bool icontains(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](char a, char b) { return lower(a) == lower(b); });
    return it != haystack.end();
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (!is_alnum(c)) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
            continue;
        }
        bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
        bool prev_lower = i > 0 && std::islower(static_cast<unsigned char>(s[i - 1])) != 0;
        if (upper && prev_lower && !cur.empty()) out.push_back(std::move(cur)), cur.clear();
        cur.push_back(lower(c));
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::size_t count_phrase(std::string_view s, std::string_view phrase) {
    if (phrase.empty() || phrase.size() > s.size()) return 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + phrase.size() <= s.size(); ++i) {
        if (!iequals(s.substr(i, phrase.size()), phrase)) continue;
        bool left_ok = i == 0 || !is_alnum(s[i - 1]);
        bool right_ok = i + phrase.size() == s.size() || !is_alnum(s[i + phrase.size()]);
        if (left_ok && right_ok) ++count;
    }
    return count;
}

std::string format_number(double value) {
    if (value == 0.0) return "0";
    if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    char buf[512];
    auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, unsigned& month, unsigned& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = doy - (153 * mp + 2) / 5 + 1;
    month = mp < 10 ? mp + 3 : mp - 9;
    year = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (month <= 2));
}

std::optional<std::int64_t> parse_date(std::string_view cell, std::string_view format) {
    int year = -1;
    int month = -1;
    int day = -1;
    std::size_t pos = 0;
    auto read_digits = [&](std::size_t min_len, std::size_t max_len) -> std::optional<int> {
        std::size_t start = pos;
        int v = 0;
        while (pos < cell.size() && pos - start < max_len &&
               std::isdigit(static_cast<unsigned char>(cell[pos]))) {
            v = v * 10 + (cell[pos] - '0');
            ++pos;
        }
        if (pos - start < min_len) return std::nullopt;
        return v;
    };
    for (std::size_t f = 0; f < format.size();) {
        std::string_view rest = format.substr(f);
        if (rest.starts_with("YYYY")) {
            auto v = read_digits(4, 4);
            if (!v) return std::nullopt;
            year = *v;
            f += 4;
        } else if (rest.starts_with("MM")) {
            auto v = read_digits(1, 2);
            if (!v) return std::nullopt;
            month = *v;
            f += 2;
        } else if (rest.starts_with("DD")) {
            auto v = read_digits(1, 2);
            if (!v) return std::nullopt;
            day = *v;
            f += 2;
        } else {
            if (pos >= cell.size() || cell[pos] != format[f]) return std::nullopt;
            ++pos;
            ++f;
        }
    }
    if (pos != cell.size() || year < 0 || month < 1 || month > 12 || day < 1) return std::nullopt;
    if (static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month))) return std::nullopt;
    return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
}

std::string format_date(std::int64_t days, std::string_view format) {
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    std::string out;
    char buf[16];
    for (std::size_t f = 0; f < format.size();) {
        std::string_view rest = format.substr(f);
        if (rest.starts_with("YYYY")) {
            std::snprintf(buf, sizeof buf, "%04d", y);
            out += buf;
            f += 4;
        } else if (rest.starts_with("MM")) {
            std::snprintf(buf, sizeof buf, "%02u", m);
            out += buf;
            f += 2;
        } else if (rest.starts_with("DD")) {
            std::snprintf(buf, sizeof buf, "%02u", d);
            out += buf;
            f += 2;
        } else {
            out.push_back(format[f++]);
        }
    }
    return out;
}

}  // namespace qgen::text
