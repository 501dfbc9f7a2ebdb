#include "qgen/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "qgen/error.hpp"
#include "qgen/stats.hpp"
#include "qgen/text.hpp"

namespace qgen {

namespace {

constexpr std::string_view kCurrencySymbols[] = {"$", "\xE2\x82\xAC", "\xC2\xA3"};  // $ € £

std::vector<std::vector<std::string>> parse_delimited(std::string_view bytes, char delim) {
    if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool row_has_content = false;

    auto end_row = [&] {
        row.push_back(std::move(cell));
        cell.clear();
        // A physically empty line is not a row.
        if (row_has_content || row.size() > 1) rows.push_back(std::move(row));
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < bytes.size(); ++i) {
        char c = bytes[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        if (c == '"' && text::trim(cell).empty()) {
            cell.clear();
            in_quotes = true;
            row_has_content = true;
        } else if (c == delim) {
            row.push_back(std::move(cell));
            cell.clear();
            row_has_content = true;
        } else if (c == '\r') {
            if (i + 1 < bytes.size() && bytes[i + 1] == '\n') ++i;
            end_row();
        } else if (c == '\n') {
            end_row();
        } else {
            cell.push_back(c);
            if (!std::isspace(static_cast<unsigned char>(c))) row_has_content = true;
        }
    }
    if (!cell.empty() || !row.empty() || row_has_content) end_row();
    return rows;
}

bool valid_thousands_grouping(std::string_view int_part) {
    std::size_t first = 0;
    while (first < int_part.size() && int_part[first] != ',') ++first;
    if (first == int_part.size()) return true;
    if (first == 0 || first > 3) return false;
    std::size_t i = first;
    while (i < int_part.size()) {
        if (int_part[i] != ',' || i + 4 > int_part.size()) return false;
        for (std::size_t k = 1; k <= 3; ++k)
            if (!std::isdigit(static_cast<unsigned char>(int_part[i + k]))) return false;
        i += 4;
    }
    return true;
}

struct RawColumn {
    std::string name;
    std::vector<std::string> cells;  // trimmed
    std::vector<std::uint8_t> null_mask;
};

void fill_numeric_stats(Column& col) {
    std::vector<double> values = col.non_null_numbers();
    col.stats.null_count = col.size() - values.size();
    std::set<double> distinct(values.begin(), values.end());
    col.stats.distinct_count = distinct.size();
    if (values.empty()) return;

    NumericStats s;
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size()));
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = stats::quantile_sorted(values, 0.25);
    s.q2 = stats::quantile_sorted(values, 0.50);
    s.q3 = stats::quantile_sorted(values, 0.75);
    col.stats.numeric = s;
}

void fill_date_stats(Column& col) {
    std::vector<std::int64_t> values;
    for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.is_null(r)) values.push_back(col.days[r]);
    col.stats.null_count = col.size() - values.size();
    col.stats.distinct_count = std::set<std::int64_t>(values.begin(), values.end()).size();
    if (values.empty()) return;
    std::sort(values.begin(), values.end());
    col.stats.date = DateStats{values.front(), values.back(), values[(values.size() - 1) / 2]};
}

void fill_label_stats(Column& col) {
    std::map<std::string, std::size_t> hist;
    for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.is_null(r)) ++hist[col.label(r)];
    std::size_t non_null = 0;
    for (auto& [_, n] : hist) non_null += n;
    col.stats.null_count = col.size() - non_null;
    col.stats.distinct_count = hist.size();
    col.stats.categorical = std::move(hist);
}

Column make_label_column(const RawColumn& raw, ColumnKind kind) {
    Column col;
    col.name = raw.name;
    col.kind = kind;
    col.null_mask = raw.null_mask;
    std::set<std::string> dict;
    for (std::size_t r = 0; r < raw.cells.size(); ++r)
        if (!raw.null_mask[r]) dict.insert(raw.cells[r]);
    col.labels.assign(dict.begin(), dict.end());
    col.codes.assign(raw.cells.size(), -1);
    for (std::size_t r = 0; r < raw.cells.size(); ++r) {
        if (raw.null_mask[r]) continue;
        auto it = std::lower_bound(col.labels.begin(), col.labels.end(), raw.cells[r]);
        col.codes[r] = static_cast<std::int32_t>(it - col.labels.begin());
    }
    fill_label_stats(col);
    return col;
}

bool name_has_id_token(std::string_view name) {
    for (auto& tok : text::word_tokens(name))
        if (tok == "id") return true;
    return false;
}

Column infer_column(const RawColumn& raw, const IngestOptions& options) {
    std::size_t non_null = 0;
    for (auto m : raw.null_mask) non_null += m == 0;
    const double n = static_cast<double>(non_null);

    std::optional<Column> typed;
    if (non_null > 0) {
        // numeric vote
        std::size_t parsed = 0;
        std::vector<double> values(raw.cells.size(), 0.0);
        std::vector<std::uint8_t> ok(raw.cells.size(), 0);
        std::string currency;
        for (std::size_t r = 0; r < raw.cells.size(); ++r) {
            if (raw.null_mask[r]) continue;
            std::string sym;
            if (auto v = parse_numeric_cell(raw.cells[r], &sym)) {
                values[r] = *v;
                ok[r] = 1;
                ++parsed;
                if (currency.empty() && !sym.empty()) currency = sym;
            }
        }
        if (static_cast<double>(parsed) >= options.numeric_threshold * n) {
            Column col;
            col.name = raw.name;
            col.kind = ColumnKind::Numerical;
            col.currency = currency;
            col.null_mask.resize(raw.cells.size());
            col.numbers.resize(raw.cells.size(), 0.0);
            for (std::size_t r = 0; r < raw.cells.size(); ++r) {
                col.null_mask[r] = ok[r] ? 0 : 1;
                col.numbers[r] = ok[r] ? values[r] : 0.0;
            }
            fill_numeric_stats(col);
            typed = std::move(col);
        }
    }
    if (!typed && non_null > 0) {
        for (const auto& format : options.date_formats) {
            std::size_t parsed = 0;
            std::vector<std::optional<std::int64_t>> days(raw.cells.size());
            for (std::size_t r = 0; r < raw.cells.size(); ++r) {
                if (raw.null_mask[r]) continue;
                days[r] = text::parse_date(raw.cells[r], format);
                parsed += days[r].has_value();
            }
            if (static_cast<double>(parsed) < options.date_threshold * n) continue;
            Column col;
            col.name = raw.name;
            col.kind = ColumnKind::Date;
            col.date_format = format;
            col.null_mask.resize(raw.cells.size());
            col.days.resize(raw.cells.size(), 0);
            for (std::size_t r = 0; r < raw.cells.size(); ++r) {
                col.null_mask[r] = days[r] ? 0 : 1;
                col.days[r] = days[r].value_or(0);
            }
            fill_date_stats(col);
            typed = std::move(col);
            break;
        }
    }
    if (!typed) typed = make_label_column(raw, ColumnKind::Categorical);

    Column& col = *typed;
    const std::size_t typed_non_null = col.non_null_count();
    if (typed_non_null > 0) {
        double distinct_ratio =
            static_cast<double>(col.stats.distinct_count) / static_cast<double>(typed_non_null);
        if (distinct_ratio >= options.id_threshold &&
            (col.kind == ColumnKind::Categorical || name_has_id_token(col.name))) {
            return make_label_column(raw, ColumnKind::Identifier);
        }
    }
    return std::move(col);
}

std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\r\n") != std::string::npos || s != text::trim(s);
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string_view kind_name(ColumnKind kind) noexcept {
    switch (kind) {
        case ColumnKind::Numerical: return "Numerical";
        case ColumnKind::Categorical: return "Categorical";
        case ColumnKind::Date: return "Date";
        case ColumnKind::Identifier: return "Identifier";
    }
    return "Unknown";
}

bool is_null_token(std::string_view cell) {
    std::string t = text::trim(cell);
    return t.empty() || text::iequals(t, "NA") || text::iequals(t, "N/A") || text::iequals(t, "null");
}

std::optional<double> parse_numeric_cell(std::string_view cell, std::string* currency) {
    std::string s = text::trim(cell);
    std::string_view v = s;
    bool negative = false;
    auto take_sign = [&] {
        if (!v.empty() && (v.front() == '-' || v.front() == '+')) {
            negative = negative != (v.front() == '-');
            v.remove_prefix(1);
        }
    };
    take_sign();
    for (auto sym : kCurrencySymbols) {
        if (v.starts_with(sym)) {
            if (currency) *currency = std::string(sym);
            v.remove_prefix(sym.size());
            take_sign();
            break;
        }
    }
    if (v.empty()) return std::nullopt;

    std::string digits(v);
    if (digits.find(',') != std::string::npos) {
        const std::size_t dot = std::min(digits.find_first_of(".eE"), digits.size());
        if (digits.find(',', dot) != std::string::npos) return std::nullopt;
        if (!valid_thousands_grouping(std::string_view(digits.data(), dot))) return std::nullopt;
        digits.erase(std::remove(digits.begin(), digits.end(), ','), digits.end());
    }
    if (!std::isdigit(static_cast<unsigned char>(digits.front())) && digits.front() != '.') return std::nullopt;
    double out = 0;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), out);
    if (res.ec != std::errc() || res.ptr != digits.data() + digits.size() || !std::isfinite(out))
        return std::nullopt;
    return negative ? -out : out;
}

std::string Column::render_number(double value) const {
    if (currency.empty()) return text::format_number(value);
    if (value < 0) return "-" + currency + text::format_number(-value);
    return currency + text::format_number(value);
}

std::string Column::render_date(std::int64_t d) const {
    return text::format_date(d, date_format.empty() ? "YYYY-MM-DD" : date_format);
}

std::string Column::render(std::size_t row) const {
    if (is_null(row)) return {};
    switch (kind) {
        case ColumnKind::Numerical: return render_number(numbers[row]);
        case ColumnKind::Date: return render_date(days[row]);
        default: return label(row);
    }
}

std::vector<double> Column::non_null_numbers() const {
    std::vector<double> out;
    out.reserve(size());
    for (std::size_t r = 0; r < size(); ++r)
        if (!is_null(r)) out.push_back(numbers[r]);
    return out;
}

Dataset::Dataset(std::string id, std::string name, std::optional<std::string> title,
                 std::optional<std::string> description, std::vector<Column> columns, std::size_t row_count)
    : id_(std::move(id)),
      name_(std::move(name)),
      title_(std::move(title)),
      description_(std::move(description)),
      columns_(std::move(columns)),
      row_count_(row_count) {
    content_hash_ = text::hex64(text::fnv1a64(to_canonical_csv(*this)));
    if (id_.empty()) id_ = "ds-" + content_hash_.substr(0, 12);
}

const Column& Dataset::column(std::string_view name) const {
    if (auto idx = index_of(name)) return columns_[*idx];
    throw Error(ErrorCode::UnknownColumn, "no column named '" + std::string(name) + "'");
}

std::optional<std::size_t> Dataset::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

Dataset load_dataset(std::string_view bytes, const IngestOptions& options) {
    auto rows = parse_delimited(bytes, options.delimiter);
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "input has no header row");
    if (rows.size() == 1) throw Error(ErrorCode::EmptyInput, "input has a header but no data rows");

    const auto& header = rows.front();
    std::vector<RawColumn> raw(header.size());
    std::unordered_set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        raw[c].name = text::trim(header[c]);
        if (!seen.insert(raw[c].name).second)
            throw Error(ErrorCode::DuplicateColumnName, "duplicate column name '" + raw[c].name + "'");
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw Error(ErrorCode::RaggedRows, "row " + std::to_string(r) + " has " +
                                                   std::to_string(rows[r].size()) + " cells, header has " +
                                                   std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < header.size(); ++c) {
            std::string cell = text::trim(rows[r][c]);
            bool null = is_null_token(cell);
            raw[c].null_mask.push_back(null ? 1 : 0);
            raw[c].cells.push_back(null ? std::string() : std::move(cell));
        }
    }

    std::vector<Column> columns;
    columns.reserve(raw.size());
    for (const auto& rc : raw) columns.push_back(infer_column(rc, options));

    return Dataset(options.id, options.name.empty() ? "dataset" : options.name, options.title,
                   options.description, std::move(columns), rows.size() - 1);
}

Dataset load_dataset(std::istream& in, const IngestOptions& options) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_dataset(buf.str(), options);
}

Dataset load_dataset_file(const std::filesystem::path& path, IngestOptions options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
    if (options.name.empty()) options.name = path.stem().string();
    return load_dataset(in, options);
}

std::string to_canonical_csv(const Dataset& dataset) {
    std::string out;
    const auto& cols = dataset.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out.push_back(',');
        out += csv_escape(cols[c].name);
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out.push_back(',');
            const Column& col = cols[c];
            if (col.is_null(r)) continue;
            switch (col.kind) {
                case ColumnKind::Numerical: out += csv_escape(col.render_number(col.numbers[r])); break;
                case ColumnKind::Date: out += text::format_date(col.days[r], "YYYY-MM-DD"); break;
                default: out += csv_escape(col.label(r)); break;
            }
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace qgen
