#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qgen {

enum class ColumnKind { Numerical, Categorical, Date, Identifier };

std::string_view kind_name(ColumnKind kind) noexcept;

struct IngestOptions {
    char delimiter = ',';
    // Tried in order; the first format covering the threshold share of
    // non-null cells wins the whole column.
    std::vector<std::string> date_formats = {"YYYY-MM-DD", "MM/DD/YYYY", "DD/MM/YYYY"};
    double numeric_threshold = 0.90;
    double date_threshold = 0.90;
    double id_threshold = 0.95;

    std::string id;    // defaults to a content-derived id
    std::string name;  // defaults to the file stem, or "dataset"
    std::optional<std::string> title;
    std::optional<std::string> description;
};

struct NumericStats {
    double min = 0, max = 0, mean = 0, std = 0;  // std is the population std
    double q1 = 0, q2 = 0, q3 = 0;
};

struct DateStats {
    std::int64_t min = 0, max = 0, median = 0;  // days since epoch; lower median
};

struct ColumnStats {
    std::size_t null_count = 0;
    std::size_t distinct_count = 0;
    std::optional<NumericStats> numeric;
    std::optional<std::map<std::string, std::size_t>> categorical;
    std::optional<DateStats> date;
};

// One typed column. Exactly one of numbers/days/codes is populated,
// depending on kind; Identifier columns keep their labels.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Categorical;
    std::vector<std::uint8_t> null_mask;  // 1 = null
    std::vector<double> numbers;
    std::vector<std::int64_t> days;
    std::vector<std::int32_t> codes;       // -1 for null
    std::vector<std::string> labels;       // interned, sorted
    std::string currency;                  // symbol stripped at ingest, if any
    std::string date_format;               // format the column parsed under
    ColumnStats stats;

    std::size_t size() const noexcept { return null_mask.size(); }
    bool is_null(std::size_t row) const { return null_mask[row] != 0; }
    std::size_t non_null_count() const noexcept { return size() - stats.null_count; }
    bool is_numeric() const noexcept { return kind == ColumnKind::Numerical; }
    bool is_categorical() const noexcept { return kind == ColumnKind::Categorical; }
    bool is_date() const noexcept { return kind == ColumnKind::Date; }

    const std::string& label(std::size_t row) const { return labels[static_cast<std::size_t>(codes[row])]; }

    // Human-facing rendering: currency re-applied, dates in the source format.
    std::string render_number(double value) const;
    std::string render_date(std::int64_t days) const;
    std::string render(std::size_t row) const;

    // Non-null values in row order.
    std::vector<double> non_null_numbers() const;
};

class Dataset {
public:
    Dataset(std::string id, std::string name, std::optional<std::string> title,
            std::optional<std::string> description, std::vector<Column> columns, std::size_t row_count);

    const std::string& id() const noexcept { return id_; }
    const std::string& name() const noexcept { return name_; }
    const std::optional<std::string>& title() const noexcept { return title_; }
    const std::optional<std::string>& description() const noexcept { return description_; }
    const std::vector<Column>& columns() const noexcept { return columns_; }
    std::size_t row_count() const noexcept { return row_count_; }
    std::size_t column_count() const noexcept { return columns_.size(); }

    const Column& column(std::size_t index) const { return columns_.at(index); }
    const Column& column(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;

    // Hex FNV-1a of the canonical serialization.
    const std::string& content_hash() const noexcept { return content_hash_; }

private:
    std::string id_;
    std::string name_;
    std::optional<std::string> title_;
    std::optional<std::string> description_;
    std::vector<Column> columns_;
    std::size_t row_count_;
    std::string content_hash_;
};

Dataset load_dataset(std::string_view bytes, const IngestOptions& options = {});
Dataset load_dataset(std::istream& in, const IngestOptions& options = {});
Dataset load_dataset_file(const std::filesystem::path& path, IngestOptions options = {});

// Canonical column-value form: comma-separated, ISO dates, shortest
// round-trip numbers, empty cells for nulls.
std::string to_canonical_csv(const Dataset& dataset);

// Exposed for tests: strips a leading currency symbol and thousands
// separators, then parses a finite real.
std::optional<double> parse_numeric_cell(std::string_view cell, std::string* currency = nullptr);
bool is_null_token(std::string_view cell);

}  // namespace qgen
