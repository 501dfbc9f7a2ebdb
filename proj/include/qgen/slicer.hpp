#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qgen/dataset.hpp"
#include "qgen/operators.hpp"

namespace qgen {

struct DateValue {
    std::int64_t days = 0;
    auto operator<=>(const DateValue&) const = default;
};

struct Interval {
    double lo = 0;
    double hi = 0;
    auto operator<=>(const Interval&) const = default;
};

using Operand = std::variant<double, std::string, DateValue, Interval>;

struct SlicePredicate {
    std::string column_name;
    std::size_t column_index = 0;
    FilterOp op = FilterOp::Among;
    Operand operand;

    // Null cells never satisfy a predicate. above/more_than and
    // below/less_than are strict; within is closed.
    bool matches(const Column& column, std::size_t row) const;
    std::string describe() const;
};

// Operator/operand compatibility for a predicate on a column.
bool predicate_compatible(const SlicePredicate& predicate, const Column& column);

struct SignificanceResult {
    std::string test_name;
    double statistic = 0;
    double p_value = 1;
    double effect_size = 0;
    bool significant = false;
};

struct Slice {
    std::vector<std::string> subset_columns;
    std::vector<std::size_t> subset_indices;  // ascending column indices
    std::string fixed_column;
    std::size_t fixed_index = 0;
    Measure measure;
    std::vector<SlicePredicate> predicates;  // one per non-fixed column, subset order
    std::vector<std::uint32_t> member_rows;  // ascending
    bool pseudo = false;                     // whole-column slice for r = 1
    // Class the categorical measures talk about (majority/minority/fraction).
    std::string target_label;
    SignificanceResult significance;
    double interestingness = 0;
};

struct SlicerConfig {
    double alpha = 0.05;
    std::size_t min_slice_size = 2;
    std::size_t r_max = 3;
    double effect_floor = 0.5;
    std::vector<int> top_k_percent_values = {5, 10, 25};
    // Most frequent categories offered as `among` predicates per column.
    std::size_t max_categories = 25;
};

// Non-empty subsets of `selected` (column indices) of size <= r_max, each
// ascending, ordered by size then lexicographically.
std::vector<std::vector<std::size_t>> enumerate_column_subsets(std::span<const std::size_t> selected,
                                                               std::size_t r_max);

// Filter predicates offered for a non-fixed column, in menu order.
std::vector<SlicePredicate> predicate_menu(const Column& column, std::size_t column_index,
                                           const SlicerConfig& config);

// Cross product of predicate menus over the non-fixed subset columns, with
// size bounds applied. Throws NoViableSlices when nothing survives.
std::vector<Slice> candidate_slices(const Dataset& dataset, std::span<const std::size_t> subset,
                                    std::size_t fixed_index, const SlicerConfig& config);

// Measures that can be evaluated on `column` as the fixed column.
std::vector<Measure> applicable_measures(const Column& column, bool pseudo, const SlicerConfig& config);

// Tests the slice (its measure must be set) against its complement.
// Throws InsufficientData when either side is too small to test.
SignificanceResult test_slice_significance(const Slice& slice, const Dataset& dataset,
                                           const SlicerConfig& config);

// Fills significance, target_label and interestingness.
void score_slice(Slice& slice, const Dataset& dataset, const SlicerConfig& config);

// |effect| * (1 - p) for tested slices, |effect| * 0.5 otherwise.
double interestingness_score(const SignificanceResult& result);

// Strict preference: higher interestingness, then earlier fixed column,
// then catalog order of the measure, then lexicographic predicate operands.
bool slice_preferred(const Slice& a, const Slice& b);
std::weak_ordering compare_predicates(std::span<const SlicePredicate> a, std::span<const SlicePredicate> b);

// The gate-passing argmax over (fixed column, measure, candidate).
std::optional<Slice> best_slice_per_subset(const Dataset& dataset, std::span<const std::size_t> subset,
                                           const SlicerConfig& config);

// One winner per (fixed column, measure): the best gate-passing candidate
// when one exists, otherwise the best candidate overall. Ordered by fixed
// column then measure.
std::vector<Slice> best_slices_by_measure(const Dataset& dataset, std::span<const std::size_t> subset,
                                          const SlicerConfig& config);

}  // namespace qgen
