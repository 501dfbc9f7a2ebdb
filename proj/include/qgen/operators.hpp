#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace qgen {

// Catalog order; tie-breaks between slices follow this order.
enum class MeasureOp {
    Average,
    Median,
    Std,
    Min,
    Max,
    Total,
    Fraction,
    Majority,
    Minority,
    Missing,
    Outlier,
    TopKPercent,
};

enum class FilterOp {
    Among,
    In,
    MoreThan,
    LessThan,
    Above,
    Below,
    Before,
    After,
    Within,
    On,
};

std::string_view measure_name(MeasureOp op) noexcept;
std::string_view filter_name(FilterOp op) noexcept;
std::optional<MeasureOp> parse_measure(std::string_view name) noexcept;
std::optional<FilterOp> parse_filter(std::string_view name) noexcept;

// A measure operator plus its parameter (the K of top_k_percent).
struct Measure {
    MeasureOp op = MeasureOp::Average;
    int percent = 0;

    auto operator<=>(const Measure&) const = default;
    std::string to_string() const;
};

}  // namespace qgen
