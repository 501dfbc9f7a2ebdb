#include "qgen/operators.hpp"

#include <array>
#include <utility>

namespace qgen {

namespace {

constexpr std::array<std::pair<MeasureOp, std::string_view>, 12> kMeasures{{
    {MeasureOp::Average, "average"},
    {MeasureOp::Median, "median"},
    {MeasureOp::Std, "std"},
    {MeasureOp::Min, "min"},
    {MeasureOp::Max, "max"},
    {MeasureOp::Total, "total"},
    {MeasureOp::Fraction, "fraction"},
    {MeasureOp::Majority, "majority"},
    {MeasureOp::Minority, "minority"},
    {MeasureOp::Missing, "missing"},
    {MeasureOp::Outlier, "outlier"},
    {MeasureOp::TopKPercent, "top_k_percent"},
}};

constexpr std::array<std::pair<FilterOp, std::string_view>, 10> kFilters{{
    {FilterOp::Among, "among"},
    {FilterOp::In, "in"},
    {FilterOp::MoreThan, "more_than"},
    {FilterOp::LessThan, "less_than"},
    {FilterOp::Above, "above"},
    {FilterOp::Below, "below"},
    {FilterOp::Before, "before"},
    {FilterOp::After, "after"},
    {FilterOp::Within, "within"},
    {FilterOp::On, "on"},
}};

}  // namespace

std::string_view measure_name(MeasureOp op) noexcept {
    for (auto& [m, name] : kMeasures)
        if (m == op) return name;
    return "?";
}

std::string_view filter_name(FilterOp op) noexcept {
    for (auto& [f, name] : kFilters)
        if (f == op) return name;
    return "?";
}

std::optional<MeasureOp> parse_measure(std::string_view name) noexcept {
    for (auto& [m, n] : kMeasures)
        if (n == name) return m;
    return std::nullopt;
}

std::optional<FilterOp> parse_filter(std::string_view name) noexcept {
    for (auto& [f, n] : kFilters)
        if (n == name) return f;
    return std::nullopt;
}

std::string Measure::to_string() const {
    std::string out(measure_name(op));
    if (op == MeasureOp::TopKPercent) out += "(" + std::to_string(percent) + ")";
    return out;
}

}  // namespace qgen
