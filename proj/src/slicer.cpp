#include "qgen/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qgen/error.hpp"
#include "qgen/stats.hpp"
#include "qgen/text.hpp"

namespace qgen {

namespace {

bool is_numeric_filter(FilterOp op) {
    return op == FilterOp::Above || op == FilterOp::Below || op == FilterOp::MoreThan || op == FilterOp::LessThan;
}

std::string operand_text(const Operand& operand) {
    struct Visitor {
        std::string operator()(double v) const { return text::format_number(v); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(const DateValue& d) const { return text::format_date(d.days, "YYYY-MM-DD"); }
        std::string operator()(const Interval& i) const {
            return "[" + text::format_number(i.lo) + ", " + text::format_number(i.hi) + "]";
        }
    };
    return std::visit(Visitor{}, operand);
}

std::vector<std::uint8_t> predicate_mask(const SlicePredicate& p, const Column& column) {
    std::vector<std::uint8_t> mask(column.size(), 0);
    for (std::size_t r = 0; r < column.size(); ++r) mask[r] = p.matches(column, r) ? 1 : 0;
    return mask;
}

struct SideValues {
    std::vector<double> slice;
    std::vector<double> rest;
};

SideValues split_numbers(const Slice& s, const Column& fixed) {
    SideValues out;
    std::size_t m = 0;
    for (std::size_t r = 0; r < fixed.size(); ++r) {
        const bool member = m < s.member_rows.size() && s.member_rows[m] == r;
        if (member) ++m;
        if (fixed.is_null(r)) continue;
        (member ? out.slice : out.rest).push_back(fixed.numbers[r]);
    }
    return out;
}

struct SideCounts {
    std::vector<std::size_t> slice;  // per label code
    std::vector<std::size_t> rest;
    std::size_t slice_n = 0, rest_n = 0;
    std::size_t slice_rows = 0, rest_rows = 0;
    std::size_t slice_nulls = 0, rest_nulls = 0;
};

SideCounts split_counts(const Slice& s, const Column& fixed) {
    SideCounts out;
    out.slice.assign(fixed.labels.size(), 0);
    out.rest.assign(fixed.labels.size(), 0);
    std::size_t m = 0;
    for (std::size_t r = 0; r < fixed.size(); ++r) {
        const bool member = m < s.member_rows.size() && s.member_rows[m] == r;
        if (member) ++m;
        (member ? out.slice_rows : out.rest_rows) += 1;
        if (fixed.is_null(r)) {
            (member ? out.slice_nulls : out.rest_nulls) += 1;
            continue;
        }
        if (fixed.codes.empty()) continue;
        auto code = static_cast<std::size_t>(fixed.codes[r]);
        if (member) {
            ++out.slice[code];
            ++out.slice_n;
        } else {
            ++out.rest[code];
            ++out.rest_n;
        }
    }
    return out;
}

// Class code the categorical measure refers to; ties go to the smallest label.
std::size_t target_class(MeasureOp op, const std::vector<std::size_t>& counts) {
    std::size_t best = counts.size();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) continue;
        if (best == counts.size()) {
            best = c;
            continue;
        }
        if (op == MeasureOp::Minority ? counts[c] < counts[best] : counts[c] > counts[best]) best = c;
    }
    return best;
}

double top_k_mean(std::vector<double> values, int percent) {
    std::sort(values.begin(), values.end(), std::greater<>());
    auto take = static_cast<std::size_t>(std::ceil(static_cast<double>(values.size()) * percent / 100.0));
    take = std::clamp<std::size_t>(take, 1, values.size());
    double sum = 0;
    for (std::size_t i = 0; i < take; ++i) sum += values[i];
    return sum / static_cast<double>(take);
}

double slice_statistic(MeasureOp op, int percent, const std::vector<double>& values, const NumericStats& overall) {
    switch (op) {
        case MeasureOp::Min: return *std::min_element(values.begin(), values.end());
        case MeasureOp::Max: return *std::max_element(values.begin(), values.end());
        case MeasureOp::Std: return stats::population_std(values);
        case MeasureOp::TopKPercent: return top_k_mean(values, percent);
        case MeasureOp::Outlier: {
            const double iqr = overall.q3 - overall.q1;
            const double lo = overall.q1 - 1.5 * iqr;
            const double hi = overall.q3 + 1.5 * iqr;
            std::size_t n = 0;
            for (double v : values) n += (v < lo || v > hi);
            return static_cast<double>(n) / static_cast<double>(values.size());
        }
        default: break;
    }
    throw Error(ErrorCode::InvalidArgument, "not an effect-only measure");
}

[[noreturn]] void insufficient(const std::string& why) { throw Error(ErrorCode::InsufficientData, why); }

SignificanceResult from_outcome(const stats::TestOutcome& t, double alpha) {
    SignificanceResult r;
    r.test_name = t.test_name;
    r.statistic = t.statistic;
    r.p_value = std::clamp(t.p_value, 0.0, 1.0);
    r.effect_size = t.effect_size;
    r.significant = r.p_value < alpha;
    return r;
}

SignificanceResult test_pseudo(const Slice& slice, const Column& fixed, const SlicerConfig& config) {
    if (fixed.non_null_count() < config.min_slice_size) insufficient("fixed column has too few values");
    if (fixed.kind == ColumnKind::Numerical) {
        auto values = fixed.non_null_numbers();
        const double m = stats::mean(values);
        SignificanceResult r;
        r.test_name = "descriptive";
        r.effect_size = m == 0.0 ? 0.0 : stats::population_std(values) / std::fabs(m);
        r.p_value = 1.0;
        r.significant = true;
        return r;
    }
    if (fixed.kind == ColumnKind::Categorical) {
        auto counts = split_counts(slice, fixed);
        std::size_t cls = target_class(slice.measure.op, counts.slice);
        if (cls == counts.slice.size()) insufficient("no categories");
        const double p0 = 1.0 / static_cast<double>(fixed.stats.distinct_count);
        return from_outcome(stats::one_proportion_z_test(counts.slice[cls], counts.slice_n, p0), config.alpha);
    }
    insufficient("no single-column test for this column kind");
}

std::vector<std::uint32_t> rows_where(const std::vector<std::uint8_t>& mask) {
    std::vector<std::uint32_t> rows;
    for (std::size_t r = 0; r < mask.size(); ++r)
        if (mask[r]) rows.push_back(static_cast<std::uint32_t>(r));
    return rows;
}

}  // namespace

bool SlicePredicate::matches(const Column& column, std::size_t row) const {
    if (column.is_null(row)) return false;
    switch (op) {
        case FilterOp::Above:
        case FilterOp::MoreThan: return column.numbers[row] > std::get<double>(operand);
        case FilterOp::Below:
        case FilterOp::LessThan: return column.numbers[row] < std::get<double>(operand);
        case FilterOp::Within: {
            const auto& iv = std::get<Interval>(operand);
            if (column.kind == ColumnKind::Date) {
                const auto d = static_cast<double>(column.days[row]);
                return d >= iv.lo && d <= iv.hi;
            }
            return column.numbers[row] >= iv.lo && column.numbers[row] <= iv.hi;
        }
        case FilterOp::Before: return column.days[row] < std::get<DateValue>(operand).days;
        case FilterOp::After: return column.days[row] > std::get<DateValue>(operand).days;
        case FilterOp::Among:
        case FilterOp::In:
        case FilterOp::On:
            if (column.kind == ColumnKind::Date) return column.days[row] == std::get<DateValue>(operand).days;
            return column.label(row) == std::get<std::string>(operand);
    }
    return false;
}

std::string SlicePredicate::describe() const {
    return column_name + " " + std::string(filter_name(op)) + " " + operand_text(operand);
}

bool predicate_compatible(const SlicePredicate& p, const Column& column) {
    if (is_numeric_filter(p.op))
        return column.kind == ColumnKind::Numerical && std::holds_alternative<double>(p.operand);
    switch (p.op) {
        case FilterOp::Before:
        case FilterOp::After:
            return column.kind == ColumnKind::Date && std::holds_alternative<DateValue>(p.operand);
        case FilterOp::Within:
            return (column.kind == ColumnKind::Numerical || column.kind == ColumnKind::Date) &&
                   std::holds_alternative<Interval>(p.operand);
        case FilterOp::Among:
        case FilterOp::In:
            return column.kind == ColumnKind::Categorical && std::holds_alternative<std::string>(p.operand);
        case FilterOp::On:
            return (column.kind == ColumnKind::Date && std::holds_alternative<DateValue>(p.operand)) ||
                   (column.kind == ColumnKind::Categorical && std::holds_alternative<std::string>(p.operand));
        default: return false;
    }
}

std::vector<std::vector<std::size_t>> enumerate_column_subsets(std::span<const std::size_t> selected,
                                                               std::size_t r_max) {
    std::vector<std::size_t> sorted(selected.begin(), selected.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    r_max = std::min(r_max, n);

    std::vector<std::vector<std::size_t>> out;
    for (std::size_t size = 1; size <= r_max; ++size) {
        // lexicographic combinations of positions
        std::vector<std::size_t> pos(size);
        for (std::size_t i = 0; i < size; ++i) pos[i] = i;
        while (true) {
            std::vector<std::size_t> subset(size);
            for (std::size_t i = 0; i < size; ++i) subset[i] = sorted[pos[i]];
            out.push_back(std::move(subset));
            std::size_t i = size;
            while (i > 0 && pos[i - 1] == n - size + (i - 1)) --i;
            if (i == 0) break;
            ++pos[i - 1];
            for (std::size_t j = i; j < size; ++j) pos[j] = pos[j - 1] + 1;
        }
    }
    return out;
}

std::vector<SlicePredicate> predicate_menu(const Column& column, std::size_t column_index,
                                           const SlicerConfig& config) {
    std::vector<SlicePredicate> menu;
    auto add = [&](FilterOp op, Operand operand) {
        SlicePredicate p{column.name, column_index, op, std::move(operand)};
        for (const auto& existing : menu)
            if (existing.op == p.op && existing.operand == p.operand) return;
        menu.push_back(std::move(p));
    };
    switch (column.kind) {
        case ColumnKind::Categorical: {
            if (!column.stats.categorical) break;
            std::vector<std::pair<std::string, std::size_t>> cats;
            for (const auto& [label, n] : *column.stats.categorical)
                if (n >= config.min_slice_size) cats.emplace_back(label, n);
            std::stable_sort(cats.begin(), cats.end(), [](auto& a, auto& b) { return a.second > b.second; });
            if (config.max_categories > 0 && cats.size() > config.max_categories) cats.resize(config.max_categories);
            std::sort(cats.begin(), cats.end());
            for (auto& [label, _] : cats) add(FilterOp::Among, label);
            break;
        }
        case ColumnKind::Numerical: {
            if (!column.stats.numeric) break;
            const auto& s = *column.stats.numeric;
            for (double q : {s.q1, s.q2, s.q3}) add(FilterOp::Above, q);
            for (double q : {s.q1, s.q2, s.q3}) add(FilterOp::Below, q);
            add(FilterOp::Within, Interval{s.q1, s.q3});
            break;
        }
        case ColumnKind::Date: {
            if (!column.stats.date) break;
            add(FilterOp::Before, DateValue{column.stats.date->median});
            add(FilterOp::After, DateValue{column.stats.date->median});
            break;
        }
        case ColumnKind::Identifier: break;
    }
    return menu;
}

std::vector<Slice> candidate_slices(const Dataset& dataset, std::span<const std::size_t> subset,
                                    std::size_t fixed_index, const SlicerConfig& config) {
    if (std::find(subset.begin(), subset.end(), fixed_index) == subset.end())
        throw Error(ErrorCode::InvalidArgument, "fixed column is not part of the subset");

    Slice base;
    for (auto idx : subset) {
        base.subset_indices.push_back(idx);
        base.subset_columns.push_back(dataset.column(idx).name);
    }
    base.fixed_index = fixed_index;
    base.fixed_column = dataset.column(fixed_index).name;

    const Column& fixed = dataset.column(fixed_index);
    if (subset.size() == 1) {
        Slice s = base;
        s.pseudo = true;
        for (std::size_t r = 0; r < fixed.size(); ++r)
            if (!fixed.is_null(r)) s.member_rows.push_back(static_cast<std::uint32_t>(r));
        if (s.member_rows.size() < config.min_slice_size)
            throw Error(ErrorCode::NoViableSlices, "column '" + fixed.name + "' has too few values");
        return {std::move(s)};
    }

    struct Menu {
        std::vector<SlicePredicate> predicates;
        std::vector<std::vector<std::uint8_t>> masks;
    };
    std::vector<Menu> menus;
    for (auto idx : subset) {
        if (idx == fixed_index) continue;
        Menu m;
        m.predicates = predicate_menu(dataset.column(idx), idx, config);
        for (const auto& p : m.predicates) m.masks.push_back(predicate_mask(p, dataset.column(idx)));
        if (m.predicates.empty())
            throw Error(ErrorCode::NoViableSlices, "column '" + dataset.column(idx).name + "' offers no predicates");
        menus.push_back(std::move(m));
    }

    const std::size_t rows = dataset.row_count();
    std::vector<Slice> out;
    std::vector<std::size_t> pick(menus.size(), 0);
    std::vector<std::uint8_t> mask(rows);
    while (true) {
        std::fill(mask.begin(), mask.end(), 1);
        for (std::size_t i = 0; i < menus.size(); ++i) {
            const auto& m = menus[i].masks[pick[i]];
            for (std::size_t r = 0; r < rows; ++r) mask[r] &= m[r];
        }
        auto members = rows_where(mask);
        if (members.size() >= config.min_slice_size && rows - members.size() >= config.min_slice_size) {
            Slice s = base;
            for (std::size_t i = 0; i < menus.size(); ++i) s.predicates.push_back(menus[i].predicates[pick[i]]);
            s.member_rows = std::move(members);
            out.push_back(std::move(s));
        }
        std::size_t i = menus.size();
        while (i > 0) {
            if (++pick[i - 1] < menus[i - 1].predicates.size()) break;
            pick[i - 1] = 0;
            --i;
        }
        if (i == 0) break;
    }
    if (out.empty()) throw Error(ErrorCode::NoViableSlices, "every candidate slice violates the size bounds");
    return out;
}

std::vector<Measure> applicable_measures(const Column& column, bool pseudo, const SlicerConfig& config) {
    std::vector<Measure> out;
    switch (column.kind) {
        case ColumnKind::Numerical:
            for (auto op : {MeasureOp::Average, MeasureOp::Median, MeasureOp::Std, MeasureOp::Min, MeasureOp::Max,
                            MeasureOp::Total})
                out.push_back({op, 0});
            if (!pseudo && column.stats.null_count > 0) out.push_back({MeasureOp::Missing, 0});
            out.push_back({MeasureOp::Outlier, 0});
            for (int k : config.top_k_percent_values) out.push_back({MeasureOp::TopKPercent, k});
            break;
        case ColumnKind::Categorical:
            for (auto op : {MeasureOp::Fraction, MeasureOp::Majority, MeasureOp::Minority}) out.push_back({op, 0});
            if (!pseudo && column.stats.null_count > 0) out.push_back({MeasureOp::Missing, 0});
            break;
        case ColumnKind::Date:
            if (!pseudo && column.stats.null_count > 0) out.push_back({MeasureOp::Missing, 0});
            break;
        case ColumnKind::Identifier: break;
    }
    return out;
}

SignificanceResult test_slice_significance(const Slice& slice, const Dataset& dataset,
                                           const SlicerConfig& config) {
    const Column& fixed = dataset.column(slice.fixed_index);
    const MeasureOp op = slice.measure.op;
    if (slice.pseudo) return test_pseudo(slice, fixed, config);

    if (op == MeasureOp::Missing) {
        auto c = split_counts(slice, fixed);
        if (c.slice_rows < config.min_slice_size || c.rest_rows < config.min_slice_size)
            insufficient("slice or complement below minimum size");
        return from_outcome(stats::two_proportion_z_test(c.slice_nulls, c.slice_rows, c.rest_nulls, c.rest_rows),
                            config.alpha);
    }

    if (fixed.kind == ColumnKind::Numerical) {
        auto sides = split_numbers(slice, fixed);
        if (sides.slice.size() < std::max<std::size_t>(config.min_slice_size, 1) ||
            sides.rest.size() < std::max<std::size_t>(config.min_slice_size, 1))
            insufficient("fixed column has too few values in the slice or complement");
        switch (op) {
            case MeasureOp::Average:
            case MeasureOp::Median:
            case MeasureOp::Total:
                try {
                    return from_outcome(stats::welch_t_test(sides.slice, sides.rest), config.alpha);
                } catch (const Error& e) {
                    insufficient(e.what());
                }
            case MeasureOp::Min:
            case MeasureOp::Max:
            case MeasureOp::Std:
            case MeasureOp::Outlier:
            case MeasureOp::TopKPercent: {
                const NumericStats& overall = *fixed.stats.numeric;
                double a = slice_statistic(op, slice.measure.percent, sides.slice, overall);
                double b = slice_statistic(op, slice.measure.percent, sides.rest, overall);
                double diff = a - b;
                if (op != MeasureOp::Outlier) diff = overall.std > 0 ? diff / overall.std : 0.0;
                SignificanceResult r;
                r.test_name = "effect-only";
                r.statistic = diff;
                r.p_value = 1.0;
                r.effect_size = std::fabs(diff);
                r.significant = r.effect_size >= config.effect_floor;
                return r;
            }
            default: break;
        }
        throw Error(ErrorCode::IncompatibleOperator,
                    std::string(measure_name(op)) + " does not apply to numerical column '" + fixed.name + "'");
    }

    if (fixed.kind == ColumnKind::Categorical) {
        if (op != MeasureOp::Majority && op != MeasureOp::Minority && op != MeasureOp::Fraction)
            throw Error(ErrorCode::IncompatibleOperator,
                        std::string(measure_name(op)) + " does not apply to categorical column '" + fixed.name + "'");
        auto c = split_counts(slice, fixed);
        if (c.slice_n < std::max<std::size_t>(config.min_slice_size, 1) ||
            c.rest_n < std::max<std::size_t>(config.min_slice_size, 1))
            insufficient("fixed column has too few values in the slice or complement");
        std::size_t cls = target_class(op, c.slice);
        return from_outcome(stats::two_proportion_z_test(c.slice[cls], c.slice_n, c.rest[cls], c.rest_n),
                            config.alpha);
    }
    throw Error(ErrorCode::IncompatibleOperator,
                std::string(measure_name(op)) + " does not apply to column '" + fixed.name + "'");
}

double interestingness_score(const SignificanceResult& result) {
    const double e = std::fabs(result.effect_size);
    if (result.test_name == "effect-only" || result.test_name == "descriptive") return e * 0.5;
    return e * (1.0 - result.p_value);
}

void score_slice(Slice& slice, const Dataset& dataset, const SlicerConfig& config) {
    slice.significance = test_slice_significance(slice, dataset, config);
    slice.interestingness = interestingness_score(slice.significance);
    slice.target_label.clear();
    const MeasureOp op = slice.measure.op;
    if (op == MeasureOp::Majority || op == MeasureOp::Minority || op == MeasureOp::Fraction) {
        const Column& fixed = dataset.column(slice.fixed_index);
        auto c = split_counts(slice, fixed);
        std::size_t cls = target_class(op, c.slice);
        if (cls < fixed.labels.size()) slice.target_label = fixed.labels[cls];
    }
}

std::weak_ordering compare_predicates(std::span<const SlicePredicate> a, std::span<const SlicePredicate> b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].column_index != b[i].column_index) return a[i].column_index <=> b[i].column_index;
        if (a[i].operand != b[i].operand) return a[i].operand < b[i].operand ? std::weak_ordering::less
                                                                           : std::weak_ordering::greater;
        if (a[i].op != b[i].op) return a[i].op < b[i].op ? std::weak_ordering::less : std::weak_ordering::greater;
    }
    return a.size() <=> b.size();
}

bool slice_preferred(const Slice& a, const Slice& b) {
    if (a.interestingness != b.interestingness) return a.interestingness > b.interestingness;
    if (a.fixed_index != b.fixed_index) return a.fixed_index < b.fixed_index;
    if (a.measure != b.measure) return a.measure < b.measure;
    return compare_predicates(a.predicates, b.predicates) < 0;
}

namespace {

template <typename Visit>
void for_each_scored(const Dataset& dataset, std::span<const std::size_t> subset, const SlicerConfig& config,
                     Visit&& visit) {
    for (std::size_t fixed : subset) {
        std::vector<Slice> candidates;
        try {
            candidates = candidate_slices(dataset, subset, fixed, config);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NoViableSlices) continue;
            throw;
        }
        const bool pseudo = subset.size() == 1;
        for (const Measure& m : applicable_measures(dataset.column(fixed), pseudo, config)) {
            for (const Slice& c : candidates) {
                Slice s = c;
                s.measure = m;
                try {
                    score_slice(s, dataset, config);
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::InsufficientData) continue;
                    throw;
                }
                visit(std::move(s));
            }
        }
    }
}

}  // namespace

std::optional<Slice> best_slice_per_subset(const Dataset& dataset, std::span<const std::size_t> subset,
                                           const SlicerConfig& config) {
    std::optional<Slice> best;
    for_each_scored(dataset, subset, config, [&](Slice&& s) {
        if (!s.significance.significant) return;
        if (!best || slice_preferred(s, *best)) best = std::move(s);
    });
    return best;
}

std::vector<Slice> best_slices_by_measure(const Dataset& dataset, std::span<const std::size_t> subset,
                                          const SlicerConfig& config) {
    std::map<std::pair<std::size_t, Measure>, Slice> winners;
    for_each_scored(dataset, subset, config, [&](Slice&& s) {
        auto key = std::make_pair(s.fixed_index, s.measure);
        auto it = winners.find(key);
        if (it == winners.end()) {
            winners.emplace(key, std::move(s));
            return;
        }
        const Slice& cur = it->second;
        const bool better = s.significance.significant != cur.significance.significant
                                ? s.significance.significant
                                : slice_preferred(s, cur);
        if (better) it->second = std::move(s);
    });
    std::vector<Slice> out;
    for (auto& [_, s] : winners) out.push_back(std::move(s));
    return out;
}

}  // namespace qgen
