#include "qgen/interestingness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "qgen/error.hpp"
#include "qgen/stats.hpp"
#include "qgen/text.hpp"

namespace qgen {

namespace {

std::vector<std::size_t> label_counts(const Column& column) {
    if (column.kind == ColumnKind::Numerical || column.kind == ColumnKind::Date)
        throw Error(ErrorCode::InvalidArgument, "column '" + column.name + "' is not categorical");
    std::vector<std::size_t> counts(column.labels.size(), 0);
    for (std::size_t r = 0; r < column.size(); ++r)
        if (!column.is_null(r)) ++counts[static_cast<std::size_t>(column.codes[r])];
    if (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 0)
        throw Error(ErrorCode::AllNull, "column '" + column.name + "' has no non-null values");
    return counts;
}

void require_numeric(const Column& c) {
    if (c.kind != ColumnKind::Numerical)
        throw Error(ErrorCode::InvalidArgument, "column '" + c.name + "' is not numerical");
}

std::vector<std::size_t> year_month_counts(const Column& column) {
    std::map<std::pair<int, unsigned>, std::size_t> buckets;
    for (std::size_t r = 0; r < column.size(); ++r) {
        if (column.is_null(r)) continue;
        int y;
        unsigned m, d;
        text::civil_from_days(column.days[r], y, m, d);
        ++buckets[{y, m}];
    }
    std::vector<std::size_t> out;
    for (auto& [_, n] : buckets) out.push_back(n);
    return out;
}

}  // namespace

double entropy_of_counts(std::span<const std::size_t> counts) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    if (total == 0) throw Error(ErrorCode::AllNull, "entropy of an empty histogram");
    double h = 0;
    for (auto n : counts) {
        if (n == 0) continue;
        const double p = static_cast<double>(n) / total;
        h -= p * std::log2(p);
    }
    return h <= 0 ? 0.0 : h;
}

double unalikeability_of_counts(std::span<const std::size_t> counts) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    if (total == 0) throw Error(ErrorCode::AllNull, "unalikeability of an empty histogram");
    double sum_sq = 0;
    for (auto n : counts) {
        const double p = static_cast<double>(n) / total;
        sum_sq += p * p;
    }
    return std::max(0.0, 1.0 - sum_sq);
}

double entropy(const Column& column) {
    auto counts = label_counts(column);
    return entropy_of_counts(counts);
}

double unalikeability(const Column& column) {
    auto counts = label_counts(column);
    return unalikeability_of_counts(counts);
}

double coefficient_of_variation(const Column& column) {
    require_numeric(column);
    auto values = column.non_null_numbers();
    if (values.empty()) throw Error(ErrorCode::AllNull, "column '" + column.name + "' has no non-null values");
    const double m = stats::mean(values);
    if (m == 0.0) throw Error(ErrorCode::ZeroMean, "coefficient of variation undefined for zero mean");
    return stats::population_std(values) / std::fabs(m);
}

double pearson_correlation(const Column& a, const Column& b) {
    require_numeric(a);
    require_numeric(b);
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < a.size() && r < b.size(); ++r) {
        if (a.is_null(r) || b.is_null(r)) continue;
        xs.push_back(a.numbers[r]);
        ys.push_back(b.numbers[r]);
    }
    if (xs.size() < 2) throw Error(ErrorCode::InsufficientRows, "fewer than two complete rows");
    const double mx = stats::mean(xs);
    const double my = stats::mean(ys);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0 || syy == 0) throw Error(ErrorCode::ZeroVariance, "a column is constant on complete rows");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double chi_squared_association(const Column& a, const Column& b) {
    std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> cells;
    std::map<std::int32_t, std::size_t> rows, cols;
    std::size_t n = 0;
    for (std::size_t r = 0; r < a.size() && r < b.size(); ++r) {
        if (a.is_null(r) || b.is_null(r)) continue;
        ++cells[{a.codes[r], b.codes[r]}];
        ++rows[a.codes[r]];
        ++cols[b.codes[r]];
        ++n;
    }
    if (rows.size() < 2 || cols.size() < 2)
        throw Error(ErrorCode::DegenerateTable, "a column has a single category on complete rows");
    double chi2 = 0;
    for (auto& [ra, na] : rows) {
        for (auto& [cb, nb] : cols) {
            const double expected = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(n);
            auto it = cells.find({ra, cb});
            const double observed = it == cells.end() ? 0.0 : static_cast<double>(it->second);
            chi2 += (observed - expected) * (observed - expected) / expected;
        }
    }
    return chi2;
}

MeasureRegistry::MeasureRegistry() : enabled_(all_names()) {}

const std::vector<std::string>& MeasureRegistry::all_names() {
    static const std::vector<std::string> names = {std::string(kEntropy), std::string(kUnalikeability),
                                                   std::string(kCv), std::string(kStd),
                                                   std::string(kCorrelation)};
    return names;
}

MeasureRegistry MeasureRegistry::parse(std::string_view list) {
    MeasureRegistry reg;
    reg.enabled_.clear();
    std::string cur;
    auto flush = [&] {
        std::string name = text::to_lower(text::trim(cur));
        cur.clear();
        if (name.empty()) return;
        const auto& all = all_names();
        if (std::find(all.begin(), all.end(), name) == all.end())
            throw Error(ErrorCode::InvalidArgument, "unknown measure '" + name + "'");
        if (!reg.enabled(name)) reg.enabled_.push_back(name);
    };
    for (char c : list) {
        if (c == ',') flush();
        else cur.push_back(c);
    }
    flush();
    return reg;
}

bool MeasureRegistry::enabled(std::string_view name) const {
    return std::find(enabled_.begin(), enabled_.end(), name) != enabled_.end();
}

std::string MeasureRegistry::to_string() const {
    std::string out;
    for (const auto& name : all_names()) {
        if (!enabled(name)) continue;
        if (!out.empty()) out.push_back(',');
        out += name;
    }
    return out;
}

std::vector<ColumnProfile> select_top_k_columns(const Dataset& dataset, std::size_t k,
                                                const MeasureRegistry& measures) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");

    std::vector<ColumnProfile> profiles;
    std::vector<std::size_t> numeric;
    for (std::size_t i = 0; i < dataset.column_count(); ++i) {
        const Column& col = dataset.column(i);
        if (col.kind == ColumnKind::Identifier) continue;
        ColumnProfile p;
        p.column_name = col.name;
        p.column_index = i;
        profiles.push_back(std::move(p));
        if (col.kind == ColumnKind::Numerical) numeric.push_back(i);
    }
    if (profiles.empty()) throw Error(ErrorCode::NoEligibleColumns, "dataset has no non-Identifier columns");

    auto record = [&](ColumnProfile& p, std::string_view measure, auto&& compute) {
        if (!measures.enabled(measure)) return;
        try {
            p.measure_scores[std::string(measure)] = compute();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ZeroMean) p.measure_scores[std::string(measure)] = 0.0;
            p.diagnostics.push_back(std::string(measure) + ": " + std::string(e.name()) + " (" + e.what() + ")");
        }
    };

    for (auto& p : profiles) {
        const Column& col = dataset.column(p.column_index);
        switch (col.kind) {
            case ColumnKind::Categorical:
                record(p, MeasureRegistry::kEntropy, [&] { return entropy(col); });
                record(p, MeasureRegistry::kUnalikeability, [&] { return unalikeability(col); });
                break;
            case ColumnKind::Numerical:
                record(p, MeasureRegistry::kCv, [&] { return coefficient_of_variation(col); });
                record(p, MeasureRegistry::kStd, [&] {
                    auto values = col.non_null_numbers();
                    if (values.empty()) throw Error(ErrorCode::AllNull, "no non-null values");
                    return stats::population_std(values);
                });
                if (measures.enabled(MeasureRegistry::kCorrelation) && numeric.size() > 1) {
                    std::optional<double> best;
                    for (std::size_t other : numeric) {
                        if (other == p.column_index) continue;
                        try {
                            double r = std::fabs(pearson_correlation(col, dataset.column(other)));
                            if (!best || r > *best) best = r;
                        } catch (const Error&) {
                        }
                    }
                    if (best) p.measure_scores[std::string(MeasureRegistry::kCorrelation)] = *best;
                }
                break;
            case ColumnKind::Date:
                record(p, MeasureRegistry::kUnalikeability, [&] {
                    auto counts = year_month_counts(col);
                    return unalikeability_of_counts(counts);
                });
                break;
            case ColumnKind::Identifier: break;
        }
    }

    // min-max normalization per measure, across the columns that have it
    std::map<std::string, std::pair<double, double>> range;
    for (const auto& p : profiles) {
        for (const auto& [name, v] : p.measure_scores) {
            auto [it, inserted] = range.try_emplace(name, v, v);
            if (!inserted) {
                it->second.first = std::min(it->second.first, v);
                it->second.second = std::max(it->second.second, v);
            }
        }
    }
    for (auto& p : profiles) {
        if (p.measure_scores.empty()) {
            p.composite = 0;
            continue;
        }
        double sum = 0;
        for (const auto& [name, v] : p.measure_scores) {
            auto [lo, hi] = range[name];
            sum += hi > lo ? (v - lo) / (hi - lo) : (v > 0 ? 1.0 : 0.0);
        }
        p.composite = std::clamp(sum / static_cast<double>(p.measure_scores.size()), 0.0, 1.0);
    }

    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return profiles[x].composite > profiles[y].composite; });
    for (std::size_t i = 0; i < order.size() && i < k; ++i) profiles[order[i]].selected = true;
    return profiles;
}

std::vector<std::size_t> selected_columns(std::span<const ColumnProfile> profiles) {
    std::vector<std::size_t> out;
    for (const auto& p : profiles)
        if (p.selected) out.push_back(p.column_index);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<CategoricalAssociation> categorical_associations(const Dataset& dataset) {
    std::vector<CategoricalAssociation> out;
    for (std::size_t i = 0; i < dataset.column_count(); ++i) {
        if (!dataset.column(i).is_categorical()) continue;
        for (std::size_t j = i + 1; j < dataset.column_count(); ++j) {
            if (!dataset.column(j).is_categorical()) continue;
            try {
                out.push_back({dataset.column(i).name, dataset.column(j).name,
                               chi_squared_association(dataset.column(i), dataset.column(j))});
            } catch (const Error&) {
            }
        }
    }
    return out;
}

}  // namespace qgen
