#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qgen/dataset.hpp"

namespace qgen {

// Shannon entropy in bits over the non-null categories.
double entropy(const Column& column);
// Coefficient of unalikeability, 1 - sum p^2.
double unalikeability(const Column& column);
// Population std / |mean|.
double coefficient_of_variation(const Column& column);
// Pearson r over pairwise-complete rows.
double pearson_correlation(const Column& a, const Column& b);
// Pearson chi-squared statistic of the contingency table over
// pairwise-complete rows.
double chi_squared_association(const Column& a, const Column& b);

double entropy_of_counts(std::span<const std::size_t> counts);
double unalikeability_of_counts(std::span<const std::size_t> counts);

// Names of the per-column measures, usable from config ("--measures").
class MeasureRegistry {
public:
    static constexpr std::string_view kEntropy = "entropy";
    static constexpr std::string_view kUnalikeability = "unalikeability";
    static constexpr std::string_view kCv = "cv";
    static constexpr std::string_view kStd = "std";
    static constexpr std::string_view kCorrelation = "correlation";

    MeasureRegistry();  // everything enabled

    // Comma-separated list of measure names; throws InvalidArgument on an
    // unknown name.
    static MeasureRegistry parse(std::string_view list);
    static const std::vector<std::string>& all_names();

    bool enabled(std::string_view name) const;
    const std::vector<std::string>& enabled_names() const noexcept { return enabled_; }
    std::string to_string() const;

private:
    std::vector<std::string> enabled_;
};

struct ColumnProfile {
    std::string column_name;
    std::size_t column_index = 0;
    std::map<std::string, double> measure_scores;  // raw values
    std::vector<std::string> diagnostics;
    double composite = 0;  // in [0, 1]
    bool selected = false;
};

// Profiles every non-Identifier column, in column order, and marks the k
// highest composites as selected (ties go to the earlier column).
std::vector<ColumnProfile> select_top_k_columns(const Dataset& dataset, std::size_t k,
                                                const MeasureRegistry& measures = {});

// Column indices of the selected profiles, ascending.
std::vector<std::size_t> selected_columns(std::span<const ColumnProfile> profiles);

struct CategoricalAssociation {
    std::string a;
    std::string b;
    double chi_squared = 0;
};

// Chi-squared for every pair of Categorical columns that is not degenerate.
std::vector<CategoricalAssociation> categorical_associations(const Dataset& dataset);

}  // namespace qgen
