#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qgen::stats {

// I_x(a, b), evaluated by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees
// of freedom (df may be fractional).
double student_t_two_sided_p(double t, double df);

// Two-sided tail probability P(|Z| >= |z|) for the standard normal.
double normal_two_sided_p(double z);

double mean(std::span<const double> values);
double sample_variance(std::span<const double> values);
double population_std(std::span<const double> values);

// Linear interpolation between closest ranks; `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double q);

struct TestOutcome {
    std::string test_name;
    double statistic = 0;
    double p_value = 1;
    double effect_size = 0;
    double df = 0;
};

// Welch's unequal-variance t-test of a against b; effect_size is Cohen's d
// with the pooled standard deviation. Throws ZeroVariance when both samples
// are constant with different means and InsufficientRows when either side
// has fewer than two values.
TestOutcome welch_t_test(std::span<const double> a, std::span<const double> b);

// Pooled two-proportion z-test of x1/n1 against x2/n2; effect_size is
// |x1/n1 - x2/n2|.
TestOutcome two_proportion_z_test(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2);

// One-proportion z-test of x/n against p0; effect_size is |x/n - p0|.
TestOutcome one_proportion_z_test(std::size_t x, std::size_t n, double p0);

}  // namespace qgen::stats
