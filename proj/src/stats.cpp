#include "qgen/stats.hpp"

#include <cmath>
#include <limits>

#include "qgen/error.hpp"

namespace qgen::stats {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-16;

double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t) || !(df > 0)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(0.5 * df, 0.5, x);
}

double normal_two_sided_p(double z) {
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

double mean(std::span<const double> values) {
    double sum = 0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double ss = 0;
    for (double v : values) ss += (v - m) * (v - m);
    return ss / static_cast<double>(values.size() - 1);
}

double population_std(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double m = mean(values);
    double ss = 0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = lo + 1 < sorted.size() ? lo + 1 : lo;
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

TestOutcome welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw Error(ErrorCode::InsufficientRows, "Welch t-test needs at least two values per sample");
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double m1 = mean(a);
    const double m2 = mean(b);
    const double v1 = sample_variance(a);
    const double v2 = sample_variance(b);

    TestOutcome out;
    out.test_name = "welch-t";
    const double se2 = v1 / n1 + v2 / n2;
    if (se2 == 0.0) {
        if (m1 != m2) throw Error(ErrorCode::ZeroVariance, "both samples are constant with different means");
        out.df = n1 + n2 - 2;
        return out;  // t = 0, p = 1, d = 0
    }
    out.statistic = (m1 - m2) / std::sqrt(se2);
    const double t1 = v1 / n1;
    const double t2 = v2 / n2;
    out.df = se2 * se2 / (t1 * t1 / (n1 - 1) + t2 * t2 / (n2 - 1));
    out.p_value = student_t_two_sided_p(out.statistic, out.df);
    const double pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2);
    out.effect_size = (m1 - m2) / std::sqrt(pooled);
    return out;
}

TestOutcome two_proportion_z_test(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw Error(ErrorCode::InsufficientRows, "two-proportion test on an empty sample");
    TestOutcome out;
    out.test_name = "two-proportion-z";
    const double p1 = static_cast<double>(x1) / static_cast<double>(n1);
    const double p2 = static_cast<double>(x2) / static_cast<double>(n2);
    const double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
    const double se = std::sqrt(pooled * (1 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
    out.effect_size = std::fabs(p1 - p2);
    if (se == 0.0) return out;
    out.statistic = (p1 - p2) / se;
    out.p_value = normal_two_sided_p(out.statistic);
    return out;
}

TestOutcome one_proportion_z_test(std::size_t x, std::size_t n, double p0) {
    if (n == 0) throw Error(ErrorCode::InsufficientRows, "one-proportion test on an empty sample");
    TestOutcome out;
    out.test_name = "one-proportion-z";
    const double p = static_cast<double>(x) / static_cast<double>(n);
    out.effect_size = std::fabs(p - p0);
    const double se = std::sqrt(p0 * (1 - p0) / static_cast<double>(n));
    if (se == 0.0) return out;
    out.statistic = (p - p0) / se;
    out.p_value = normal_two_sided_p(out.statistic);
    return out;
}

}  // namespace qgen::stats
