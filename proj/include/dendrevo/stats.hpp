#pragma once

// Descriptive statistics and the two-sided Welch t-test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include "dendrevo/error.hpp"

namespace dendrevo {

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0; ///< sample standard deviation (n-1); 0 for a single value
    double min = 0.0;
    double max = 0.0;
};

inline double mean_of(std::span<const double> xs)
{
    double s = 0.0;
    for (double x : xs)
        s += x;
    return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double variance_of(std::span<const double> xs)
{
    if (xs.size() < 2)
        return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs)
        ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

inline Summary summarize(std::span<const double> xs)
{
    if (xs.empty())
        throw InvalidInput("cannot summarize an empty sample");
    Summary s;
    s.count = xs.size();
    s.mean = mean_of(xs);
    s.std = std::sqrt(variance_of(xs));
    auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    s.min = *lo;
    s.max = *hi;
    // guard against the mean landing a rounding step outside [min, max]
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x)
{
    constexpr int max_iter = 10000;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps)
            break;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0))
        throw InvalidParameters("incomplete beta needs positive shape parameters");
    if (!(x >= 0.0 && x <= 1.0))
        throw InvalidParameters("incomplete beta argument outside [0, 1]");
    if (x == 0.0)
        return 0.0;
    if (x == 1.0)
        return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // the continued fraction converges fastest below the distribution mean
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df)
{
    if (!(df > 0.0))
        throw InvalidParameters("degrees of freedom must be positive");
    if (std::isinf(t))
        return 0.0;
    const double t2 = t * t;
    const double x = df / (df + t2);
    if (x >= 1.0)
        return 1.0;
    const double p = regularized_incomplete_beta(df / 2.0, 0.5, x);
    return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

struct WelchResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

/// Two-sided Welch unequal-variance t-test with Welch-Satterthwaite df.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() < 2 || b.size() < 2)
        throw InvalidInput("Welch t-test needs at least two values per sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = variance_of(a) / na;
    const double vb = variance_of(b) / nb;
    if (va == 0.0 && vb == 0.0)
        throw DegenerateSample("both samples have zero variance");
    WelchResult r;
    const double se2 = va + vb;
    r.t = (mean_of(a) - mean_of(b)) / std::sqrt(se2);
    r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = student_t_two_sided_p(r.t, r.df);
    return r;
}

} // namespace dendrevo
