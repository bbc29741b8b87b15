#pragma once
// Student t-test machinery: regularized incomplete beta via Lentz's
// continued fraction, two-sided p-values, and the paired test used to
// compare per-seed MSE lists.

#include <cmath>
#include <limits>
#include <vector>

#include "carl/errors.hpp"

namespace carl {

namespace stats_detail {

inline double incbeta_cf(double a, double b, double x) {
    const double eps = 1e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace stats_detail

/// Regularized incomplete beta I_x(a, b).
inline double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * stats_detail::incbeta_cf(a, b, x) / a;
    return 1.0 - front * stats_detail::incbeta_cf(b, a, 1.0 - x) / b;
}

/// P(|T| >= t) for Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    if (df <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return incbeta(df / 2.0, 0.5, df / (df + t * t));
}

struct PairedTTest {
    double t = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    double mean_diff = 0.0;
    long n = 0;
};

/// Two-sided paired t-test of a vs b (positive t means a > b on average).
inline PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ShapeError("paired t-test needs equal-length samples, got " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    PairedTTest r;
    r.n = static_cast<long>(a.size());
    if (r.n == 0) return r;
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(r.n);
    r.mean_diff = mean;
    if (r.n < 2) return r;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(r.n - 1));
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(r.n)));
    r.p = student_t_two_sided_p(r.t, static_cast<double>(r.n - 1));
    return r;
}

}  // namespace carl
