#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "uhdtest/errors.hpp"

namespace uhdtest::stats {

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Population variance (divide by length).
inline double population_variance(std::span<const double> xs) {
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size());
}

inline double population_std(std::span<const double> xs) {
    return std::sqrt(population_variance(xs));
}

// Median of a monotone (ascending or descending) sequence: mid value for odd
// length, average of the two middle values for even length.
inline double median_of_sorted(std::span<const double> xs) {
    if (xs.empty()) throw EmptySpectrumError("median of empty sequence");
    std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw EmptySpectrumError("median of empty sequence");
    std::sort(xs.begin(), xs.end());
    return median_of_sorted(xs);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / 1.4142135623730951);
}

// Wichura's AS241 (PPND16): inverse standard normal CDF, ~1e-15 accuracy.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

// Exact Binomial(k, p) CDF by log-space term accumulation.
inline double binomial_cdf(int m, int k, double p) {
    if (m < 0) return 0.0;
    if (m >= k) return 1.0;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    double cdf = 0.0;
    const double lp = std::log(p), lq = std::log1p(-p);
    for (int i = 0; i <= m; ++i) {
        double lg = std::lgamma(k + 1.0) - std::lgamma(i + 1.0) -
                    std::lgamma(k - i + 1.0) + i * lp + (k - i) * lq;
        cdf += std::exp(lg);
    }
    return std::min(cdf, 1.0);
}

// Smallest m with P(Bin(k,p) <= m) >= level.
inline int binomial_quantile(int k, double p, double level) {
    if (p <= 0.0) return 0;
    double cdf = 0.0;
    const double lp = std::log(p), lq = std::log1p(-p);
    for (int m = 0; m <= k; ++m) {
        double lg = std::lgamma(k + 1.0) - std::lgamma(m + 1.0) -
                    std::lgamma(k - m + 1.0) + m * lp + (k - m) * lq;
        cdf += std::exp(lg);
        if (cdf >= level) return m;
    }
    return k;
}

// One-sample KS statistic against the standard normal.
inline double ks_statistic_vs_normal(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("ks: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = normal_cdf(xs[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    return d;
}

// Asymptotic Kolmogorov tail probability with Stephens' finite-n adjustment.
inline double ks_pvalue(double d, std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double lambda = d * (rn + 0.12 + 0.11 / rn);
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
        s += (j % 2 == 1) ? term : -term;
    }
    return std::clamp(s, 0.0, 1.0);
}

}  // namespace uhdtest::stats
