#pragma once

#include <cmath>

namespace uhdtest {

// Smooth compactly supported window: 1 on [-1,1], 0 outside (-1.05,1.05),
// exp(1/0.0025 - 1/(0.0025 - (|x|-1)^2)) on the shoulders. The shoulder
// exponent is evaluated directly and flushed to zero below exp(-700).
struct MollifierKernel {
    static constexpr double plateau_end = 1.0;
    static constexpr double support_end = 1.05;

    static double evaluate(double x) {
        const double a = std::abs(x);
        if (a <= plateau_end) return 1.0;
        if (a >= support_end) return 0.0;
        const double u = a - 1.0;
        const double e = 400.0 - 1.0 / (0.0025 - u * u);
        return e < -700.0 ? 0.0 : std::exp(e);
    }

    static double derivative(double x) {
        const double a = std::abs(x);
        if (a <= plateau_end || a >= support_end) return 0.0;
        const double u = a - 1.0;
        const double denom = 0.0025 - u * u;
        const double e = 400.0 - 1.0 / denom;
        if (e < -700.0) return 0.0;
        const double d = std::exp(e) * (-2.0 * u / (denom * denom));
        return x > 0.0 ? d : -d;
    }
};

inline double mollifier(double x) { return MollifierKernel::evaluate(x); }

}  // namespace uhdtest
