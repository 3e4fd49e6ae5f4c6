#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "uhdtest/errors.hpp"

namespace uhdtest::quad {

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10,
                        int max_depth = 48) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Integrate over [a,b] split at interior breakpoints (clamped to the range).
template <typename F>
double adaptive_simpson_split(const F& f, std::vector<double> pts,
                              double tol = 1e-10) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        total += adaptive_simpson(f, pts[i], pts[i + 1],
                                  tol / static_cast<double>(pts.size() - 1));
    return total;
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
struct GaussRule {
    std::vector<double> nodes, weights;
};

inline const GaussRule& gauss_legendre(int n) {
    static std::vector<GaussRule> cache(65);
    if (n < 1 || n > 64) throw QuadratureError("gauss_legendre: order out of range");
    GaussRule& rule = cache[static_cast<std::size_t>(n)];
    if (!rule.nodes.empty()) return rule;
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    rule = std::move(r);
    return rule;
}

template <typename F>
double integrate_gl(const F& f, double a, double b, int order = 20) {
    const GaussRule& r = gauss_legendre(order);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * f(c + h * r.nodes[i]);
    return s * h;
}

template <typename F>
double integrate_gl_panels(const F& f, const std::vector<double>& pts,
                           int order = 20) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        total += integrate_gl(f, pts[i], pts[i + 1], order);
    return total;
}

}  // namespace uhdtest::quad
