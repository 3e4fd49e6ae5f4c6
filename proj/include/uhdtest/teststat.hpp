#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/mollifier.hpp"
#include "uhdtest/quadrature.hpp"
#include "uhdtest/spectra.hpp"
#include "uhdtest/splitkit.hpp"
#include "uhdtest/stats.hpp"

namespace uhdtest {

// Everything one split contributes to the decision ratio. An auto-rejected
// split votes 1 unconditionally; a discarded split never votes.
struct SplitRecord {
    double gamma = 0.0;
    double eta0 = 0.0;
    double t_x = 0.0;
    double t_y = 0.0;
    double t = 0.0;  // t_x - t_y
    SplitClass cls;
    int vote = 0;
};

// Windowed local statistic: sum of ((lambda_j - gamma)/eta0) K((lambda_j - gamma)/eta0).
// Only eigenvalues with |lambda_j - gamma| < 1.05 eta0 contribute.
inline double local_statistic(const Spectrum& spec, double gamma, double eta0) {
    if (eta0 <= 0.0)
        throw InvalidBandwidthError("local_statistic: eta0 must be > 0, got " +
                                    std::to_string(eta0));
    if (spec.empty()) throw EmptySpectrumError("local_statistic: empty spectrum");
    double t = 0.0;
    for (double lam : spec.eigenvalues) {
        const double x = (lam - gamma) / eta0;
        if (std::abs(x) >= MollifierKernel::support_end) continue;
        t += x * MollifierKernel::evaluate(x);
    }
    return t;
}

inline double two_sample_statistic(const Spectrum& spec_x, const Spectrum& spec_y,
                                   double gamma, double eta0) {
    return local_statistic(spec_x, gamma, eta0) - local_statistic(spec_y, gamma, eta0);
}

namespace detail {

// Squared difference quotient ((K(x1)-K(x2))/(x1-x2))^2; the diagonal is
// removable and handled with the derivative at the midpoint.
template <typename Kernel, typename KernelPrime>
double diff_quotient_sq(const Kernel& k, const KernelPrime& kp, double x1, double x2) {
    const double d = x1 - x2;
    if (std::abs(d) < 1e-5) {
        const double g = kp(0.5 * (x1 + x2));
        return g * g;
    }
    const double q = (k(x1) - k(x2)) / d;
    return q * q;
}

inline std::vector<double> mollifier_breakpoints_adaptive() {
    return {-MollifierKernel::support_end, -1.02, -1.0, 0.0, 1.0, 1.02,
            MollifierKernel::support_end};
}

// Graded panels: dense toward +-1 where the shoulder varies on scale ~2e-3.
inline std::vector<double> mollifier_breakpoints_gauss() {
    std::vector<double> pts;
    const int m = 24;
    for (int i = m; i >= 1; --i) {
        double u = 0.05 * (static_cast<double>(i) / m) * (static_cast<double>(i) / m);
        pts.push_back(-1.0 - u);
    }
    const double plateau[] = {-1.0, -0.998, -0.99, -0.96, -0.9, -0.7, -0.4, 0.0,
                              0.4,  0.7,    0.9,   0.96,  0.99, 0.998, 1.0};
    pts.insert(pts.end(), std::begin(plateau), std::end(plateau));
    for (int i = 1; i <= m; ++i) {
        double u = 0.05 * (static_cast<double>(i) / m) * (static_cast<double>(i) / m);
        pts.push_back(1.0 + u);
    }
    return pts;
}

}  // namespace detail

// Double integral of ((K(x1)-K(x2))/(x1-x2))^2 over [lo,hi]^2, nested
// adaptive Simpson. A constant kernel yields exactly zero.
template <typename Kernel, typename KernelPrime>
double h12_box_adaptive(const Kernel& k, const KernelPrime& kp, double lo, double hi,
                        std::vector<double> breakpoints = {}, double tol = 1e-9) {
    std::vector<double> outer{lo};
    for (double b : breakpoints)
        if (b > lo && b < hi) outer.push_back(b);
    outer.push_back(hi);
    auto inner = [&](double x1) {
        std::vector<double> pts = outer;
        if (x1 > lo && x1 < hi) {
            pts.push_back(x1);
            std::sort(pts.begin(), pts.end());
        }
        return quad::adaptive_simpson_split(
            [&](double x2) { return detail::diff_quotient_sq(k, kp, x1, x2); }, pts,
            tol * 1e-2);
    };
    return quad::adaptive_simpson_split(inner, outer, tol);
}

// Same integral by tensorized Gauss-Legendre over explicit panels.
template <typename Kernel, typename KernelPrime>
double h12_box_gauss(const Kernel& k, const KernelPrime& kp,
                     const std::vector<double>& pts, int order = 24) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (std::size_t j = 0; j + 1 < pts.size(); ++j)
            total += quad::integrate_gl(
                [&](double x1) {
                    return quad::integrate_gl(
                        [&](double x2) { return detail::diff_quotient_sq(k, kp, x1, x2); },
                        pts[j], pts[j + 1], order);
                },
                pts[i], pts[i + 1], order);
    return total;
}

// Tails in closed form: for x2 outside [-E, E] and the kernel zero there,
// the inner integral reduces to K(x1)^2 (1/(E-x1) + 1/(E+x1)).
template <typename Kernel>
double kernel_tail_weight(const Kernel& k, double x, double support_end) {
    const double kk = k(x);
    return kk * kk * (1.0 / (support_end - x) + 1.0 / (support_end + x));
}

struct VarianceConstant {
    double v = 0.0;
    std::string method;
    double est_error = 0.0;  // relative disagreement of the two schemes
};

namespace detail {

// Scheme 1: adaptive panel rule specialized to the mollifier's structure.
// On the plateau the kernel is constant, so the plateau-vs-plateau block
// vanishes and the shoulder-vs-plateau inner integrals have closed forms;
// only shoulder blocks need nested adaptive quadrature. The whole integrand
// is mirror-symmetric, so the positive-shoulder blocks are computed once and
// doubled.
inline double mollifier_box_adaptive() {
    const double E = MollifierKernel::support_end;
    auto k = [](double x) { return MollifierKernel::evaluate(x); };
    auto kp = [](double x) { return MollifierKernel::derivative(x); };
    const std::vector<double> shoulder{1.0, 1.001, 1.0025, 1.005, 1.01, 1.02, E};
    const std::vector<double> plateau{-1.0, -0.999, -0.99, -0.9, 0.0, 0.9, 0.99, 0.999, 1.0};

    // x1 on the plateau, x2 on the positive shoulder (doubled for the mirror).
    auto inner_plateau = [&](double x1) {
        return quad::adaptive_simpson_split(
            [&](double x2) {
                const double d = x2 - x1;
                const double r = (1.0 - k(x2)) / d;
                return r * r;
            },
            shoulder, 1e-12);
    };
    const double p_row = quad::adaptive_simpson_split(inner_plateau, plateau, 1e-10);

    // x1 on the positive shoulder: closed-form plateau part plus adaptive
    // shoulder blocks (diagonal split for the same-shoulder block).
    auto inner_shoulder = [&](double x1) {
        const double k1 = k(x1);
        double plateau_part = 0.0;
        if (k1 != 1.0) {
            const double c = (k1 - 1.0) * (k1 - 1.0);
            plateau_part = c * (1.0 / (x1 - 1.0) - 1.0 / (x1 + 1.0));
        }
        std::vector<double> same = shoulder;
        if (x1 > 1.0 && x1 < E) {
            same.push_back(x1);
            std::sort(same.begin(), same.end());
        }
        const double same_part = quad::adaptive_simpson_split(
            [&](double x2) { return diff_quotient_sq(k, kp, x1, x2); }, same, 1e-12);
        const double far_part = quad::adaptive_simpson(
            [&](double x2) {
                const double r = (k1 - k(x2)) / (x1 - x2);
                return r * r;
            },
            -E, -1.0, 1e-13);
        return plateau_part + same_part + far_part;
    };
    const double s_row = quad::adaptive_simpson_split(inner_shoulder, shoulder, 1e-10);
    return 2.0 * p_row + 2.0 * s_row;
}

// Tail of scheme 1: the plateau part of the closed-form reduction integrates
// exactly; the shoulders are adaptive.
inline double mollifier_tail_adaptive() {
    const double E = MollifierKernel::support_end;
    auto k = [](double x) { return MollifierKernel::evaluate(x); };
    const double plateau_part = 2.0 * std::log((E + 1.0) / (E - 1.0));
    auto tail = [&](double x) { return kernel_tail_weight(k, x, E); };
    const double shoulder_part =
        quad::adaptive_simpson_split(tail, {1.0, 1.001, 1.0025, 1.005, 1.01, 1.02, E},
                                     1e-13);
    return plateau_part + 2.0 * shoulder_part;
}

inline VarianceConstant compute_variance_constant() {
    const double E = MollifierKernel::support_end;
    auto k = [](double x) { return MollifierKernel::evaluate(x); };
    auto kp = [](double x) { return MollifierKernel::derivative(x); };
    auto tail = [&](double x) { return kernel_tail_weight(k, x, E); };

    // Scheme 1: adaptive panel rule with plateau reductions.
    const double va =
        (mollifier_box_adaptive() + 2.0 * mollifier_tail_adaptive()) /
        (2.0 * M_PI * M_PI);

    // Scheme 2: tensorized Gauss-Legendre on graded panels, fully numeric.
    const auto pts = detail::mollifier_breakpoints_gauss();
    const double box_g = h12_box_gauss(k, kp, pts);
    const double tail_g = quad::integrate_gl_panels(tail, pts);
    const double vg = (box_g + 2.0 * tail_g) / (2.0 * M_PI * M_PI);

    VarianceConstant out;
    out.v = va;
    out.method = "adaptive-panel-2d cross-checked against tensor-gauss-legendre";
    out.est_error = std::abs(va - vg) / std::max(std::abs(va), 1e-300);
    if (out.est_error > 1e-6)
        throw QuadratureError("variance constant schemes disagree: " +
                              std::to_string(va) + " vs " + std::to_string(vg));
    return out;
}

}  // namespace detail

// Computed once per process, then shared read-only.
inline const VarianceConstant& variance_constant() {
    static const VarianceConstant vc = detail::compute_variance_constant();
    return vc;
}

// Per-split decision: 1 iff |t| >= z_{1-alpha/2} sqrt(2 v). Boundary inclusive.
inline int split_decision(double t, double alpha, const VarianceConstant& v) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("split_decision: alpha must be in (0,1)");
    const double threshold = stats::normal_quantile(1.0 - alpha / 2.0) *
                             std::sqrt(2.0 * v.v);
    return std::abs(t) >= threshold ? 1 : 0;
}

}  // namespace uhdtest
