#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/mollifier.hpp"
#include "uhdtest/quadrature.hpp"

namespace uhdtest {

// Eigenvalues of a population covariance; all bounded away from zero.
struct PopulationSpectrum {
    std::vector<double> sigma;

    int p() const { return static_cast<int>(sigma.size()); }
};

inline void validate_population(const PopulationSpectrum& pop) {
    if (pop.sigma.empty()) throw DimensionError("population spectrum is empty");
    for (double s : pop.sigma)
        if (!(s > 0.0)) throw PSDError("population eigenvalue " + std::to_string(s) +
                                       " is not positive");
}

// k-th moment of the population ESD: (1/p) sum sigma_j^k.
inline double esd_moment(const PopulationSpectrum& pop, int k) {
    if (k < 1) throw std::invalid_argument("esd_moment: k >= 1");
    double s = 0.0;
    for (double x : pop.sigma) s += std::pow(x, k);
    return s / static_cast<double>(pop.sigma.size());
}

namespace rmt_detail {

// (q_j, w_j) with q_j = phi^{1/2}/sigma_j, collapsed over repeated values.
struct Compressed {
    std::vector<std::pair<double, double>> terms;  // (q, weight), weights sum to 1
    double phi = 0.0;
};

inline Compressed compress(const PopulationSpectrum& pop, double phi) {
    validate_population(pop);
    if (!(phi > 0.0)) throw std::invalid_argument("phi must be > 0");
    std::map<double, double> acc;
    const double w = 1.0 / static_cast<double>(pop.sigma.size());
    const double sq = std::sqrt(phi);
    for (double s : pop.sigma) acc[sq / s] += w;
    Compressed c;
    c.phi = phi;
    c.terms.assign(acc.begin(), acc.end());
    return c;
}

inline std::complex<double> self_energy(const Compressed& c, std::complex<double> m) {
    std::complex<double> s{0.0, 0.0};
    for (const auto& [q, w] : c.terms) s += w / (q + m);
    return c.phi * s;
}

inline std::complex<double> self_energy_prime(const Compressed& c,
                                              std::complex<double> m) {
    std::complex<double> s{0.0, 0.0};
    for (const auto& [q, w] : c.terms) {
        const std::complex<double> d = q + m;
        s -= w / (d * d);
    }
    return c.phi * s;
}

// Unique m in C+ with 1/m = -z + S(m): damped fixed-point iteration with a
// Newton polish once it is close. Residual target |1/(-z+S(m)) - m| < 1e-12.
inline std::complex<double> solve_m(const Compressed& c, std::complex<double> z,
                                    std::complex<double> init = {0.0, 1.0}) {
    if (!(z.imag() > 0.0))
        throw std::invalid_argument("stieltjes transform requires Im z > 0");
    std::complex<double> m = init;
    if (!(m.imag() > 0.0)) m = {0.0, 1.0};
    constexpr int kMaxIter = 10000;
    constexpr double kResidual = 1e-12;
    double res = 1.0;
    for (int it = 0; it < kMaxIter; ++it) {
        const std::complex<double> next = 1.0 / (-z + self_energy(c, m));
        res = std::abs(next - m);
        if (res < 1e-4) {
            // Newton on G(m) = m(-z + S(m)) - 1.
            std::complex<double> mn = m;
            bool ok = true;
            for (int nit = 0; nit < 60; ++nit) {
                const std::complex<double> s = self_energy(c, mn);
                const std::complex<double> g = mn * (-z + s) - 1.0;
                const std::complex<double> gp = (-z + s) + mn * self_energy_prime(c, mn);
                const std::complex<double> step = g / gp;
                mn -= step;
                if (!(mn.imag() > 0.0) || !std::isfinite(mn.real()) ||
                    !std::isfinite(mn.imag())) {
                    ok = false;
                    break;
                }
                if (std::abs(step) < 1e-15) break;
            }
            if (ok) {
                const double polished =
                    std::abs(1.0 / (-z + self_energy(c, mn)) - mn);
                if (polished < kResidual && mn.imag() > 0.0) return mn;
            }
        }
        m = 0.5 * m + 0.5 * next;
        if (!(m.imag() > 0.0)) m = {m.real(), 1e-12};
        if (res < kResidual && m.imag() > 0.0) return m;
    }
    throw ConvergenceError("stieltjes fixed point did not reach residual 1e-12 at z = (" +
                           std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
}

inline std::vector<double> default_eta_ladder() {
    return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
}

// Density via the inversion formula: Im m(x + i eta)/pi down an eta ladder,
// Richardson-extrapolated on the two smallest rungs to remove the O(eta) bias.
// `warm` carries per-rung starts across a sweep in x.
inline double density_ladder(const Compressed& c, double x,
                             const std::vector<double>& ladder,
                             std::vector<std::complex<double>>* warm = nullptr) {
    if (ladder.size() < 2)
        throw std::invalid_argument("eta ladder needs at least two rungs");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i - 1]) || !(ladder[i] > 0.0))
            throw std::invalid_argument("eta ladder must decrease toward 0");
    std::vector<std::complex<double>> local;
    std::vector<std::complex<double>>& starts = warm ? *warm : local;
    if (starts.size() != ladder.size())
        starts.assign(ladder.size(), std::complex<double>{0.0, 1.0});
    double im_prev = 0.0, im_last = 0.0;
    for (std::size_t r = 0; r < ladder.size(); ++r) {
        const std::complex<double> z{x, ladder[r]};
        const std::complex<double> init = r == 0 ? starts[0] : starts[r - 1];
        const std::complex<double> m = solve_m(c, z, starts[r].imag() > 0 ? starts[r] : init);
        starts[r] = m;
        im_prev = im_last;
        im_last = m.imag();
    }
    const double e1 = ladder[ladder.size() - 2], e2 = ladder.back();
    const double extrapolated = (e1 * im_last - e2 * im_prev) / (e1 - e2);
    return std::max(extrapolated / M_PI, 0.0);
}

inline double z_of_m(const Compressed& c, double m) {
    double s = 0.0;
    for (const auto& [q, w] : c.terms) s += w / (q + m);
    return c.phi * s - 1.0 / m;
}

inline double z_prime_of_m(const Compressed& c, double m) {
    double s = 0.0;
    for (const auto& [q, w] : c.terms) s += w / ((q + m) * (q + m));
    return 1.0 / (m * m) - c.phi * s;
}

inline double bisect_z_prime(const Compressed& c, double lo, double hi) {
    double flo = z_prime_of_m(c, lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = z_prime_of_m(c, mid);
        if ((flo > 0.0) == (fm > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-14 * std::max(1.0, std::abs(lo))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace rmt_detail

inline std::complex<double> stieltjes_fixed_point(std::complex<double> z,
                                                  const PopulationSpectrum& pop,
                                                  double phi) {
    return rmt_detail::solve_m(rmt_detail::compress(pop, phi), z);
}

inline double density_from_stieltjes(double x, const PopulationSpectrum& pop, double phi,
                                     const std::vector<double>& eta_ladder =
                                         rmt_detail::default_eta_ladder()) {
    rmt_detail::Compressed c = rmt_detail::compress(pop, phi);
    return rmt_detail::density_ladder(c, x, eta_ladder);
}

// Support endpoints of the positive bulk: critical points of z(m) = S(m) - 1/m
// on the real line, the classical edge characterization. Requires phi > 1.
inline std::pair<double, double> support_interval(const PopulationSpectrum& pop,
                                                  double phi) {
    if (!(phi > 1.0))
        throw std::invalid_argument("support_interval: needs phi > 1");
    rmt_detail::Compressed c = rmt_detail::compress(pop, phi);
    const double q_min = c.terms.front().first;  // pole closest to zero

    // Right edge: critical m in (-q_min, 0).
    double m_hi = -1e-9 * q_min, m_lo = m_hi;
    for (double t = 1e-6; t < 1.0 - 1e-9; t = t * 1.35 + 1e-4) {
        const double m = -q_min * t;
        if (rmt_detail::z_prime_of_m(c, m) < 0.0) { m_lo = m; break; }
        m_hi = m;
    }
    if (m_lo == m_hi) throw ConvergenceError("right support edge not bracketed");
    const double m_right = rmt_detail::bisect_z_prime(c, m_lo, m_hi);

    // Left edge: critical m in (0, inf).
    double a = 1e-8 * q_min, b = a;
    for (double m = 1e-6 * q_min; m < 1e12 * q_min; m *= 1.5) {
        if (rmt_detail::z_prime_of_m(c, m) < 0.0) { b = m; break; }
        a = m;
    }
    if (a == b) throw ConvergenceError("left support edge not bracketed");
    const double m_left = rmt_detail::bisect_z_prime(c, a, b);

    return {rmt_detail::z_of_m(c, m_left), rmt_detail::z_of_m(c, m_right)};
}

enum class SpectralMode { exact_fixed_point, semicircle_approx };

// Asymptotic density descriptor: moments, support, a density evaluator, and
// the upper-tail CDF used for classical locations.
struct SpectralModel {
    double phi = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double support_lo = 0.0;
    double support_hi = 0.0;
    SpectralMode mode = SpectralMode::semicircle_approx;
    std::function<double(double)> density;
    std::function<double(double)> cdf_above;  // integral of the density over (x, inf)
};

// Semicircle approximation: center m1 sqrt(phi), radius 2 sqrt(m2).
inline SpectralModel semicircle_model(const PopulationSpectrum& pop, double phi) {
    validate_population(pop);
    if (phi < 10.0)
        std::cerr << "uhdtest: warning: semicircle approximation at phi = " << phi
                  << " < 10\n";
    SpectralModel model;
    model.phi = phi;
    model.m1 = esd_moment(pop, 1);
    model.m2 = esd_moment(pop, 2);
    model.mode = SpectralMode::semicircle_approx;
    const double center = model.m1 * std::sqrt(phi);
    const double radius = 2.0 * std::sqrt(model.m2);
    model.support_lo = center - radius;
    model.support_hi = center + radius;
    const double m2 = model.m2;
    model.density = [center, m2, radius](double x) {
        const double u = x - center;
        if (std::abs(u) >= radius) return 0.0;
        return std::sqrt(4.0 * m2 - u * u) / (2.0 * M_PI * m2);
    };
    model.cdf_above = [center, radius](double x) {
        const double u = x - center;
        if (u <= -radius) return 1.0;
        if (u >= radius) return 0.0;
        return 0.5 - (u * std::sqrt(radius * radius - u * u) +
                      radius * radius * std::asin(u / radius)) /
                         (M_PI * radius * radius);
    };
    return model;
}

// Exact fixed-point model: density tabulated over the support by a warm-started
// ladder sweep; CDF by cumulative trapezoid on the same grid.
inline SpectralModel exact_model(const PopulationSpectrum& pop, double phi,
                                 int table_points = 4001) {
    if (table_points < 101) throw std::invalid_argument("table_points too small");
    SpectralModel model;
    model.phi = phi;
    model.m1 = esd_moment(pop, 1);
    model.m2 = esd_moment(pop, 2);
    model.mode = SpectralMode::exact_fixed_point;
    auto [lo, hi] = support_interval(pop, phi);
    model.support_lo = lo;
    model.support_hi = hi;

    rmt_detail::Compressed c = rmt_detail::compress(pop, phi);
    const double margin = 0.05 * (hi - lo);
    const double x0 = lo - margin, x1 = hi + margin;
    const double dx = (x1 - x0) / (table_points - 1);

    auto dens = std::make_shared<std::vector<double>>(table_points);
    auto cum = std::make_shared<std::vector<double>>(table_points);
    const auto ladder = rmt_detail::default_eta_ladder();
    std::vector<std::complex<double>> warm;
    for (int i = 0; i < table_points; ++i)
        (*dens)[i] = rmt_detail::density_ladder(c, x0 + i * dx, ladder, &warm);
    (*cum)[0] = 0.0;
    for (int i = 1; i < table_points; ++i)
        (*cum)[i] = (*cum)[i - 1] + 0.5 * ((*dens)[i - 1] + (*dens)[i]) * dx;
    const double total = cum->back();

    model.density = [dens, x0, dx, table_points](double x) {
        const double t = (x - x0) / dx;
        if (t <= 0.0 || t >= table_points - 1) return 0.0;
        const int i = static_cast<int>(t);
        const double f = t - i;
        return (1.0 - f) * (*dens)[i] + f * (*dens)[i + 1];
    };
    model.cdf_above = [cum, x0, dx, table_points, total](double x) {
        const double t = (x - x0) / dx;
        if (t <= 0.0) return total;
        if (t >= table_points - 1) return 0.0;
        const int i = static_cast<int>(t);
        const double f = t - i;
        const double below = (1.0 - f) * (*cum)[i] + f * (*cum)[i + 1];
        return std::clamp(total - below, 0.0, total);
    };
    return model;
}

// Classical locations: omega_i solves cdf_above(omega_i) = i/n, i = 1..n,
// by bisection to 1e-10. Targets are scaled by the tabulated total mass so
// the extreme quantiles stay within the table.
struct ClassicalLocations {
    std::vector<double> omega;  // strictly decreasing
};

inline ClassicalLocations classical_locations(const SpectralModel& model, int n) {
    if (n < 2) throw std::invalid_argument("classical_locations: n >= 2");
    const double total = model.cdf_above(model.support_lo - 1.0);
    const double margin = 0.06 * (model.support_hi - model.support_lo);
    ClassicalLocations out;
    out.omega.reserve(n);
    for (int i = 1; i <= n; ++i) {
        const double target = total * static_cast<double>(i) / n;
        double lo = model.support_lo - margin, hi = model.support_hi + margin;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (model.cdf_above(mid) > target)
                lo = mid;
            else
                hi = mid;
            if (hi - lo < 1e-10) break;
        }
        out.omega.push_back(0.5 * (lo + hi));
    }
    return out;
}

// Median classical location (odd n: the middle one; even n: average of the
// two middle ones).
inline double median_classical_location(const SpectralModel& model, int n) {
    ClassicalLocations loc = classical_locations(model, n);
    if (n % 2 == 1) return loc.omega[(n + 1) / 2 - 1];
    return 0.5 * (loc.omega[n / 2 - 1] + loc.omega[n / 2]);
}

// Theoretical mean of the windowed statistic:
// n * integral of ((t-gamma)/eta0) K((t-gamma)/eta0) d rho(t).
inline double theoretical_mean(const SpectralModel& model, double gamma, double eta0,
                               int n) {
    if (!(eta0 > 0.0)) throw InvalidBandwidthError("theoretical_mean: eta0 > 0");
    const double lo = std::max(model.support_lo, gamma - MollifierKernel::support_end * eta0);
    const double hi = std::min(model.support_hi, gamma + MollifierKernel::support_end * eta0);
    if (!(lo < hi)) return 0.0;
    const double integral = quad::adaptive_simpson(
        [&](double t) {
            const double x = (t - gamma) / eta0;
            return x * MollifierKernel::evaluate(x) * model.density(t);
        },
        lo, hi, 1e-12);
    return n * integral;
}

// Computable diagnostic for the weak-alternative condition: the moment
// separation phi^{1/2}|m1 gap| + phi^{-1/2}|m2 gap| against the eta0^{-2} n^{-1}
// scale. The diverging constant it is compared against is unspecified, so the
// caller interprets the pair.
struct AlternativeStrength {
    double lhs = 0.0;
    double scale = 0.0;
};

inline AlternativeStrength local_alternative_strength(const PopulationSpectrum& pop1,
                                                      const PopulationSpectrum& pop2,
                                                      double phi, double eta0, int n) {
    if (pop1.p() != pop2.p())
        throw DimensionError("populations must share p");
    if (!(eta0 > 0.0)) throw InvalidBandwidthError("eta0 must be > 0");
    AlternativeStrength out;
    const double sq = std::sqrt(phi);
    out.lhs = sq * std::abs(esd_moment(pop1, 1) - esd_moment(pop2, 1)) +
              std::abs(esd_moment(pop1, 2) - esd_moment(pop2, 2)) / sq;
    out.scale = 1.0 / (eta0 * eta0 * static_cast<double>(n));
    return out;
}

}  // namespace uhdtest
