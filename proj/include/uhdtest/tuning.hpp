#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uhdtest/battery.hpp"
#include "uhdtest/errors.hpp"
#include "uhdtest/parallel.hpp"
#include "uhdtest/rng.hpp"
#include "uhdtest/stats.hpp"

namespace uhdtest {

struct ThetaGrid {
    std::vector<double> values;  // strictly increasing, all > 0, size >= 6
};

inline void validate_grid(const ThetaGrid& grid) {
    if (grid.values.size() < 6)
        throw GridTooSmallError("theta grid needs at least 6 points, got " +
                                std::to_string(grid.values.size()));
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        if (!(grid.values[i] > 0.0))
            throw std::invalid_argument("theta grid values must be > 0");
        if (i > 0 && !(grid.values[i] > grid.values[i - 1]))
            throw std::invalid_argument("theta grid must be strictly increasing");
    }
}

// 12 geometrically spaced multipliers, 0.05 .. 3.0. The low end keeps only a
// few eigenvalues in the window; the high end spans the whole bulk, which is
// where desk-scale power lives.
inline ThetaGrid default_theta_grid() {
    ThetaGrid g;
    const int s = 12;
    const double lo = 0.05, hi = 3.0;
    for (int i = 0; i < s; ++i)
        g.values.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (s - 1)));
    g.values.back() = hi;
    return g;
}

// Per-split bandwidth eta0 = theta * std of the reference spectrum.
inline double bandwidth_from_theta(double theta, const SpectrumSummary& z_summary) {
    if (!(theta > 0.0)) throw InvalidBandwidthError("theta must be > 0");
    if (!(z_summary.std > 0.0))
        throw DegenerateSpectrumError("reference spectrum has zero dispersion");
    return theta * z_summary.std;
}

enum class SelectionSeries { smoothed, raw };

inline std::vector<double> smooth_window3(const std::vector<double>& dr) {
    std::vector<double> out;
    if (dr.size() < 3) return out;
    out.reserve(dr.size() - 2);
    for (std::size_t k = 0; k + 2 < dr.size(); ++k)
        out.push_back((dr[k] + dr[k + 1] + dr[k + 2]) / 3.0);
    return out;
}

// Steps two-four of the bandwidth selection on a DR-vs-theta curve of length
// s: smooth with a window-3 moving average, track the running variance of the
// (smoothed) series, and pick the smallest l in [3, s-2] whose smoothed DR
// clears max/5 while the running variance has started to fall. Falls back to
// the first maximizer when no index qualifies. Returns a 1-based grid index.
inline int theta_selection_index(const std::vector<double>& dr,
                                 SelectionSeries series = SelectionSeries::smoothed) {
    const int s = static_cast<int>(dr.size());
    if (s < 6) throw GridTooSmallError("selection needs >= 6 DR values");
    const std::vector<double> smoothed = smooth_window3(dr);
    const std::vector<double>& work =
        series == SelectionSeries::smoothed ? smoothed : dr;

    // v_t over the first t+1 working values, t = 1..s-3.
    std::vector<double> running_var(static_cast<std::size_t>(s - 2), 0.0);
    for (int t = 1; t <= s - 3; ++t)
        running_var[t] = stats::population_variance(
            std::span<const double>(work.data(), static_cast<std::size_t>(t) + 1));

    const double peak = *std::max_element(work.begin(), work.end());
    for (int l = 3; l <= s - 2; ++l) {
        const bool signal = work[l - 1] > peak / 5.0;
        const bool settling = running_var[l - 2] > running_var[l - 1];
        if (signal && settling) return l;
    }
    const auto best = std::max_element(work.begin(), work.end());
    return static_cast<int>(best - work.begin()) + 1;
}

inline std::vector<double> dr_curve(const SplitBattery& battery, const ThetaGrid& grid,
                                    double alpha) {
    std::vector<double> dr;
    dr.reserve(grid.values.size());
    for (double theta : grid.values)
        dr.push_back(evaluate_battery(battery, theta, alpha).dr);
    return dr;
}

inline double select_theta_on_battery(const SplitBattery& battery, const ThetaGrid& grid,
                                      double alpha,
                                      SelectionSeries series = SelectionSeries::smoothed) {
    validate_grid(grid);
    const std::vector<double> dr = dr_curve(battery, grid, alpha);
    return grid.values[theta_selection_index(dr, series) - 1];
}

// The same splits are reused across grid points (one battery, same seed), so
// the DR curve varies only through the bandwidth.
inline double select_theta(const DataMatrix& X, const DataMatrix& Y,
                           const TestConfig& config, const ThetaGrid& grid,
                           SelectionSeries series = SelectionSeries::smoothed) {
    validate_grid(grid);
    const SplitBattery battery = build_battery(X, Y, config);
    return select_theta_on_battery(battery, grid, config.alpha, series);
}

// ceil(level*B)-th order statistic: the smallest sample value q with
// #{x <= q}/B >= level.
inline double quantile_order_stat(std::vector<double> samples, double level) {
    if (samples.empty()) throw std::invalid_argument("quantile of empty sample");
    if (!(level > 0.0 && level <= 1.0))
        throw std::invalid_argument("quantile level must be in (0,1]");
    std::sort(samples.begin(), samples.end());
    const std::size_t b = samples.size();
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(b)));
    idx = std::clamp<std::size_t>(idx, 1, b);
    return samples[idx - 1];
}

struct CalibrationResult {
    double delta = 0.0;
    std::vector<double> dr_samples;
    int b = 0;
    int n1 = 0, n2 = 0, n = 0, p = 0, k_splits = 0;
    double alpha = 0.0;
    double theta = 0.0;
    std::uint64_t seed = 0;
};

// Threshold calibration: B fresh standard-Gaussian replicates of the whole
// procedure at a fixed bandwidth multiplier; delta is the empirical
// (1-alpha)-quantile of their decision ratios. Valid for any null population
// because the null law of the statistic is distribution-free.
inline CalibrationResult calibrate_delta(int n1, int n2, int n, int p, int k_splits,
                                         double alpha, int b, double theta,
                                         std::uint64_t seed, int threads = 0,
                                         double eps = 0.05, double eps1 = 0.05) {
    if (b < 1) throw std::invalid_argument("calibrate_delta: b must be >= 1");
    if (!(theta > 0.0)) throw InvalidBandwidthError("calibrate_delta: theta must be > 0");
    TestConfig base;
    base.n = n;
    base.k_splits = k_splits;
    base.alpha = alpha;
    base.eps = eps;
    base.eps1 = eps1;
    base.theta = ThetaSetting::fixed(theta);
    validate_config(base);
    resolve_split_size(base, n1, n2);  // reject invalid sizes up front

    CalibrationResult out;
    out.b = b;
    out.n1 = n1;
    out.n2 = n2;
    out.n = n;
    out.p = p;
    out.k_splits = k_splits;
    out.alpha = alpha;
    out.theta = theta;
    out.seed = seed;
    out.dr_samples.assign(static_cast<std::size_t>(b), 0.0);

    parallel_for(static_cast<std::size_t>(b), threads, [&](std::size_t i) {
        rng::Engine data_eng = rng::make_engine(seed, rng::kStreamCalibData, i);
        Eigen::MatrixXd xv(n1, p), yv(n2, p);
        rng::fill_gaussian(data_eng, xv.data(), xv.data() + xv.size());
        rng::fill_gaussian(data_eng, yv.data(), yv.data() + yv.size());
        DataMatrix X{std::move(xv)}, Y{std::move(yv)};
        TestConfig cfg = base;
        cfg.seed = rng::derive_seed(seed, rng::kStreamCalibSplit, i);
        cfg.threads = 1;
        const SplitBattery battery = build_battery(X, Y, cfg);
        out.dr_samples[i] = evaluate_battery(battery, theta, alpha).dr;
    });
    out.delta = quantile_order_stat(out.dr_samples, 1.0 - alpha);
    return out;
}

}  // namespace uhdtest
