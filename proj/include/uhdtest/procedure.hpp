#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "uhdtest/battery.hpp"
#include "uhdtest/stats.hpp"
#include "uhdtest/tuning.hpp"

namespace uhdtest {

enum class DrThresholdMode { binomial, gaussian };

// Asymptotic decision-ratio thresholds: the exact Binomial(K, alpha) quantile
// or its Gaussian approximation alpha + z_{1-alpha/2} sqrt(alpha(1-alpha)/K).
inline double dr_threshold(int k_splits, double alpha, DrThresholdMode mode) {
    if (k_splits < 1) throw std::invalid_argument("dr_threshold: k_splits >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("dr_threshold: alpha in (0,1)");
    if (mode == DrThresholdMode::gaussian)
        return alpha + stats::normal_quantile(1.0 - alpha / 2.0) *
                           std::sqrt(alpha * (1.0 - alpha) / k_splits);
    const int m = stats::binomial_quantile(k_splits, alpha, 1.0 - alpha);
    return static_cast<double>(m) / static_cast<double>(k_splits);
}

struct DecisionSummary {
    double dr = 0.0;
    int n_auto_reject = 0;
    int n_efficient = 0;
    int n_discarded = 0;
    double delta_used = 0.0;
    bool reject = false;
    double theta_used = 0.0;
    int resample_rounds = 0;
    int split_size = 0;
    std::vector<SplitRecord> records;
};

// The whole test procedure: K splits, classification, per-split statistics
// and votes, decision ratio, threshold comparison.
inline DecisionSummary run_test(const DataMatrix& X, const DataMatrix& Y,
                                const TestConfig& config) {
    validate_config(config);
    const SplitBattery battery = build_battery(X, Y, config);

    const double theta =
        config.theta.automatic
            ? select_theta_on_battery(battery, default_theta_grid(), config.alpha)
            : config.theta.value;

    double delta = 0.0;
    switch (config.delta.mode) {
        case DeltaSetting::Mode::value:
            delta = config.delta.value;
            break;
        case DeltaSetting::Mode::binomial:
            delta = dr_threshold(config.k_splits, config.alpha, DrThresholdMode::binomial);
            break;
        case DeltaSetting::Mode::gaussian:
            delta = dr_threshold(config.k_splits, config.alpha, DrThresholdMode::gaussian);
            break;
        case DeltaSetting::Mode::calibrated: {
            CalibrationResult cal = calibrate_delta(
                X.n(), Y.n(), battery.n, X.p(), config.k_splits, config.alpha,
                config.calib_b, theta, rng::derive_seed(config.seed, rng::kStreamCalibData),
                config.threads, config.eps, config.eps1);
            delta = cal.delta;
            break;
        }
    }

    BatteryOutcome outcome = evaluate_battery(battery, theta, config.alpha);
    DecisionSummary summary;
    summary.dr = outcome.dr;
    summary.n_auto_reject = outcome.n_auto_reject;
    summary.n_efficient = outcome.n_efficient;
    summary.n_discarded = outcome.n_discarded;
    summary.delta_used = delta;
    summary.reject = outcome.dr > delta;
    summary.theta_used = theta;
    summary.resample_rounds = battery.resample_rounds;
    summary.split_size = battery.n;
    summary.records = std::move(outcome.records);
    return summary;
}

}  // namespace uhdtest
