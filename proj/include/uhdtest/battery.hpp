#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/parallel.hpp"
#include "uhdtest/rng.hpp"
#include "uhdtest/spectra.hpp"
#include "uhdtest/splitkit.hpp"
#include "uhdtest/teststat.hpp"

namespace uhdtest {

struct ThetaSetting {
    bool automatic = true;
    double value = 0.0;

    static ThetaSetting auto_select() { return {true, 0.0}; }
    static ThetaSetting fixed(double v) { return {false, v}; }
};

struct DeltaSetting {
    enum class Mode { value, calibrated, binomial, gaussian };
    Mode mode = Mode::binomial;
    double value = 0.0;

    static DeltaSetting fixed(double v) { return {Mode::value, v}; }
    static DeltaSetting calibrated() { return {Mode::calibrated, 0.0}; }
    static DeltaSetting binomial() { return {Mode::binomial, 0.0}; }
    static DeltaSetting gaussian() { return {Mode::gaussian, 0.0}; }
};

struct TestConfig {
    int n = 0;  // split size; 0 resolves to the N-5 default
    int k_splits = 1000;
    double alpha = 0.05;
    double eps = 0.05;
    double eps1 = 0.05;
    ThetaSetting theta = ThetaSetting::auto_select();
    DeltaSetting delta = DeltaSetting::binomial();
    std::uint64_t seed = 1;
    int max_resample_rounds = 10;
    int calib_b = 1000;  // replicates when delta is calibrated
    int threads = 0;     // 0 = auto; never changes numeric output
};

// Default split size n = N - 5 (with N the split size cap).
inline int default_split_size(int n1, int n2) {
    const double cap = split_size_cap(n1, n2);
    const int n = static_cast<int>(std::ceil(cap)) - 5;
    if (n < 3)
        throw SizeError("default split size N-5 = " + std::to_string(n) +
                        " is below 3; samples too small (n1 = " + std::to_string(n1) +
                        ", n2 = " + std::to_string(n2) + ")");
    return n;
}

inline int resolve_split_size(const TestConfig& cfg, int n1, int n2) {
    const int n = cfg.n > 0 ? cfg.n : default_split_size(n1, n2);
    const double cap = split_size_cap(n1, n2);
    if (n < 3) throw SizeError("split size must be >= 3, got " + std::to_string(n));
    if (static_cast<double>(n) >= cap)
        throw SizeError("split size n = " + std::to_string(n) +
                        " must be < N = " + std::to_string(cap));
    return n;
}

inline void validate_config(const TestConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw std::invalid_argument("alpha must be in (0,1)");
    if (cfg.k_splits < 1) throw std::invalid_argument("k_splits must be >= 1");
    if (!(cfg.eps > 0.0) || !(cfg.eps1 > 0.0))
        throw std::invalid_argument("eps and eps1 must be > 0");
    if (cfg.max_resample_rounds < 1)
        throw std::invalid_argument("max_resample_rounds must be >= 1");
    if (!cfg.theta.automatic && !(cfg.theta.value > 0.0))
        throw std::invalid_argument("explicit theta must be > 0");
    if (cfg.delta.mode == DeltaSetting::Mode::value &&
        !(cfg.delta.value > cfg.alpha && cfg.delta.value < 1.0))
        throw std::invalid_argument("explicit delta must lie in (alpha, 1)");
    if (cfg.delta.mode == DeltaSetting::Mode::calibrated && cfg.calib_b < 1)
        throw std::invalid_argument("calib_b must be >= 1");
}

// One split with everything that does not depend on the bandwidth multiplier:
// the three spectra, the classification, and the reference dispersion.
struct SplitEval {
    SplitTriple triple;
    Spectrum spec_x, spec_y, spec_z;
    SplitClass cls;
    double z_std = 0.0;
};

struct SplitBattery {
    std::vector<SplitEval> evals;
    int n = 0;  // resolved split size
    int resample_rounds = 0;
};

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

}  // namespace detail

// Alg.-2 steps one and two: K classified splits. If every split is discarded,
// all K are redrawn, up to max_resample_rounds rounds.
inline SplitBattery build_battery(const DataMatrix& X, const DataMatrix& Y,
                                  const TestConfig& cfg) {
    validate_config(cfg);
    if (X.p() != Y.p())
        throw DimensionError("feature counts differ: " + std::to_string(X.p()) +
                             " vs " + std::to_string(Y.p()));
    const int n = resolve_split_size(cfg, X.n(), Y.n());
    const int k = cfg.k_splits;

    SplitBattery battery;
    battery.n = n;
    for (int round = 0; round < cfg.max_resample_rounds; ++round) {
        battery.evals.assign(k, SplitEval{});
        battery.resample_rounds = round;
        parallel_for(static_cast<std::size_t>(k), cfg.threads, [&](std::size_t i) {
            rng::Engine eng = rng::make_engine(cfg.seed, rng::kStreamSplit + round,
                                               static_cast<std::uint64_t>(i));
            SplitEval ev;
            ev.triple = split_once(X, Y, n, eng);
            const Eigen::MatrixXd& zparent = ev.triple.z_from_x ? X.values : Y.values;
            ev.spec_x = sample_covariance_spectrum(detail::take_rows(X.values, ev.triple.x_indices));
            ev.spec_y = sample_covariance_spectrum(detail::take_rows(Y.values, ev.triple.y_indices));
            ev.spec_z = sample_covariance_spectrum(detail::take_rows(zparent, ev.triple.z_indices));
            ev.cls = classify_split(ev.spec_x, ev.spec_y, ev.spec_z, cfg.eps, cfg.eps1);
            ev.z_std = stats::population_std(ev.spec_z.eigenvalues);
            battery.evals[i] = std::move(ev);
        });
        bool any_usable = false;
        for (const SplitEval& ev : battery.evals)
            if (ev.cls.tag != SplitTag::discarded) { any_usable = true; break; }
        if (any_usable) return battery;
    }
    throw NoUsableSplitsError(
        "every split was discarded in " + std::to_string(cfg.max_resample_rounds) +
        " resampling rounds: the test-bed spectra never separate enough to "
        "auto-reject, yet the reference median always falls outside their ranges");
}

struct BatteryOutcome {
    double dr = 0.0;
    int n_auto_reject = 0;
    int n_efficient = 0;
    int n_discarded = 0;
    int votes = 0;
    std::vector<SplitRecord> records;
};

// Alg.-2 steps three to five at a fixed bandwidth multiplier. Per-split
// eta0 = theta * std of that split's reference spectrum.
inline BatteryOutcome evaluate_battery(const SplitBattery& battery, double theta,
                                       double alpha) {
    if (!(theta > 0.0)) throw InvalidBandwidthError("theta must be > 0");
    const VarianceConstant& v = variance_constant();
    BatteryOutcome out;
    out.records.reserve(battery.evals.size());
    for (const SplitEval& ev : battery.evals) {
        if (!(ev.z_std > 0.0))
            throw DegenerateSpectrumError(
                "reference spectrum has zero dispersion; bandwidth undefined");
        SplitRecord rec;
        rec.cls = ev.cls;
        rec.gamma = ev.cls.gamma;
        rec.eta0 = theta * ev.z_std;
        rec.t_x = local_statistic(ev.spec_x, rec.gamma, rec.eta0);
        rec.t_y = local_statistic(ev.spec_y, rec.gamma, rec.eta0);
        rec.t = rec.t_x - rec.t_y;
        switch (ev.cls.tag) {
            case SplitTag::auto_reject:
                rec.vote = 1;
                ++out.n_auto_reject;
                break;
            case SplitTag::efficient:
                rec.vote = split_decision(rec.t, alpha, v);
                ++out.n_efficient;
                break;
            case SplitTag::discarded:
                rec.vote = 0;
                ++out.n_discarded;
                break;
        }
        if (ev.cls.tag != SplitTag::discarded) out.votes += rec.vote;
        out.records.push_back(rec);
    }
    const int usable = out.n_auto_reject + out.n_efficient;
    if (usable < 1) throw NoUsableSplitsError("battery has no usable splits");
    out.dr = static_cast<double>(out.votes) / static_cast<double>(usable);
    return out;
}

}  // namespace uhdtest
