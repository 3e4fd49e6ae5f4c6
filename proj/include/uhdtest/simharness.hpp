#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/parallel.hpp"
#include "uhdtest/procedure.hpp"
#include "uhdtest/report.hpp"
#include "uhdtest/rmtlab.hpp"
#include "uhdtest/rng.hpp"

namespace uhdtest {

enum class CaseId { I, II, III };
enum class Innovation { gaussian, two_point };
enum class Hypothesis { null_h, alternative };

inline const char* to_string(CaseId c) {
    switch (c) {
        case CaseId::I: return "I";
        case CaseId::II: return "II";
        case CaseId::III: return "III";
    }
    return "?";
}
inline const char* to_string(Innovation d) {
    return d == Innovation::gaussian ? "gaussian" : "two_point";
}
inline const char* to_string(Hypothesis h) {
    return h == Hypothesis::null_h ? "null" : "alternative";
}

struct Scenario {
    CaseId case_id = CaseId::I;
    int p = 0;
    int n1 = 0, n2 = 0;
    Innovation dist = Innovation::gaussian;
    Hypothesis hypothesis = Hypothesis::null_h;
    std::optional<double> ma_theta;  // Case II alternative: MA(1) parameter
    std::optional<double> epsilon;   // Case III alternative: identity shift
    std::uint64_t scenario_seed = 1;
};

inline void validate_scenario(const Scenario& s) {
    if (s.p < 1 || s.n1 < 3 || s.n2 < 3)
        throw DimensionError("scenario needs p >= 1 and n1, n2 >= 3");
    const bool alt = s.hypothesis == Hypothesis::alternative;
    if (s.case_id == CaseId::II) {
        if (alt != s.ma_theta.has_value())
            throw ParseError("Case II: ma_theta must be present iff alternative");
        if (alt && !(*s.ma_theta > 0.0)) throw ParseError("Case II: ma_theta must be > 0");
    } else if (s.ma_theta)
        throw ParseError("ma_theta only applies to Case II");
    if (s.case_id == CaseId::III) {
        if (alt != s.epsilon.has_value())
            throw ParseError("Case III: epsilon must be present iff alternative");
        if (alt && !(*s.epsilon > 0.0)) throw ParseError("Case III: epsilon must be > 0");
    } else if (s.epsilon)
        throw ParseError("epsilon only applies to Case III");
}

// Factors A with A A^T = Sigma, plus the population eigenvalues. The factor
// is built once per scenario; samples reuse it.
struct PopulationPair {
    Eigen::MatrixXd sigma1_factor, sigma2_factor;
    PopulationSpectrum sigma1_eigs, sigma2_eigs;
};

namespace sim_detail {

inline void require_positive(const Eigen::VectorXd& eigs, const char* what) {
    const double lo = eigs.minCoeff();
    if (!(lo > 0.0))
        throw PSDError(std::string(what) + " has eigenvalue " + std::to_string(lo) +
                       " <= 0");
}

// Symmetric square root via eigendecomposition; also returns the eigenvalues.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> symmetric_sqrt(
    const Eigen::MatrixXd& sigma, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success)
        throw NumericalError(std::string("eigendecomposition failed for ") + what);
    require_positive(es.eigenvalues(), what);
    Eigen::MatrixXd root = es.eigenvectors() *
                           es.eigenvalues().cwiseSqrt().asDiagonal() *
                           es.eigenvectors().transpose();
    return {std::move(root), es.eigenvalues()};
}

// Haar orthogonal matrix: QR of a Gaussian matrix with the R diagonal signs
// folded into Q.
inline Eigen::MatrixXd haar_orthogonal(int p, rng::Engine& eng) {
    Eigen::MatrixXd g(p, p);
    rng::fill_gaussian(eng, g.data(), g.data() + g.size());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd diag = qr.matrixQR().diagonal();
    for (int i = 0; i < p; ++i)
        if (diag(i) < 0.0) q.col(i) = -q.col(i);
    return q;
}

inline Eigen::MatrixXd toeplitz_half(int p) {
    Eigen::MatrixXd s(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) s(i, j) = std::pow(0.5, std::abs(i - j));
    return s;
}

inline PopulationSpectrum to_population(const Eigen::VectorXd& eigs) {
    PopulationSpectrum pop;
    pop.sigma.assign(eigs.data(), eigs.data() + eigs.size());
    return pop;
}

}  // namespace sim_detail

// Case I: Toeplitz 0.5^|i-j|, alternative D^{1/2} Sigma* D^{1/2} with
// d_ii ~ Unif(0.5, 2.5). Case II: identity, alternative I + banded MA(1)
// perturbation. Case III: Q diag(Unif(3,6)) Q^T with Haar Q, alternative
// Sigma* + eps I. D and Q are drawn once per scenario.
inline PopulationPair gen_population(const Scenario& scenario, rng::Engine& eng) {
    validate_scenario(scenario);
    const int p = scenario.p;
    const bool alt = scenario.hypothesis == Hypothesis::alternative;
    PopulationPair pair;

    switch (scenario.case_id) {
        case CaseId::I: {
            const Eigen::MatrixXd star = sim_detail::toeplitz_half(p);
            auto [root1, eigs1] = sim_detail::symmetric_sqrt(star, "Case I Sigma*");
            pair.sigma1_factor = root1;
            pair.sigma1_eigs = sim_detail::to_population(eigs1);
            if (!alt) {
                pair.sigma2_factor = pair.sigma1_factor;
                pair.sigma2_eigs = pair.sigma1_eigs;
                break;
            }
            Eigen::VectorXd d(p);
            for (int i = 0; i < p; ++i)
                d(i) = 0.5 + 2.0 * rng::uniform01(eng);
            const Eigen::VectorXd dh = d.cwiseSqrt();
            const Eigen::MatrixXd sigma2 =
                dh.asDiagonal() * star * dh.asDiagonal();
            auto [root2, eigs2] = sim_detail::symmetric_sqrt(sigma2, "Case I Sigma2");
            pair.sigma2_factor = root2;
            pair.sigma2_eigs = sim_detail::to_population(eigs2);
            break;
        }
        case CaseId::II: {
            pair.sigma1_factor = Eigen::MatrixXd::Identity(p, p);
            pair.sigma1_eigs.sigma.assign(p, 1.0);
            if (!alt) {
                pair.sigma2_factor = pair.sigma1_factor;
                pair.sigma2_eigs = pair.sigma1_eigs;
                break;
            }
            const double th = *scenario.ma_theta;
            Eigen::MatrixXd sigma2 = Eigen::MatrixXd::Identity(p, p);
            sigma2.diagonal().array() += th * th;
            for (int i = 0; i + 1 < p; ++i) {
                sigma2(i, i + 1) = th;
                sigma2(i + 1, i) = th;
            }
            auto [root2, eigs2] = sim_detail::symmetric_sqrt(sigma2, "Case II Sigma2");
            pair.sigma2_factor = root2;
            pair.sigma2_eigs = sim_detail::to_population(eigs2);
            break;
        }
        case CaseId::III: {
            const Eigen::MatrixXd q = sim_detail::haar_orthogonal(p, eng);
            Eigen::VectorXd d(p);
            for (int i = 0; i < p; ++i)
                d(i) = 3.0 + 3.0 * rng::uniform01(eng);
            pair.sigma1_factor = q * d.cwiseSqrt().asDiagonal() * q.transpose();
            pair.sigma1_eigs = sim_detail::to_population(d);
            if (!alt) {
                pair.sigma2_factor = pair.sigma1_factor;
                pair.sigma2_eigs = pair.sigma1_eigs;
                break;
            }
            const Eigen::VectorXd shifted = d.array() + *scenario.epsilon;
            sim_detail::require_positive(shifted, "Case III Sigma2");
            pair.sigma2_factor = q * shifted.cwiseSqrt().asDiagonal() * q.transpose();
            pair.sigma2_eigs = sim_detail::to_population(shifted);
            break;
        }
    }
    return pair;
}

// Rows are factor * xi with xi i.i.d. standardized innovations.
inline DataMatrix gen_sample(const Eigen::MatrixXd& factor, int n, Innovation dist,
                             rng::Engine& eng) {
    if (n < 3) throw DimensionError("gen_sample: n >= 3");
    const int p = static_cast<int>(factor.rows());
    Eigen::MatrixXd xi(n, p);
    if (dist == Innovation::gaussian)
        rng::fill_gaussian(eng, xi.data(), xi.data() + xi.size());
    else
        rng::fill_two_point(eng, xi.data(), xi.data() + xi.size());
    Eigen::MatrixXd values(n, p);
    values.noalias() = xi * factor.transpose();
    return make_data_matrix(std::move(values));
}

struct SweepResult {
    Scenario scenario;
    int reps = 0;
    double rejection_rate = 0.0;
    double mean_dr = 0.0;
    double wall_time_s = 0.0;  // measurement only, outside the determinism contract
    double theta_used = 0.0;
    double delta_used = 0.0;
    int k_splits = 0;
    int split_size = 0;
    double alpha = 0.0;
};

namespace sim_detail {

// A pilot DR curve whose smoothed maximum is below this carries no signal;
// bandwidth selection on it would degenerate to the first grid point.
inline constexpr double kPilotSignalFloor = 0.1;
inline constexpr double kThetaFallback = 1.2;

struct ResolvedSweep {
    double theta = 0.0;
    double delta = 0.0;
    int split_size = 0;
};

inline constexpr std::uint64_t kStreamPilot = 0x50494C4FULL;

// Per-scenario resolution: bandwidth multiplier from a pilot replicate (or
// the fallback when the pilot carries no signal), threshold by one
// calibration at that multiplier.
inline ResolvedSweep resolve_sweep(const Scenario& scenario, const PopulationPair& pair,
                                   const TestConfig& config) {
    ResolvedSweep r;
    if (config.theta.automatic) {
        rng::Engine ex = rng::make_engine(scenario.scenario_seed, kStreamPilot, 0);
        rng::Engine ey = rng::make_engine(scenario.scenario_seed, kStreamPilot, 1);
        const DataMatrix X = gen_sample(pair.sigma1_factor, scenario.n1, scenario.dist, ex);
        const DataMatrix Y = gen_sample(pair.sigma2_factor, scenario.n2, scenario.dist, ey);
        TestConfig pilot = config;
        pilot.seed = rng::derive_seed(config.seed, kStreamPilot);
        const SplitBattery battery = build_battery(X, Y, pilot);
        r.split_size = battery.n;
        const ThetaGrid grid = default_theta_grid();
        const std::vector<double> curve = dr_curve(battery, grid, config.alpha);
        const std::vector<double> smoothed = smooth_window3(curve);
        const double peak = *std::max_element(smoothed.begin(), smoothed.end());
        r.theta = peak >= kPilotSignalFloor
                      ? grid.values[theta_selection_index(curve) - 1]
                      : kThetaFallback;
    } else {
        r.theta = config.theta.value;
        r.split_size = resolve_split_size(config, scenario.n1, scenario.n2);
    }

    switch (config.delta.mode) {
        case DeltaSetting::Mode::value:
            r.delta = config.delta.value;
            break;
        case DeltaSetting::Mode::binomial:
            r.delta = dr_threshold(config.k_splits, config.alpha, DrThresholdMode::binomial);
            break;
        case DeltaSetting::Mode::gaussian:
            r.delta = dr_threshold(config.k_splits, config.alpha, DrThresholdMode::gaussian);
            break;
        case DeltaSetting::Mode::calibrated:
            r.delta = calibrate_delta(scenario.n1, scenario.n2, r.split_size, scenario.p,
                                      config.k_splits, config.alpha, config.calib_b,
                                      r.theta,
                                      rng::derive_seed(config.seed, rng::kStreamCalibData),
                                      config.threads, config.eps, config.eps1)
                          .delta;
            break;
    }
    return r;
}

}  // namespace sim_detail

// Size/power sweep: reps independent dataset draws through the full test at
// per-scenario resolved (theta, delta). Per-rep seeds derive from the
// scenario seed; replicates run in parallel with per-index streams.
inline SweepResult empirical_size_power(const Scenario& scenario, int reps,
                                        const TestConfig& config) {
    validate_scenario(scenario);
    validate_config(config);
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    rng::Engine pop_eng = rng::make_engine(scenario.scenario_seed, rng::kStreamScenario);
    const PopulationPair pair = gen_population(scenario, pop_eng);
    const sim_detail::ResolvedSweep rs = sim_detail::resolve_sweep(scenario, pair, config);

    std::vector<double> drs(static_cast<std::size_t>(reps), 0.0);
    std::vector<char> rejects(static_cast<std::size_t>(reps), 0);
    parallel_for(static_cast<std::size_t>(reps), config.threads, [&](std::size_t r) {
        rng::Engine ex = rng::make_engine(scenario.scenario_seed, rng::kStreamRepData, 2 * r);
        rng::Engine ey = rng::make_engine(scenario.scenario_seed, rng::kStreamRepData, 2 * r + 1);
        const DataMatrix X = gen_sample(pair.sigma1_factor, scenario.n1, scenario.dist, ex);
        const DataMatrix Y = gen_sample(pair.sigma2_factor, scenario.n2, scenario.dist, ey);
        TestConfig cfg = config;
        cfg.theta = ThetaSetting::fixed(rs.theta);
        cfg.seed = rng::derive_seed(config.seed, rng::kStreamRepSplit, r);
        cfg.threads = 1;
        const SplitBattery battery = build_battery(X, Y, cfg);
        const BatteryOutcome outcome = evaluate_battery(battery, rs.theta, cfg.alpha);
        drs[r] = outcome.dr;
        rejects[r] = outcome.dr > rs.delta ? 1 : 0;
    });

    SweepResult out;
    out.scenario = scenario;
    out.reps = reps;
    int nrej = 0;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
        nrej += rejects[static_cast<std::size_t>(r)];
        sum += drs[static_cast<std::size_t>(r)];
    }
    out.rejection_rate = static_cast<double>(nrej) / reps;
    out.mean_dr = sum / reps;
    out.theta_used = rs.theta;
    out.delta_used = rs.delta;
    out.k_splits = config.k_splits;
    out.split_size = rs.split_size;
    out.alpha = config.alpha;
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Power curve over an epsilon grid for the Case III alternative. The base
// population (Q and D draws) is shared across grid points; eps = 0 runs the
// null scenario.
inline std::vector<SweepResult> power_curve(const Scenario& base,
                                            const std::vector<double>& eps_grid,
                                            int reps, const TestConfig& config) {
    if (base.case_id != CaseId::III)
        throw ParseError("power_curve: base scenario must be Case III");
    if (eps_grid.empty()) throw std::invalid_argument("power_curve: empty grid");
    std::vector<SweepResult> out;
    out.reserve(eps_grid.size());
    for (double eps : eps_grid) {
        Scenario s = base;
        if (eps > 0.0) {
            s.hypothesis = Hypothesis::alternative;
            s.epsilon = eps;
        } else {
            s.hypothesis = Hypothesis::null_h;
            s.epsilon.reset();
        }
        out.push_back(empirical_size_power(s, reps, config));
    }
    return out;
}

inline std::string sweep_csv_header() {
    return "case,p,n1,n2,dist,hypothesis,param,reps,k_splits,n_split,alpha,theta,delta,"
           "rejection_rate,mean_dr,wall_time_s";
}

inline std::string sweep_csv_row(const SweepResult& r) {
    std::ostringstream os;
    double param = 0.0;
    if (r.scenario.ma_theta) param = *r.scenario.ma_theta;
    if (r.scenario.epsilon) param = *r.scenario.epsilon;
    os << to_string(r.scenario.case_id) << ',' << r.scenario.p << ',' << r.scenario.n1
       << ',' << r.scenario.n2 << ',' << to_string(r.scenario.dist) << ','
       << to_string(r.scenario.hypothesis) << ',' << format_double(param) << ','
       << r.reps << ',' << r.k_splits << ',' << r.split_size << ','
       << format_double(r.alpha) << ',' << format_double(r.theta_used) << ','
       << format_double(r.delta_used) << ',' << format_double(r.rejection_rate) << ','
       << format_double(r.mean_dr) << ',' << format_double(r.wall_time_s);
    return os.str();
}

}  // namespace uhdtest
