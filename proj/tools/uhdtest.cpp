// Command-line surface for the two-sample covariance test: test, calibrate,
// tune, simulate, spectra. Exit codes: 0 accept/success, 1 usage error,
// 2 data error, 3 statistical rejection.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uhdtest/uhdtest.hpp"

namespace {

using namespace uhdtest;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitReject = 3;

struct CommonFlags {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "random seed (all outputs are deterministic in it)");
    cmd->add_option("--threads", flags.threads,
                    "worker threads (0 = UHDTEST_THREADS or hardware)");
    cmd->add_option("--out", flags.out, "write the report here instead of stdout");
}

void emit(const CommonFlags& flags, const std::string& text) {
    if (flags.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(flags.out, std::ios::binary);
    if (!f) throw IoError("cannot write '" + flags.out + "'");
    f << text;
}

ThetaSetting parse_theta(const std::string& s) {
    if (s == "auto") return ThetaSetting::auto_select();
    double v = parse_double(s);
    if (!(v > 0.0)) throw CLI::ValidationError("--theta", "theta must be > 0 or 'auto'");
    return ThetaSetting::fixed(v);
}

DeltaSetting parse_delta(const std::string& s, double alpha) {
    if (s == "auto") return DeltaSetting::calibrated();
    if (s == "binomial") return DeltaSetting::binomial();
    if (s == "gaussian") return DeltaSetting::gaussian();
    double v = parse_double(s);
    if (!(v > alpha && v < 1.0))
        throw CLI::ValidationError("--delta", "explicit delta must lie in (alpha, 1)");
    return DeltaSetting::fixed(v);
}

std::string join_doubles(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += format_double(xs[i]);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        if (comma > pos) out.push_back(parse_double(s.substr(pos, comma - pos)));
        pos = comma + 1;
        if (comma == s.size()) break;
    }
    return out;
}

struct TestCli {
    std::string x_path, y_path;
    CommonFlags common;
    int n = 0;
    int k_splits = 1000;
    double alpha = 0.05;
    double eps = 0.05, eps1 = 0.05;
    std::string theta = "auto";
    std::string delta = "binomial";
    std::string delta_file;
    int calib_b = 1000;
    int max_resample_rounds = 10;
};

// Loads a calibration file and checks it matches this invocation.
double delta_from_file(const std::string& path, int n1, int n2, int p, int k_splits,
                       double alpha) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open calibration file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    Report r = Report::parse(ss.str());
    auto expect_int = [&](const char* key, long long want) {
        if (r.get_int(key) != want)
            throw CLI::ValidationError(
                "--delta-file", std::string(key) + " mismatch: file has " + r.get(key) +
                                    ", run needs " + std::to_string(want));
    };
    expect_int("n1", n1);
    expect_int("n2", n2);
    expect_int("p", p);
    expect_int("k_splits", k_splits);
    if (r.get_double("alpha") != alpha)
        throw CLI::ValidationError("--delta-file", "alpha mismatch");
    return r.get_double("delta");
}

int run_cmd_test(const TestCli& a) {
    const DataMatrix X = io::load_matrix(a.x_path);
    const DataMatrix Y = io::load_matrix(a.y_path);
    if (X.p() != Y.p())
        throw DimensionError("column counts differ: " + std::to_string(X.p()) + " vs " +
                             std::to_string(Y.p()));

    TestConfig cfg;
    cfg.n = a.n;
    cfg.k_splits = a.k_splits;
    cfg.alpha = a.alpha;
    cfg.eps = a.eps;
    cfg.eps1 = a.eps1;
    cfg.seed = a.common.seed;
    cfg.threads = a.common.threads;
    cfg.calib_b = a.calib_b;
    cfg.max_resample_rounds = a.max_resample_rounds;
    cfg.theta = parse_theta(a.theta);
    if (!a.delta_file.empty())
        cfg.delta = DeltaSetting::fixed(
            delta_from_file(a.delta_file, X.n(), Y.n(), X.p(), a.k_splits, a.alpha));
    else
        cfg.delta = parse_delta(a.delta, a.alpha);

    const DecisionSummary s = run_test(X, Y, cfg);

    Report r = report_preamble("test");
    r.set("x_path", a.x_path);
    r.set("y_path", a.y_path);
    r.set_uint64("seed", cfg.seed);
    r.set_int("n1", X.n());
    r.set_int("n2", Y.n());
    r.set_int("p", X.p());
    r.set_int("n_split", s.split_size);
    r.set_int("k_splits", cfg.k_splits);
    r.set_double("alpha", cfg.alpha);
    r.set_double("eps", cfg.eps);
    r.set_double("eps1", cfg.eps1);
    r.set("theta_mode", cfg.theta.automatic ? "auto" : "fixed");
    r.set_double("theta", s.theta_used);
    r.set("delta_mode", !a.delta_file.empty() ? "file" : a.delta);
    r.set_double("delta", s.delta_used);
    r.set_int("k_auto_reject", s.n_auto_reject);
    r.set_int("k_efficient", s.n_efficient);
    r.set_int("k_discarded", s.n_discarded);
    r.set_int("resample_rounds", s.resample_rounds);
    r.set_double("dr", s.dr);
    r.set_bool("reject", s.reject);
    r.set("verdict", s.reject ? "reject" : "accept");
    emit(a.common, r.serialize());
    return s.reject ? kExitReject : kExitOk;
}

struct CalibrateCli {
    CommonFlags common;
    int n1 = 0, n2 = 0, n = 0, p = 0;
    int k_splits = 1000;
    double alpha = 0.05;
    int b = 1000;
    double theta = 1.2;
    double eps = 0.05, eps1 = 0.05;
};

int run_cmd_calibrate(const CalibrateCli& a) {
    CalibrationResult cal =
        calibrate_delta(a.n1, a.n2, a.n, a.p, a.k_splits, a.alpha, a.b, a.theta,
                        a.common.seed, a.common.threads, a.eps, a.eps1);
    Report r = report_preamble("calibrate");
    r.set_int("n1", a.n1);
    r.set_int("n2", a.n2);
    r.set_int("n_split", a.n);
    r.set_int("p", a.p);
    r.set_int("k_splits", a.k_splits);
    r.set_double("alpha", a.alpha);
    r.set_int("b", a.b);
    r.set_double("theta", a.theta);
    r.set_uint64("seed", a.common.seed);
    r.set_double("delta", cal.delta);
    r.set("dr_samples", join_doubles(cal.dr_samples));
    emit(a.common, r.serialize());
    return kExitOk;
}

struct TuneCli {
    std::string x_path, y_path;
    CommonFlags common;
    int n = 0;
    int k_splits = 1000;
    double alpha = 0.05;
    double eps = 0.05, eps1 = 0.05;
    std::string grid;
    std::string series = "smoothed";
};

int run_cmd_tune(const TuneCli& a) {
    const DataMatrix X = io::load_matrix(a.x_path);
    const DataMatrix Y = io::load_matrix(a.y_path);
    TestConfig cfg;
    cfg.n = a.n;
    cfg.k_splits = a.k_splits;
    cfg.alpha = a.alpha;
    cfg.eps = a.eps;
    cfg.eps1 = a.eps1;
    cfg.seed = a.common.seed;
    cfg.threads = a.common.threads;
    ThetaGrid grid = default_theta_grid();
    if (!a.grid.empty()) grid.values = split_doubles(a.grid);
    validate_grid(grid);
    const SelectionSeries series =
        a.series == "raw" ? SelectionSeries::raw : SelectionSeries::smoothed;

    const SplitBattery battery = build_battery(X, Y, cfg);
    const std::vector<double> curve = dr_curve(battery, grid, cfg.alpha);
    const int index = theta_selection_index(curve, series);

    Report r = report_preamble("tune");
    r.set("x_path", a.x_path);
    r.set("y_path", a.y_path);
    r.set_uint64("seed", cfg.seed);
    r.set_int("n_split", battery.n);
    r.set_int("k_splits", cfg.k_splits);
    r.set_double("alpha", cfg.alpha);
    r.set("selection_series", a.series);
    r.set("grid", join_doubles(grid.values));
    r.set("dr_curve", join_doubles(curve));
    r.set_int("selected_index", index);
    r.set_double("theta", grid.values[index - 1]);
    emit(a.common, r.serialize());
    return kExitOk;
}

struct SimulateCli {
    std::string scenario_path;
    CommonFlags common;
    int reps = 200;
    int n = 0;
    int k_splits = 100;
    double alpha = 0.05;
    std::string theta = "auto";
    std::string delta = "auto";
    int calib_b = 200;
    std::string power_curve;  // comma list of epsilons
    bool no_header = false;
};

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scenario '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    Report r = Report::parse(ss.str());
    Scenario s;
    const std::string& c = r.get("case");
    if (c == "I") s.case_id = CaseId::I;
    else if (c == "II") s.case_id = CaseId::II;
    else if (c == "III") s.case_id = CaseId::III;
    else throw ParseError("unknown case '" + c + "' (want I, II or III)");
    s.p = static_cast<int>(r.get_int("p"));
    s.n1 = static_cast<int>(r.get_int("n1"));
    s.n2 = static_cast<int>(r.get_int("n2"));
    const std::string& d = r.get("dist");
    if (d == "gaussian") s.dist = Innovation::gaussian;
    else if (d == "two_point") s.dist = Innovation::two_point;
    else throw ParseError("unknown dist '" + d + "'");
    const std::string& h = r.get("hypothesis");
    if (h == "null") s.hypothesis = Hypothesis::null_h;
    else if (h == "alternative") s.hypothesis = Hypothesis::alternative;
    else throw ParseError("unknown hypothesis '" + h + "'");
    if (r.find("ma_theta")) s.ma_theta = r.get_double("ma_theta");
    if (r.find("epsilon")) s.epsilon = r.get_double("epsilon");
    if (r.find("seed")) s.scenario_seed = r.get_uint64("seed");
    validate_scenario(s);
    return s;
}

int run_cmd_simulate(const SimulateCli& a) {
    Scenario scenario = load_scenario(a.scenario_path);
    TestConfig cfg;
    cfg.n = a.n;
    cfg.k_splits = a.k_splits;
    cfg.alpha = a.alpha;
    cfg.seed = a.common.seed;
    cfg.threads = a.common.threads;
    cfg.calib_b = a.calib_b;
    cfg.theta = parse_theta(a.theta);
    cfg.delta = parse_delta(a.delta, a.alpha);

    std::vector<SweepResult> results;
    if (!a.power_curve.empty()) {
        std::vector<double> eps = split_doubles(a.power_curve);
        results = power_curve(scenario, eps, a.reps, cfg);
    } else {
        results.push_back(empirical_size_power(scenario, a.reps, cfg));
    }

    std::ostringstream os;
    if (!a.no_header) os << sweep_csv_header() << '\n';
    for (const SweepResult& r : results) os << sweep_csv_row(r) << '\n';
    if (a.common.out.empty()) {
        std::cout << os.str();
    } else {
        std::ofstream f(a.common.out, std::ios::app);
        if (!f) throw IoError("cannot write '" + a.common.out + "'");
        f << os.str();
    }
    return kExitOk;
}

struct SpectraCli {
    std::string x_path;
    CommonFlags common;
    std::string population_path;
    int density_points = 201;
};

int run_cmd_spectra(const SpectraCli& a) {
    const DataMatrix X = io::load_matrix(a.x_path);
    const Spectrum spec = sample_covariance_spectrum(X);
    const SpectrumSummary summary = spectrum_summary(spec);

    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "spectra";
    j["x_path"] = a.x_path;
    j["n"] = spec.n;
    j["p"] = spec.p;
    j["eigenvalues"] = spec.eigenvalues;
    j["summary"] = {{"median", summary.median}, {"std", summary.std},
                    {"range", summary.range},   {"max", summary.max},
                    {"min", summary.min}};
    if (!a.population_path.empty()) {
        PopulationSpectrum pop;
        pop.sigma = io::load_value_list(a.population_path);
        const double phi = static_cast<double>(X.p()) / X.n();
        const SpectralModel model = semicircle_model(pop, phi);
        nlohmann::json overlay;
        overlay["phi"] = model.phi;
        overlay["m1"] = model.m1;
        overlay["m2"] = model.m2;
        overlay["support"] = {model.support_lo, model.support_hi};
        std::vector<std::array<double, 2>> grid;
        const double span = model.support_hi - model.support_lo;
        for (int i = 0; i < a.density_points; ++i) {
            const double x = model.support_lo - 0.05 * span +
                             (1.1 * span) * i / (a.density_points - 1);
            grid.push_back({x, model.density(x)});
        }
        overlay["density"] = grid;
        j["overlay"] = overlay;
    }
    emit(a.common, j.dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uhdtest: eigenvalue-based two-sample covariance test for p >> n"};
    app.require_subcommand(1);
    auto positive = CLI::PositiveNumber;
    auto prob = CLI::Range(1e-12, 1.0 - 1e-12);

    TestCli t;
    CLI::App* cmd_test = app.add_subcommand("test", "run the two-sample covariance test");
    cmd_test->add_option("x", t.x_path, "first sample (CSV or UHDM)")->required();
    cmd_test->add_option("y", t.y_path, "second sample (CSV or UHDM)")->required();
    cmd_test->add_option("--n", t.n, "split size (default N-5)");
    cmd_test->add_option("--k-splits", t.k_splits, "number of splits")->check(positive);
    cmd_test->add_option("--alpha", t.alpha, "type I error")->check(prob);
    cmd_test->add_option("--eps", t.eps, "efficiency margin")->check(positive);
    cmd_test->add_option("--eps1", t.eps1, "separation margin")->check(positive);
    cmd_test->add_option("--theta", t.theta, "bandwidth multiplier or 'auto'");
    cmd_test->add_option("--delta", t.delta, "DR threshold: value|auto|binomial|gaussian");
    cmd_test->add_option("--delta-file", t.delta_file, "calibration file from 'calibrate'");
    cmd_test->add_option("--calib-b", t.calib_b, "replicates for --delta auto")->check(positive);
    cmd_test->add_option("--max-resample-rounds", t.max_resample_rounds)->check(positive);
    add_common(cmd_test, t.common);

    CalibrateCli c;
    CLI::App* cmd_cal = app.add_subcommand("calibrate", "calibrate the DR threshold on Gaussian nulls");
    cmd_cal->add_option("--n1", c.n1)->required()->check(positive);
    cmd_cal->add_option("--n2", c.n2)->required()->check(positive);
    cmd_cal->add_option("--n", c.n, "split size")->required()->check(positive);
    cmd_cal->add_option("--p", c.p)->required()->check(positive);
    cmd_cal->add_option("--k-splits", c.k_splits)->check(positive);
    cmd_cal->add_option("--alpha", c.alpha)->check(prob);
    cmd_cal->add_option("--b", c.b, "calibration replicates")->check(positive);
    cmd_cal->add_option("--theta", c.theta, "bandwidth multiplier")->check(positive);
    cmd_cal->add_option("--eps", c.eps)->check(positive);
    cmd_cal->add_option("--eps1", c.eps1)->check(positive);
    add_common(cmd_cal, c.common);

    TuneCli u;
    CLI::App* cmd_tune = app.add_subcommand("tune", "select the bandwidth multiplier");
    cmd_tune->add_option("x", u.x_path)->required();
    cmd_tune->add_option("y", u.y_path)->required();
    cmd_tune->add_option("--n", u.n, "split size (default N-5)");
    cmd_tune->add_option("--k-splits", u.k_splits)->check(positive);
    cmd_tune->add_option("--alpha", u.alpha)->check(prob);
    cmd_tune->add_option("--eps", u.eps)->check(positive);
    cmd_tune->add_option("--eps1", u.eps1)->check(positive);
    cmd_tune->add_option("--grid", u.grid, "comma-separated theta grid");
    cmd_tune->add_option("--series", u.series, "selection series: smoothed|raw")
        ->check(CLI::IsMember({"smoothed", "raw"}));
    add_common(cmd_tune, u.common);

    SimulateCli m;
    CLI::App* cmd_sim = app.add_subcommand("simulate", "size/power sweep from a scenario file");
    cmd_sim->add_option("scenario", m.scenario_path)->required();
    cmd_sim->add_option("--reps", m.reps)->check(positive);
    cmd_sim->add_option("--n", m.n, "split size (default N-5)");
    cmd_sim->add_option("--k-splits", m.k_splits)->check(positive);
    cmd_sim->add_option("--alpha", m.alpha)->check(prob);
    cmd_sim->add_option("--theta", m.theta, "bandwidth multiplier or 'auto'");
    cmd_sim->add_option("--delta", m.delta, "value|auto|binomial|gaussian");
    cmd_sim->add_option("--calib-b", m.calib_b)->check(positive);
    cmd_sim->add_option("--power-curve", m.power_curve,
                        "comma-separated epsilons (Case III)");
    cmd_sim->add_flag("--no-header", m.no_header, "omit the CSV header");
    add_common(cmd_sim, m.common);

    SpectraCli s;
    CLI::App* cmd_spec = app.add_subcommand("spectra", "sample spectrum as JSON");
    cmd_spec->add_option("x", s.x_path)->required();
    cmd_spec->add_option("--population", s.population_path,
                         "population eigenvalues for a model overlay");
    cmd_spec->add_option("--density-points", s.density_points)->check(positive);
    add_common(cmd_spec, s.common);

    try {
        app.parse(argc, argv);
        if (*cmd_test) return run_cmd_test(t);
        if (*cmd_cal) return run_cmd_calibrate(c);
        if (*cmd_tune) return run_cmd_tune(u);
        if (*cmd_sim) return run_cmd_simulate(m);
        if (*cmd_spec) return run_cmd_spectra(s);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
