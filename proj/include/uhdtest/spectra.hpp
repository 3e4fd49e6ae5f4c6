#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/stats.hpp"

namespace uhdtest {

// An n x p block of observations, rows are samples.
struct DataMatrix {
    Eigen::MatrixXd values;

    int n() const { return static_cast<int>(values.rows()); }
    int p() const { return static_cast<int>(values.cols()); }
};

inline DataMatrix make_data_matrix(Eigen::MatrixXd m) {
    if (m.rows() < 2 || m.cols() < 1)
        throw DimensionError("DataMatrix needs n >= 2 rows and p >= 1 columns, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (!m.allFinite())
        throw NumericalError("DataMatrix contains non-finite entries");
    return DataMatrix{std::move(m)};
}

// Descending eigenvalues of the (pn)^(-1/2)-scaled centered sample covariance.
// Holds the top n-1 values: mean-centering pins one eigenvalue of the n x n
// Gram matrix at zero, and a retained zero would corrupt ranges and medians.
struct Spectrum {
    std::vector<double> eigenvalues;  // non-increasing
    int n = 0;
    int p = 0;

    bool empty() const { return eigenvalues.empty(); }
    std::size_t size() const { return eigenvalues.size(); }
    double max() const { return eigenvalues.front(); }
    double min() const { return eigenvalues.back(); }
    double range() const { return eigenvalues.front() - eigenvalues.back(); }
};

struct SpectrumSummary {
    double median = 0.0;
    double std = 0.0;
    double range = 0.0;
    double max = 0.0;
    double min = 0.0;
};

// Gram route: eigenvalues of (pn)^(-1/2) * Xc * Xc^T where Xc is the
// row-centered data. Identical nonzero spectrum to the p x p covariance,
// at O(n^2 p + n^3) instead of O(p^3).
inline Spectrum sample_covariance_spectrum(const Eigen::Ref<const Eigen::MatrixXd>& data) {
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    if (n < 3)
        throw DimensionError("sample_covariance_spectrum needs n >= 3, got n = " +
                             std::to_string(n));
    Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    Eigen::MatrixXd gram(n, n);
    gram.noalias() = centered * centered.transpose();
    gram *= 1.0 / std::sqrt(static_cast<double>(p) * static_cast<double>(n));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigensolver failed to converge");

    // Solver returns ascending; keep the top n-1, descending.
    Spectrum s;
    s.n = n;
    s.p = p;
    s.eigenvalues.resize(n - 1);
    for (int i = 0; i < n - 1; ++i) s.eigenvalues[i] = solver.eigenvalues()(n - 1 - i);

    const double lead = s.eigenvalues.front();
    const double tol = 1e-10 * std::max(1.0, lead);
    for (double& v : s.eigenvalues) {
        if (v < -tol)
            throw NumericalError("eigenvalue " + std::to_string(v) +
                                 " below PSD slack -" + std::to_string(tol));
        if (v < tol) v = 0.0;
    }
    return s;
}

inline Spectrum sample_covariance_spectrum(const DataMatrix& data) {
    return sample_covariance_spectrum(data.values);
}

inline SpectrumSummary spectrum_summary(const Spectrum& s) {
    if (s.empty()) throw EmptySpectrumError("spectrum_summary: empty spectrum");
    SpectrumSummary out;
    out.max = s.max();
    out.min = s.min();
    out.range = out.max - out.min;
    out.median = stats::median_of_sorted(s.eigenvalues);
    out.std = stats::population_std(s.eigenvalues);
    return out;
}

}  // namespace uhdtest
