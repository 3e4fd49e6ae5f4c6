#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/rng.hpp"
#include "uhdtest/spectra.hpp"
#include "uhdtest/stats.hpp"

namespace uhdtest {

// Split size cap N = min{max(n1,n2)/2, n1, n2}; the split size must satisfy n < N.
inline double split_size_cap(int n1, int n2) {
    return std::min({static_cast<double>(std::max(n1, n2)) / 2.0,
                     static_cast<double>(n1), static_cast<double>(n2)});
}

struct SplitTriple {
    std::vector<int> x_indices, y_indices, z_indices;
    int n = 0;
    bool z_from_x = true;  // which parent the reference block came from
};

enum class SplitTag { auto_reject, efficient, discarded };

struct SplitClass {
    SplitTag tag = SplitTag::discarded;
    double gamma = 0.0;  // median of the reference spectrum
};

inline const char* to_string(SplitTag t) {
    switch (t) {
        case SplitTag::auto_reject: return "auto_reject";
        case SplitTag::efficient: return "efficient";
        case SplitTag::discarded: return "discarded";
    }
    return "?";
}

namespace detail {

// Seeded Fisher-Yates partial shuffle: first k entries of a random
// permutation of `pool`.
inline std::vector<int> sample_without_replacement(std::vector<int> pool, int k,
                                                   rng::Engine& eng) {
    const int m = static_cast<int>(pool.size());
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, m - 1);
        std::swap(pool[i], pool[pick(eng)]);
    }
    pool.resize(k);
    return pool;
}

inline std::vector<int> iota_vector(int m) {
    std::vector<int> v(m);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace detail

// One random data splitting: n rows from each sample, plus n reference rows
// from the larger sample's remaining part (ties go to X).
inline SplitTriple split_once(const DataMatrix& X, const DataMatrix& Y, int n,
                              rng::Engine& eng) {
    if (X.p() != Y.p())
        throw DimensionError("split_once: feature counts differ (" +
                             std::to_string(X.p()) + " vs " + std::to_string(Y.p()) + ")");
    const double cap = split_size_cap(X.n(), Y.n());
    if (n < 3) throw SizeError("split_once: n must be >= 3, got " + std::to_string(n));
    if (static_cast<double>(n) >= cap)
        throw SizeError("split_once: n = " + std::to_string(n) +
                        " must be < N = " + std::to_string(cap));

    SplitTriple t;
    t.n = n;
    t.z_from_x = X.n() >= Y.n();
    t.x_indices = detail::sample_without_replacement(detail::iota_vector(X.n()), n, eng);
    t.y_indices = detail::sample_without_replacement(detail::iota_vector(Y.n()), n, eng);

    const std::vector<int>& taken = t.z_from_x ? t.x_indices : t.y_indices;
    const int parent_n = t.z_from_x ? X.n() : Y.n();
    std::vector<bool> used(parent_n, false);
    for (int i : taken) used[i] = true;
    std::vector<int> rest;
    rest.reserve(parent_n - n);
    for (int i = 0; i < parent_n; ++i)
        if (!used[i]) rest.push_back(i);
    t.z_indices = detail::sample_without_replacement(std::move(rest), n, eng);
    return t;
}

// Classify one split. Auto-reject when the spectra are separated beyond the
// combined ranges (the bulks cannot overlap); efficient when the reference
// median sits inside both ranges with margin eps; otherwise discarded.
inline SplitClass classify_split(const Spectrum& spec_x, const Spectrum& spec_y,
                                 const Spectrum& spec_z, double eps, double eps1) {
    if (spec_x.empty() || spec_y.empty() || spec_z.empty())
        throw EmptySpectrumError("classify_split: empty spectrum");
    if (!(eps > 0.0) || !(eps1 > 0.0))
        throw std::invalid_argument("classify_split: eps and eps1 must be > 0");

    SplitClass out;
    out.gamma = stats::median_of_sorted(spec_z.eigenvalues);

    const double separation = std::max(std::abs(spec_x.max() - spec_y.min()),
                                       std::abs(spec_y.max() - spec_x.min()));
    if (separation > spec_x.range() + spec_y.range() + eps1) {
        out.tag = SplitTag::auto_reject;
        return out;
    }
    const double off_y = std::max(std::abs(out.gamma - spec_y.max()),
                                  std::abs(out.gamma - spec_y.min()));
    const double off_x = std::max(std::abs(out.gamma - spec_x.max()),
                                  std::abs(out.gamma - spec_x.min()));
    if (off_y <= spec_y.range() - eps && off_x <= spec_x.range() - eps)
        out.tag = SplitTag::efficient;
    else
        out.tag = SplitTag::discarded;
    return out;
}

}  // namespace uhdtest
