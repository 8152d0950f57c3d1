#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lastream/decay.hpp"
#include "lastream/error.hpp"
#include "lastream/math.hpp"
#include "lastream/stream.hpp"

namespace lastream {

/// Brute-force ground truth. Everything here is O(stream) and exists to check
/// the sketches against.

inline double exact_fp(const FrequencyVector& v, double p) {
    detail::require(p >= 1.0, "p must be >= 1");
    double s = 0.0;
    v.for_each_nonzero([&](std::uint64_t, double x) { s += abs_pow(x, p); });
    return s;
}

inline FrequencyVector exact_vector(const Stream& s, std::uint64_t universe) {
    FrequencyVector v(universe);
    for (const auto& u : s) v.add(u.item, u.weight);
    return v;
}

/// Counts of the updates with timestamps in [from, to] (inclusive, 1-based).
inline FrequencyVector exact_range_vector(const Stream& s, std::uint64_t universe, std::uint64_t from,
                                          std::uint64_t to) {
    FrequencyVector v(universe);
    for (const auto& u : s)
        if (u.timestamp >= from && u.timestamp <= to) v.add(u.item, u.weight);
    return v;
}

/// Frequency vector of the last W updates as of step t: timestamps [t-W+1, t].
inline FrequencyVector exact_window_vector(const Stream& s, std::uint64_t universe, std::uint64_t window,
                                           std::uint64_t t) {
    detail::require(window >= 1, "window must be >= 1");
    detail::require(t >= window, "window query requires t >= W");
    return exact_range_vector(s, universe, t - window + 1, t);
}

/// x^t_i = sum over updates t' <= t to item i of w(t - t' + 1).
inline FrequencyVector exact_decayed_vector(const Stream& s, std::uint64_t universe, const DecayFunction& fn,
                                            std::uint64_t t) {
    FrequencyVector v(universe);
    for (const auto& u : s) {
        if (u.timestamp > t) continue;
        const double w = fn(t - u.timestamp + 1) * u.weight;
        if (w != 0.0) v.add(u.item, w);
    }
    return v;
}

/// Dense n x d accumulation of a matrix stream.
inline std::vector<double> exact_matrix(const MatrixStream& ms, std::uint64_t n, std::uint64_t d) {
    std::vector<double> X(n * d, 0.0);
    for (const auto& u : ms) {
        detail::require(u.row < n && u.col < d, "matrix update out of bounds");
        X[matrix_key(u.row, u.col, d)] += u.weight;
    }
    return X;
}

/// (sum_i (sum_j |X_ij|^p)^(k/p))^(1/k) over a dense row-major matrix.
inline double cascaded_norm(const std::vector<double>& X, std::uint64_t n, std::uint64_t d, double k, double p) {
    detail::require(k >= p && p >= 1.0, "cascaded norm requires k >= p >= 1");
    double outer = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::uint64_t j = 0; j < d; ++j) row += abs_pow(X[i * d + j], p);
        if (row > 0.0) outer += std::pow(row, k / p);
    }
    return outer > 0.0 ? std::pow(outer, 1.0 / k) : 0.0;
}

inline double exact_cascaded(const MatrixStream& ms, std::uint64_t n, std::uint64_t d, double k, double p) {
    return cascaded_norm(exact_matrix(ms, n, d), n, d, k, p);
}

// ---------------------------------------------------------------------------
// Exact inner estimators. They satisfy the same update/estimate interface as
// the randomized sketches so histograms and decay blocks can run on them.

/// Exact running F_p over a dense/hashed count vector.
class ExactFpEstimator {
public:
    ExactFpEstimator(std::uint64_t universe, double p) : counts_(universe), p_(p) {
        detail::require(p >= 1.0, "p must be >= 1");
    }

    void update(std::uint64_t item, double weight = 1.0) {
        const double before = counts_[item];
        counts_.add(item, weight);
        sum_ += abs_pow(before + weight, p_) - abs_pow(before, p_);
    }

    double estimate() const { return sum_; }
    std::size_t counters() const { return counts_.is_dense() ? counts_.universe() : counts_.support_size(); }
    const FrequencyVector& vector() const { return counts_; }

private:
    FrequencyVector counts_;
    double p_;
    double sum_ = 0.0;
};

/// Exact running (k, p)-cascaded norm over flattened keys row * d + col.
class ExactCascadedEstimator {
public:
    ExactCascadedEstimator(std::uint64_t n, std::uint64_t d, double k, double p)
        : n_(n), d_(d), k_(k), p_(p), X_(n * d, 0.0), rows_(n, 0.0) {
        detail::require(k >= p && p >= 1.0, "cascaded norm requires k >= p >= 1");
    }

    void update(std::uint64_t key, double weight = 1.0) {
        detail::require(key < X_.size(), "matrix key out of bounds");
        const std::uint64_t row = key / d_;
        const double before = X_[key];
        X_[key] = before + weight;
        const double old_row = rows_[row];
        rows_[row] = old_row + abs_pow(before + weight, p_) - abs_pow(before, p_);
        outer_ += row_term(rows_[row]) - row_term(old_row);
    }

    double estimate() const { return outer_ > 0.0 ? std::pow(outer_, 1.0 / k_) : 0.0; }
    std::size_t counters() const { return X_.size(); }
    std::uint64_t rows() const noexcept { return n_; }
    std::uint64_t cols() const noexcept { return d_; }

private:
    double row_term(double row) const { return row > 0.0 ? std::pow(row, k_ / p_) : 0.0; }

    std::uint64_t n_, d_;
    double k_, p_;
    std::vector<double> X_;
    std::vector<double> rows_;
    double outer_ = 0.0;
};

}  // namespace lastream
