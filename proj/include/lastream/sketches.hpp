#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lastream/error.hpp"
#include "lastream/hash.hpp"
#include "lastream/math.hpp"

namespace lastream {

/// AMS F2 sketch: one real counter Z_j = sum_i sign_j(i) x_i per repetition.
/// The estimate is the median over repetitions of Z_j^2.
class AmsSketch {
public:
    AmsSketch(std::uint64_t universe, std::vector<std::uint64_t> seeds) : universe_(universe) {
        detail::require(!seeds.empty(), "AMS sketch needs at least one repetition");
        signs_.reserve(seeds.size());
        for (auto s : seeds) signs_.emplace_back(s, 2);
        z_.assign(seeds.size(), 0.0);
    }

    /// Repetition j uses seed first_seed + j.
    AmsSketch(std::uint64_t universe, std::size_t repetitions, std::uint64_t first_seed = 0)
        : AmsSketch(universe, consecutive(repetitions, first_seed)) {}

    void update(std::uint64_t item, double weight = 1.0) {
        detail::require(item < universe_, "item outside universe");
        for (std::size_t j = 0; j < z_.size(); ++j) z_[j] += signs_[j].sign(item) * weight;
    }

    /// Z_j^2 of a single repetition (unbiased for F2).
    double repetition_square(std::size_t j) const { return z_.at(j) * z_.at(j); }

    double estimate() const {
        std::vector<double> sq(z_.size());
        for (std::size_t j = 0; j < z_.size(); ++j) sq[j] = z_[j] * z_[j];
        return median(std::move(sq));
    }

    bool compatible(const AmsSketch& o) const {
        if (universe_ != o.universe_ || signs_.size() != o.signs_.size()) return false;
        for (std::size_t j = 0; j < signs_.size(); ++j)
            if (!(signs_[j] == o.signs_[j])) return false;
        return true;
    }

    /// this += c * other, counterwise.
    void add_scaled(const AmsSketch& o, double c) {
        detail::require(compatible(o), "AMS sketches with different configurations cannot be combined");
        for (std::size_t j = 0; j < z_.size(); ++j) z_[j] += c * o.z_[j];
    }

    void scale(double c) {
        for (auto& z : z_) z *= c;
    }

    AmsSketch empty_like() const {
        AmsSketch out = *this;
        std::fill(out.z_.begin(), out.z_.end(), 0.0);
        return out;
    }

    std::uint64_t universe() const noexcept { return universe_; }
    std::size_t repetitions() const noexcept { return z_.size(); }
    std::size_t counters() const noexcept { return z_.size(); }
    const std::vector<double>& values() const noexcept { return z_; }
    std::vector<double>& values() noexcept { return z_; }
    std::vector<std::uint64_t> seeds() const {
        std::vector<std::uint64_t> out;
        for (const auto& h : signs_) out.push_back(h.seed());
        return out;
    }

private:
    static std::vector<std::uint64_t> consecutive(std::size_t r, std::uint64_t first) {
        std::vector<std::uint64_t> out(r);
        for (std::size_t j = 0; j < r; ++j) out[j] = first + j;
        return out;
    }

    std::uint64_t universe_;
    std::vector<PolyHash> signs_;
    std::vector<double> z_;
};

inline AmsSketch ams_combine(const AmsSketch& a, const AmsSketch& b) {
    AmsSketch out = a;
    out.add_scaled(b, 1.0);
    return out;
}

inline AmsSketch ams_scale(const AmsSketch& a, double c) {
    AmsSketch out = a;
    out.scale(c);
    return out;
}

/// Count-sketch: depth rows of width signed buckets. Point queries take the
/// median over rows of sign_r(i) * bucket_r(h_r(i)).
class CountSketch {
public:
    CountSketch(std::uint64_t universe, std::size_t depth, std::size_t width, std::uint64_t seed)
        : universe_(universe), depth_(depth), width_(width), seed_(seed), table_(depth * width, 0.0) {
        detail::require(depth >= 1 && width >= 1, "count-sketch needs depth, width >= 1");
        for (std::size_t r = 0; r < depth; ++r) {
            buckets_.emplace_back(derive_seed(seed, r, 0), width);
            signs_.emplace_back(derive_seed(seed, r, 1), 2);
        }
    }

    void update(std::uint64_t item, double weight = 1.0) {
        detail::require(item < universe_, "item outside universe");
        for (std::size_t r = 0; r < depth_; ++r)
            table_[r * width_ + buckets_[r](item)] += signs_[r].sign(item) * weight;
    }

    double point_query(std::uint64_t item) const {
        std::vector<double> est(depth_);
        for (std::size_t r = 0; r < depth_; ++r)
            est[r] = signs_[r].sign(item) * table_[r * width_ + buckets_[r](item)];
        return median(std::move(est));
    }

    /// Median over rows of the row's sum of squared buckets.
    double f2_estimate() const {
        std::vector<double> est(depth_, 0.0);
        for (std::size_t r = 0; r < depth_; ++r)
            for (std::size_t b = 0; b < width_; ++b) est[r] += table_[r * width_ + b] * table_[r * width_ + b];
        return median(std::move(est));
    }

    /// Candidates whose point estimate reaches the threshold (>= threshold,
    /// and strictly positive when the threshold is 0).
    template <class Range>
    std::vector<std::uint64_t> heavy_hitters(const Range& candidates, double threshold) const {
        detail::require(threshold >= 0.0, "threshold must be >= 0");
        std::vector<std::uint64_t> out;
        for (std::uint64_t i : candidates) {
            const double e = point_query(i);
            if (e >= threshold && e > 0.0) out.push_back(i);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    bool compatible(const CountSketch& o) const {
        return universe_ == o.universe_ && depth_ == o.depth_ && width_ == o.width_ && seed_ == o.seed_;
    }

    void add_scaled(const CountSketch& o, double c) {
        detail::require(compatible(o), "count-sketches with different configurations cannot be combined");
        for (std::size_t k = 0; k < table_.size(); ++k) table_[k] += c * o.table_[k];
    }

    void scale(double c) {
        for (auto& v : table_) v *= c;
    }

    double estimate() const { return f2_estimate(); }

    std::uint64_t universe() const noexcept { return universe_; }
    std::size_t depth() const noexcept { return depth_; }
    std::size_t width() const noexcept { return width_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t counters() const noexcept { return table_.size(); }
    const std::vector<double>& table() const noexcept { return table_; }
    std::vector<double>& table() noexcept { return table_; }

private:
    std::uint64_t universe_;
    std::size_t depth_, width_;
    std::uint64_t seed_;
    std::vector<PolyHash> buckets_;
    std::vector<PolyHash> signs_;
    std::vector<double> table_;
};

/// Selective subsampling F_p estimator: items whose membership variate falls
/// below the rate are counted exactly; the estimate rescales their p-th power
/// mass by 1/rate. Membership is a pure function of (seed, item).
class SubsampleFpEstimator {
public:
    SubsampleFpEstimator(std::uint64_t universe, double p, double rate, std::uint64_t seed,
                         MembershipHash mode = MembershipHash::poly)
        : universe_(universe), p_(p), sampler_(seed, rate, mode) {
        detail::require(p >= 1.0, "p must be >= 1");
    }

    bool is_sampled(std::uint64_t item) const { return sampler_.selected(item); }

    void update(std::uint64_t item, double weight = 1.0) {
        detail::require(item < universe_, "item outside universe");
        if (!sampler_.selected(item)) return;
        add_sampled(item, weight);
    }

    /// Adds to an item already known to be sampled (skips the membership hash).
    void add_sampled(std::uint64_t item, double weight) {
        double& c = counts_[item];
        sum_ += abs_pow(c + weight, p_) - abs_pow(c, p_);
        c += weight;
    }

    /// (1/rate) * sum over sampled items of count^p.
    double estimate() const { return sum_ / sampler_.rate(); }
    /// Unscaled sampled mass.
    double sampled_mass() const { return sum_; }

    std::uint64_t universe() const noexcept { return universe_; }
    double p() const noexcept { return p_; }
    double rate() const noexcept { return sampler_.rate(); }
    std::uint64_t seed() const noexcept { return sampler_.seed(); }
    MembershipHash mode() const noexcept { return sampler_.mode(); }
    std::size_t counters() const noexcept { return counts_.size(); }
    const std::unordered_map<std::uint64_t, double>& counts() const noexcept { return counts_; }

private:
    std::uint64_t universe_;
    double p_;
    MembershipSampler sampler_;
    std::unordered_map<std::uint64_t, double> counts_;
    double sum_ = 0.0;
};

}  // namespace lastream
