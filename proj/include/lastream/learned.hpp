#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "lastream/error.hpp"
#include "lastream/hash.hpp"
#include "lastream/math.hpp"
#include "lastream/oracle.hpp"
#include "lastream/sketches.hpp"

namespace lastream {

/// Counters the harness reads back from a learned estimator.
struct LearnedDiagnostics {
    std::size_t heavy_occupancy = 0;
    std::size_t demotions = 0;
    std::size_t oracle_queries = 0;
};

inline double default_light_rate(std::uint64_t universe) {
    return std::min(1.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::uint64_t>(universe, 1))));
}

inline std::size_t default_heavy_cap(std::uint64_t universe) {
    return 4 * static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(universe))));
}

/// Heavy/light split estimator. On the first sighting of an item the oracle
/// is asked whether the item is heavy in the suffix this estimator summarises;
/// the answer is cached and fixes the item's route for the lifetime of the
/// instance. Heavy items are counted exactly; everything else goes to the
/// light estimator, whose own estimate is already rescaled.
///
/// When the heavy store exceeds its cap the lowest-count entry is demoted: its
/// accumulated count is replayed into the light path and the item stays light.
template <class Light>
class HeavyLightEstimator {
public:
    HeavyLightEstimator(OraclePtr oracle, double p, std::uint64_t universe, std::uint64_t suffix_start, Light light,
                        std::size_t heavy_cap)
        : oracle_(std::move(oracle)),
          p_(p),
          universe_(universe),
          suffix_start_(suffix_start),
          heavy_cap_(heavy_cap),
          light_(std::move(light)) {
        detail::require(oracle_ != nullptr, "learned estimator needs an oracle");
        detail::require(p >= 1.0, "p must be >= 1");
        detail::require(heavy_cap >= 1, "heavy store cap must be >= 1");
    }

    void update(std::uint64_t item, double weight = 1.0) {
        detail::require(item < universe_, "item outside universe");
        auto [it, fresh] = route_.try_emplace(item, Route::light_unsampled);
        if (fresh) {
            ++diag_.oracle_queries;
            if (oracle_->is_heavy(item, suffix_start_)) {
                it->second = Route::heavy;
            } else {
                it->second = light_admits(item) ? Route::light_sampled : Route::light_unsampled;
            }
        }
        switch (it->second) {
            case Route::heavy: {
                double& c = heavy_[item];
                heavy_sum_ += abs_pow(c + weight, p_) - abs_pow(c, p_);
                c += weight;
                if (heavy_.size() > heavy_cap_) demote_smallest();
                break;
            }
            case Route::light_sampled: light_add(item, weight); break;
            case Route::light_unsampled: break;
        }
    }

    double estimate() const { return heavy_sum_ + light_.estimate(); }
    double heavy_contribution() const { return heavy_sum_; }
    double light_contribution() const { return light_.estimate(); }

    bool routed_heavy(std::uint64_t item) const {
        auto it = route_.find(item);
        return it != route_.end() && it->second == Route::heavy;
    }

    std::size_t counters() const { return heavy_.size() + light_.counters(); }
    LearnedDiagnostics diagnostics() const {
        auto d = diag_;
        d.heavy_occupancy = heavy_.size();
        return d;
    }
    const Light& light() const noexcept { return light_; }
    std::uint64_t suffix_start() const noexcept { return suffix_start_; }

private:
    enum class Route : std::uint8_t { heavy, light_sampled, light_unsampled };

    static constexpr bool kSampledLight = requires(const Light& l, std::uint64_t i) { l.is_sampled(i); };

    bool light_admits(std::uint64_t item) const {
        if constexpr (kSampledLight)
            return light_.is_sampled(item);
        else
            return true;
    }

    void light_add(std::uint64_t item, double weight) {
        if constexpr (kSampledLight)
            light_.add_sampled(item, weight);
        else
            light_.update(item, weight);
    }

    void demote_smallest() {
        auto victim = heavy_.begin();
        for (auto it = heavy_.begin(); it != heavy_.end(); ++it)
            if (it->second < victim->second || (it->second == victim->second && it->first < victim->first))
                victim = it;
        const auto item = victim->first;
        const double c = victim->second;
        heavy_sum_ -= abs_pow(c, p_);
        heavy_.erase(victim);
        const bool admitted = light_admits(item);
        route_[item] = admitted ? Route::light_sampled : Route::light_unsampled;
        if (admitted) light_add(item, c);
        ++diag_.demotions;
    }

    OraclePtr oracle_;
    double p_;
    std::uint64_t universe_;
    std::uint64_t suffix_start_;
    std::size_t heavy_cap_;
    Light light_;
    std::unordered_map<std::uint64_t, Route> route_;
    std::unordered_map<std::uint64_t, double> heavy_;
    double heavy_sum_ = 0.0;
    LearnedDiagnostics diag_;
};

/// Learning-augmented F_p: exact heavy counters plus a light path sampled at
/// rate rho (default n^(-1/2)) and rescaled by 1/rho.
using LearnedFpEstimator = HeavyLightEstimator<SubsampleFpEstimator>;

/// Heavy counters plus AMS on the light remainder (p = 2 only).
using LearnedAmsEstimator = HeavyLightEstimator<AmsSketch>;

struct LearnedFpParams {
    double p = 3.0;
    std::uint64_t universe = 0;
    double rate = 0.0;          ///< 0 selects n^(-1/2)
    std::size_t heavy_cap = 0;  ///< 0 selects 4 * ceil(sqrt(n))
    std::uint64_t seed = 0;
    MembershipHash hash = MembershipHash::poly;
};

inline LearnedFpEstimator make_learned_fp(OraclePtr oracle, const LearnedFpParams& prm, std::uint64_t suffix_start) {
    const double rate = prm.rate > 0.0 ? prm.rate : default_light_rate(prm.universe);
    const std::size_t cap = prm.heavy_cap > 0 ? prm.heavy_cap : default_heavy_cap(prm.universe);
    return LearnedFpEstimator(std::move(oracle), prm.p, prm.universe, suffix_start,
                              SubsampleFpEstimator(prm.universe, prm.p, rate, prm.seed, prm.hash), cap);
}

inline LearnedAmsEstimator make_learned_ams(OraclePtr oracle, std::uint64_t universe, std::size_t repetitions,
                                            std::uint64_t first_seed, std::uint64_t suffix_start,
                                            std::size_t heavy_cap = 0) {
    return LearnedAmsEstimator(std::move(oracle), 2.0, universe, suffix_start,
                               AmsSketch(universe, repetitions, first_seed),
                               heavy_cap > 0 ? heavy_cap : default_heavy_cap(universe));
}

/// Learning-augmented (k, p)-cascaded norm over an n x d matrix addressed by
/// flattened keys row * d + col. Oracle-heavy entries are exact; light entries
/// are kept iff a seeded membership hash admits them (rate rho_c), and each
/// row's sampled light p-mass is rescaled by 1/rho_c inside the nested norm.
class LearnedCascadedEstimator {
public:
    LearnedCascadedEstimator(OraclePtr oracle, std::uint64_t n, std::uint64_t d, double k, double p, double rate,
                             std::uint64_t seed, std::uint64_t suffix_start, std::size_t heavy_cap = 0)
        : oracle_(std::move(oracle)),
          n_(n),
          d_(d),
          k_(k),
          p_(p),
          suffix_start_(suffix_start),
          heavy_cap_(heavy_cap > 0 ? heavy_cap : default_heavy_cap(n * d)),
          sampler_(seed, rate > 0.0 ? rate : default_rate(n, d)),
          heavy_rows_(n, 0.0),
          light_rows_(n, 0.0) {
        detail::require(oracle_ != nullptr, "learned estimator needs an oracle");
        detail::require(k >= p && p >= 1.0, "cascaded norm requires k >= p >= 1");
    }

    /// (d n)^(-1/2), clamped to (0, 1].
    static double default_rate(std::uint64_t n, std::uint64_t d) {
        return std::min(1.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::uint64_t>(n * d, 1))));
    }

    void update(std::uint64_t key, double weight = 1.0) {
        detail::require(key < n_ * d_, "matrix key out of bounds");
        auto [it, fresh] = route_.try_emplace(key, Route::light_unsampled);
        if (fresh) {
            ++diag_.oracle_queries;
            if (oracle_->is_heavy(key, suffix_start_))
                it->second = Route::heavy;
            else
                it->second = sampler_.selected(key) ? Route::light_sampled : Route::light_unsampled;
        }
        const std::uint64_t row = key / d_;
        switch (it->second) {
            case Route::heavy: {
                double& c = heavy_[key];
                const double before = row_value(row);
                heavy_rows_[row] += abs_pow(c + weight, p_) - abs_pow(c, p_);
                c += weight;
                outer_ += row_term(row_value(row)) - row_term(before);
                if (heavy_.size() > heavy_cap_) demote_smallest();
                break;
            }
            case Route::light_sampled: add_light(key, weight); break;
            case Route::light_unsampled: break;
        }
    }

    double estimate() const { return outer_ > 0.0 ? std::pow(outer_, 1.0 / k_) : 0.0; }

    /// Re-evaluates the nested norm from the stored rows (no running sums).
    double estimate_direct() const {
        double outer = 0.0;
        for (std::uint64_t i = 0; i < n_; ++i) outer += row_term(row_value(i));
        return outer > 0.0 ? std::pow(outer, 1.0 / k_) : 0.0;
    }

    std::size_t counters() const { return heavy_.size() + light_.size(); }
    LearnedDiagnostics diagnostics() const {
        auto d = diag_;
        d.heavy_occupancy = heavy_.size();
        return d;
    }
    double rate() const noexcept { return sampler_.rate(); }

private:
    enum class Route : std::uint8_t { heavy, light_sampled, light_unsampled };

    double row_value(std::uint64_t row) const { return heavy_rows_[row] + light_rows_[row] / sampler_.rate(); }
    double row_term(double v) const { return v > 0.0 ? std::pow(v, k_ / p_) : 0.0; }

    void add_light(std::uint64_t key, double weight) {
        const std::uint64_t row = key / d_;
        double& c = light_[key];
        const double before = row_value(row);
        light_rows_[row] += abs_pow(c + weight, p_) - abs_pow(c, p_);
        c += weight;
        outer_ += row_term(row_value(row)) - row_term(before);
    }

    void demote_smallest() {
        auto victim = heavy_.begin();
        for (auto it = heavy_.begin(); it != heavy_.end(); ++it)
            if (it->second < victim->second || (it->second == victim->second && it->first < victim->first))
                victim = it;
        const auto key = victim->first;
        const double c = victim->second;
        const std::uint64_t row = key / d_;
        const double before = row_value(row);
        heavy_rows_[row] -= abs_pow(c, p_);
        outer_ += row_term(row_value(row)) - row_term(before);
        heavy_.erase(victim);
        const bool admitted = sampler_.selected(key);
        route_[key] = admitted ? Route::light_sampled : Route::light_unsampled;
        if (admitted) add_light(key, c);
        ++diag_.demotions;
    }

    OraclePtr oracle_;
    std::uint64_t n_, d_;
    double k_, p_;
    std::uint64_t suffix_start_;
    std::size_t heavy_cap_;
    MembershipSampler sampler_;
    std::unordered_map<std::uint64_t, Route> route_;
    std::unordered_map<std::uint64_t, double> heavy_;
    std::unordered_map<std::uint64_t, double> light_;
    std::vector<double> heavy_rows_;
    std::vector<double> light_rows_;
    double outer_ = 0.0;
    LearnedDiagnostics diag_;
};

/// Mixed-radix index of a point in [Delta]^d; the first coordinate is the most
/// significant digit, so the map preserves lexicographic order.
inline std::uint64_t flatten_rect(std::span<const std::uint64_t> point, std::uint64_t delta) {
    detail::require(delta >= 1, "Delta must be >= 1");
    std::uint64_t idx = 0;
    for (auto c : point) {
        detail::require(c < delta, "rectangle coordinate out of range");
        detail::require(idx <= (std::numeric_limits<std::uint64_t>::max() - c) / delta, "flattened index overflows");
        idx = idx * delta + c;
    }
    return idx;
}

inline std::uint64_t rect_universe(std::uint64_t delta, std::uint64_t dims) {
    std::uint64_t n = 1;
    for (std::uint64_t k = 0; k < dims; ++k) {
        detail::require(n <= std::numeric_limits<std::uint64_t>::max() / delta, "Delta^d overflows");
        n *= delta;
    }
    return n;
}

}  // namespace lastream
