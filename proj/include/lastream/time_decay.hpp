#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <vector>

#include "lastream/decay.hpp"
#include "lastream/error.hpp"
#include "lastream/hash.hpp"
#include "lastream/math.hpp"
#include "lastream/oracle.hpp"
#include "lastream/stream.hpp"

namespace lastream {

/// Block payload holding the raw (sparse) frequency vector; estimate() is
/// sum |u_i|^p.
class ExactVectorPayload {
public:
    explicit ExactVectorPayload(double p) : p_(p) {}

    void update(std::uint64_t item, double weight) { v_[item] += weight; }
    void add_scaled(const ExactVectorPayload& o, double c) {
        for (const auto& [i, x] : o.v_) v_[i] += c * x;
    }
    double estimate() const {
        double s = 0.0;
        for (const auto& [i, x] : v_) s += abs_pow(x, p_);
        return s;
    }
    std::size_t counters() const { return v_.size(); }
    const std::map<std::uint64_t, double>& entries() const noexcept { return v_; }
    double p() const noexcept { return p_; }

private:
    std::map<std::uint64_t, double> v_;
    double p_;
};

/// Learned split in exact-vector mode: the weighted combination is routed at
/// estimate time. Oracle-heavy coordinates contribute |u_i|^p exactly; light
/// coordinates count only if the membership hash admits them, rescaled by
/// 1 / rate.
class LearnedVectorPayload {
public:
    LearnedVectorPayload(OraclePtr oracle, double p, double rate, std::uint64_t seed, std::uint64_t suffix_start = 1)
        : oracle_(std::move(oracle)), v_(p), sampler_(seed, rate), suffix_start_(suffix_start) {
        detail::require(oracle_ != nullptr, "learned payload needs an oracle");
    }

    void update(std::uint64_t item, double weight) { v_.update(item, weight); }
    void add_scaled(const LearnedVectorPayload& o, double c) { v_.add_scaled(o.v_, c); }
    double estimate() const {
        double heavy = 0.0, light = 0.0;
        for (const auto& [i, x] : v_.entries()) {
            if (oracle_->is_heavy(i, suffix_start_))
                heavy += abs_pow(x, v_.p());
            else if (sampler_.selected(i))
                light += abs_pow(x, v_.p());
        }
        return heavy + light / sampler_.rate();
    }
    std::size_t counters() const { return v_.counters(); }

private:
    OraclePtr oracle_;
    ExactVectorPayload v_;
    MembershipSampler sampler_;
    std::uint64_t suffix_start_;
};

/// Learned split in sketch mode: heavy coordinates are kept exactly, the rest
/// go into a linear sketch before insertion. Both halves are linear, so blocks
/// still combine.
template <class Sketch>
class LearnedSketchPayload {
public:
    LearnedSketchPayload(OraclePtr oracle, Sketch light, std::uint64_t suffix_start = 1)
        : oracle_(std::move(oracle)), heavy_(2.0), light_(std::move(light)), suffix_start_(suffix_start) {
        detail::require(oracle_ != nullptr, "learned payload needs an oracle");
    }

    void update(std::uint64_t item, double weight) {
        if (oracle_->is_heavy(item, suffix_start_))
            heavy_.update(item, weight);
        else
            light_.update(item, weight);
    }
    void add_scaled(const LearnedSketchPayload& o, double c) {
        heavy_.add_scaled(o.heavy_, c);
        light_.add_scaled(o.light_, c);
    }
    double estimate() const { return heavy_.estimate() + light_.estimate(); }
    std::size_t counters() const { return heavy_.counters() + light_.counters(); }

private:
    OraclePtr oracle_;
    ExactVectorPayload heavy_;
    Sketch light_;
    std::uint64_t suffix_start_;
};

/// Time-decayed G-moment over linear block payloads. P needs update(item, w),
/// add_scaled(const P&, c), estimate() and counters(); the factory must return
/// empty payloads sharing hash seeds so that blocks combine.
template <class P>
class TimeDecayEstimator {
public:
    using Factory = std::function<P()>;

    struct Block {
        P payload;
        std::uint64_t oldest;
        std::uint64_t newest;
        std::uint64_t updates;
    };

    TimeDecayEstimator(DecayFunction fn, SmoothnessParams prm, Factory factory)
        : fn_(fn), prm_(prm), factory_(std::move(factory)), spread_limit_(std::sqrt(1.0 + prm.eta)) {
        detail::require(prm_.eta > 0.0, "eta must be > 0");
        detail::require(prm_.nu > 0.0, "nu must be > 0");
        detail::require(prm_.expiry_age >= 1, "expiry age must be >= 1");
    }

    void update(const StreamUpdate& u) {
        if (u.timestamp != now_ + 1) throw ContractViolation("time-decay updates must arrive in timestamp order");
        step(u.item, u.weight);
    }

    void update(std::uint64_t item, double weight = 1.0) { step(item, weight); }

    /// f(sum_i w'_i * payload_i) with w'_i = w(now - newest_i + 1) / sqrt(1 + eta).
    double estimate() const {
        if (blocks_.empty()) return 0.0;
        return combined().estimate();
    }

    /// sum_i w'_i * payload_i, before post-processing.
    P combined() const {
        P u = factory_();
        for (const auto& b : blocks_) u.add_scaled(b.payload, scaled_weight(b));
        return u;
    }

    double scaled_weight(const Block& b) const { return fn_(now_ - b.newest + 1) / spread_limit_; }

    /// 3 log_{1+eta}(2 / nu).
    double block_bound() const { return 3.0 * std::log(2.0 / prm_.nu) / std::log1p(prm_.eta); }

    std::uint64_t now() const noexcept { return now_; }
    std::size_t block_count() const noexcept { return blocks_.size(); }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }  ///< oldest first
    const SmoothnessParams& params() const noexcept { return prm_; }
    const DecayFunction& decay() const noexcept { return fn_; }
    std::uint64_t deleted_updates() const noexcept { return deleted_; }
    std::uint64_t oldest_age() const { return blocks_.empty() ? 0 : now_ - blocks_.front().oldest + 1; }

    std::size_t counters() const {
        std::size_t c = 0;
        for (const auto& b : blocks_) c += b.payload.counters();
        return c;
    }

    /// Per-step rows "time,blocks,oldest_age,estimate". Evaluating the estimate
    /// every step is expensive; meant for small diagnostic runs.
    void set_trace(std::ostream* out) {
        trace_ = out;
        if (trace_) *trace_ << "time,blocks,oldest_age,estimate\n";
    }

private:
    void step(std::uint64_t item, double weight) {
        ++now_;
        P fresh = factory_();
        fresh.update(item, weight);
        blocks_.push_back({std::move(fresh), now_, now_, 1});
        expire();
        merge();
        if (trace_) *trace_ << now_ << ',' << blocks_.size() << ',' << oldest_age() << ',' << estimate() << '\n';
    }

    void expire() {
        std::size_t dead = 0;
        while (dead < blocks_.size() && now_ - blocks_[dead].newest + 1 >= prm_.expiry_age) {
            deleted_ += blocks_[dead].updates;
            ++dead;
        }
        blocks_.erase(blocks_.begin(), blocks_.begin() + static_cast<std::ptrdiff_t>(dead));
    }

    double spread(std::uint64_t oldest, std::uint64_t newest) const {
        const double hi = fn_(now_ - newest + 1);
        const double lo = fn_(now_ - oldest + 1);
        if (lo <= 0.0) return hi <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        return hi / lo;
    }

    // Merging (i, i+1) only makes block i newer, so pairs before i cannot
    // become mergeable; one oldest-first pass reaches the fixpoint.
    void merge() {
        std::size_t i = 0;
        while (i + 1 < blocks_.size()) {
            auto& a = blocks_[i];
            auto& b = blocks_[i + 1];
            if (spread(a.oldest, b.newest) <= spread_limit_) {
                a.payload.add_scaled(b.payload, 1.0);
                a.newest = b.newest;
                a.updates += b.updates;
                blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(i + 1));
            } else {
                ++i;
            }
        }
    }

    DecayFunction fn_;
    SmoothnessParams prm_;
    Factory factory_;
    double spread_limit_;
    std::vector<Block> blocks_;
    std::uint64_t now_ = 0;
    std::uint64_t deleted_ = 0;
    std::ostream* trace_ = nullptr;
};

}  // namespace lastream
