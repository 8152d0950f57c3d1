#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

#include "lastream/error.hpp"
#include "lastream/stream.hpp"

namespace lastream {

enum class SmoothFamily { fp, rectangle_fp, cascaded };

/// Pruning ratio beta for accuracy eps:
///   F_p and rectangle F_p: eps^p / p^p
///   (k, p)-cascaded norm:  eps^k / k
inline double smoothness_beta(SmoothFamily family, double eps, double p, double k = 0.0) {
    if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("epsilon must lie in (0, 1)");
    switch (family) {
        case SmoothFamily::fp:
        case SmoothFamily::rectangle_fp:
            if (!(p >= 1.0)) throw ContractViolation("p must be >= 1");
            return std::pow(eps, p) / std::pow(p, p);
        case SmoothFamily::cascaded:
            if (!(k >= p && p >= 2.0)) throw ContractViolation("cascaded smoothness requires k >= p >= 2");
            return std::pow(eps, k) / k;
    }
    return 0.0;
}

struct HistogramConfig {
    double beta = 0.5;
    std::size_t cap = 0;        ///< 0 disables the hard cap
    std::uint64_t stride = 1;   ///< spawn an instance every stride-th update
};

/// Smooth histogram over a suffix estimator E (update(item, w), estimate(),
/// counters()). An instance is spawned at every (stride-th) step, every
/// survivor sees every update, and after each step the pruning pass keeps,
/// for each surviving l, only the largest k with est(k) >= (1 - beta) est(l)
/// among the instances after l. A query for window W returns the newest
/// instance that started at or before now - W + 1.
template <class E>
class SmoothHistogram {
public:
    using Factory = std::function<E(std::uint64_t start_time)>;

    struct Answer {
        double estimate = 0.0;
        std::uint64_t start = 0;
    };

    SmoothHistogram(Factory factory, HistogramConfig cfg) : factory_(std::move(factory)), cfg_(cfg) {
        detail::require(cfg_.beta >= 0.0 && cfg_.beta < 1.0, "beta must lie in [0, 1)");
        detail::require(cfg_.stride >= 1, "stride must be >= 1");
        detail::require(cfg_.cap == 0 || cfg_.cap >= 2, "instance cap must be 0 (off) or >= 2");
    }

    void update(const StreamUpdate& u) {
        if (u.timestamp != now_ + 1) throw ContractViolation("histogram updates must arrive in timestamp order");
        step(u.item, u.weight);
    }

    void update(std::uint64_t item, double weight = 1.0) { step(item, weight); }

    Answer query(std::uint64_t window) const {
        detail::require(window >= 1, "window must be >= 1");
        detail::require(window <= now_, "window larger than the stream so far");
        const std::uint64_t target = now_ - window + 1;
        auto it = std::upper_bound(inst_.begin(), inst_.end(), target,
                                   [](std::uint64_t t, const Instance& in) { return t < in.start; });
        const Instance& chosen = it == inst_.begin() ? inst_.front() : *std::prev(it);
        return {chosen.cached, chosen.start};
    }

    std::uint64_t now() const noexcept { return now_; }
    std::size_t size() const noexcept { return inst_.size(); }
    std::size_t peak_size() const noexcept { return peak_; }
    const HistogramConfig& config() const noexcept { return cfg_; }

    std::vector<std::uint64_t> start_times() const {
        std::vector<std::uint64_t> out;
        for (const auto& in : inst_) out.push_back(in.start);
        return out;
    }

    std::vector<double> estimates() const {
        std::vector<double> out;
        for (const auto& in : inst_) out.push_back(in.cached);
        return out;
    }

    const E& instance(std::size_t j) const { return inst_.at(j).est; }

    std::size_t counters() const {
        std::size_t c = 0;
        for (const auto& in : inst_) c += in.est.counters();
        return c;
    }

    /// Per-step rows "time,instances,start_times,estimates" (lists joined by ';').
    void set_trace(std::ostream* out) {
        trace_ = out;
        if (trace_) *trace_ << "time,instances,start_times,estimates\n";
    }

private:
    struct Instance {
        std::uint64_t start;
        E est;
        double cached;
    };

    void step(std::uint64_t item, double weight) {
        ++now_;
        if ((now_ - 1) % cfg_.stride == 0) inst_.push_back({now_, factory_(now_), 0.0});
        for (auto& in : inst_) {
            in.est.update(item, weight);
            in.cached = in.est.estimate();
        }
        prune();
        if (cfg_.cap > 0) enforce_cap();
        peak_ = std::max(peak_, inst_.size());
        if (trace_) write_trace();
    }

    void prune() {
        const std::size_t n = inst_.size();
        if (n < 3) return;
        // suffix maxima make "largest k with est(k) >= bar" a binary search;
        // indices after the current l are never touched before l moves past them
        sufmax_.assign(n, 0.0);
        sufmax_[n - 1] = inst_[n - 1].cached;
        for (std::size_t j = n - 1; j-- > 0;) sufmax_[j] = std::max(sufmax_[j + 1], inst_[j].cached);
        keep_.assign(n, true);

        std::size_t l = 0;
        while (l + 1 < n) {
            const double bar = (1.0 - cfg_.beta) * inst_[l].cached;
            // first index j > l whose suffix maximum drops below bar
            std::size_t lo = l + 1, hi = n;
            while (lo < hi) {
                const std::size_t mid = lo + (hi - lo) / 2;
                if (sufmax_[mid] >= bar)
                    lo = mid + 1;
                else
                    hi = mid;
            }
            const std::size_t k = lo - 1;  // largest index > l meeting the bar, or l itself
            if (k <= l) {
                ++l;
                continue;
            }
            for (std::size_t j = l + 1; j < k; ++j) keep_[j] = false;
            l = k;
        }
        compact();
    }

    void enforce_cap() {
        auto ratio = [](double a, double b) {
            if (b <= 0.0) return a <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
            return a / b;
        };
        while (inst_.size() > cfg_.cap) {
            std::size_t best = 1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t j = 1; j + 1 < inst_.size(); ++j) {
                const double r = ratio(inst_[j - 1].cached, inst_[j + 1].cached);
                if (r < best_ratio) {
                    best_ratio = r;
                    best = j;
                }
            }
            inst_.erase(inst_.begin() + static_cast<std::ptrdiff_t>(best));
        }
    }

    void compact() {
        std::size_t w = 0;
        for (std::size_t r = 0; r < inst_.size(); ++r) {
            if (!keep_[r]) continue;
            if (w != r) inst_[w] = std::move(inst_[r]);
            ++w;
        }
        inst_.erase(inst_.begin() + static_cast<std::ptrdiff_t>(w), inst_.end());
    }

    void write_trace() {
        *trace_ << now_ << ',' << inst_.size() << ',';
        for (std::size_t j = 0; j < inst_.size(); ++j) *trace_ << (j ? ";" : "") << inst_[j].start;
        *trace_ << ',';
        for (std::size_t j = 0; j < inst_.size(); ++j) *trace_ << (j ? ";" : "") << inst_[j].cached;
        *trace_ << '\n';
    }

    Factory factory_;
    HistogramConfig cfg_;
    std::vector<Instance> inst_;
    std::uint64_t now_ = 0;
    std::size_t peak_ = 0;
    std::ostream* trace_ = nullptr;
    std::vector<double> sufmax_;
    std::vector<bool> keep_;
};

}  // namespace lastream
