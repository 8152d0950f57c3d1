#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lastream/exact.hpp"
#include "lastream/harness/config.hpp"
#include "lastream/harness/results.hpp"
#include "lastream/harness/sweeps.hpp"
#include "lastream/learned.hpp"
#include "lastream/oracle.hpp"
#include "lastream/smooth_histogram.hpp"
#include "lastream/time_decay.hpp"

namespace lastream::harness {

/// Quick deterministic self-checks behind `lastream verify`. They are scaled
/// down from the acceptance suite so they finish in a few seconds.
struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

inline Stream random_stream(std::mt19937_64& g, std::size_t m, std::uint64_t n) {
    Stream s;
    for (std::size_t t = 1; t <= m; ++t) s.push_back({t, g() % n, 1.0});
    return s;
}

inline CheckResult check_sandwich(std::size_t max_len, std::uint64_t universe) {
    const double eps = 0.3;
    const double beta = smoothness_beta(SmoothFamily::fp, eps, 2);
    using H = SmoothHistogram<ExactFpEstimator>;
    std::size_t streams = 0, failures = 0;
    Stream s;
    std::function<void(const H&)> dfs = [&](const H& h) {
        const std::uint64_t L = s.size();
        if (L > 0) {
            ++streams;
            for (std::uint64_t W = 1; W <= L; ++W) {
                const auto a = h.query(W);
                const double win = exact_fp(exact_window_vector(s, universe, W, L), 2);
                const double suffix = exact_fp(exact_range_vector(s, universe, a.start, L), 2);
                if (a.estimate < (1 - eps) * win - 1e-9 || a.estimate > suffix + 1e-9 || a.start > L - W + 1) ++failures;
            }
        }
        if (L == max_len) return;
        for (std::uint64_t i = 0; i < universe; ++i) {
            H next = h;
            s.push_back({L + 1, i, 1.0});
            next.update(s.back());
            dfs(next);
            s.pop_back();
        }
    };
    dfs(H([universe](std::uint64_t) { return ExactFpEstimator(universe, 2); }, {beta, 0, 1}));
    return {"sliding-window sandwich", failures == 0,
            std::to_string(streams) + " streams, " + std::to_string(failures) + " violations"};
}

inline CheckResult check_learned_degenerations() {
    std::mt19937_64 g(11);
    std::size_t bad = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t n = 50;
        auto s = random_stream(g, 200, n);
        const double truth = exact_fp(exact_vector(s, n), 3);
        auto heavy = make_learned_fp(all_heavy_oracle(), {3, n, 0.0, 1000, 1}, 1);
        auto full = make_learned_fp(all_light_oracle(), {3, n, 1.0, 0, 1}, 1);
        for (const auto& u : s) heavy.update(u.item), full.update(u.item);
        bad += !close(heavy.estimate(), truth, 1e-9) + !close(full.estimate(), truth, 1e-9);
    }
    return {"learned-fp degenerations", bad == 0, std::to_string(bad) + " mismatches over 40 runs"};
}

inline CheckResult check_instance_bound() {
    const std::uint64_t m = 2000;
    std::size_t worst_plain = 0, worst_cap = 0;
    bool ok = true;
    for (double beta : {0.5, 0.1}) {
        SmoothHistogram<ExactFpEstimator> plain([](std::uint64_t) { return ExactFpEstimator(1, 2); }, {beta, 0, 1});
        SmoothHistogram<ExactFpEstimator> capped([](std::uint64_t) { return ExactFpEstimator(1, 2); }, {beta, 20, 1});
        for (std::uint64_t t = 1; t <= m; ++t) {
            plain.update(StreamUpdate{t, 0, 1.0});
            capped.update(StreamUpdate{t, 0, 1.0});
            ok = ok && plain.size() <= 4 * std::log(static_cast<double>(m)) / beta && capped.size() <= 20;
        }
        worst_plain = std::max(worst_plain, plain.peak_size());
        worst_cap = std::max(worst_cap, capped.peak_size());
    }
    return {"histogram instance bound", ok,
            "peak " + std::to_string(worst_plain) + " uncapped, " + std::to_string(worst_cap) + " capped"};
}

inline CheckResult check_time_decay() {
    std::mt19937_64 g(5);
    const double eps = 0.2;
    std::size_t bad = 0;
    for (auto fn : {DecayFunction::polynomial(1), DecayFunction::exponential(0.9)}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::uint64_t n = 8;
            auto s = random_stream(g, 120, n);
            auto prm = smoothness_params(fn, eps, 2, s.size());
            TimeDecayEstimator<ExactVectorPayload> td(fn, prm, [] { return ExactVectorPayload(2); });
            for (const auto& u : s) {
                td.update(u);
                bad += static_cast<double>(td.block_count()) > td.block_bound();
            }
            const double G = exact_fp(exact_decayed_vector(s, n, fn, s.size()), 2);
            const double v = td.estimate();
            bad += v > G * (1 + 1e-12) || v < (1 - eps) * G - prm.nu * static_cast<double>(n);
        }
    }
    return {"time-decay bounds", bad == 0, std::to_string(bad) + " violations"};
}

inline CheckResult check_noisy_identity() {
    auto s = generate_planted_stream({10000, 5000, 25, 0.5, 1});
    auto inner = exact_oracle(s, 10000, 2);
    auto wrapped = noisy_wrap(inner, 0.0, 9);
    std::size_t bad = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) bad += inner->is_heavy(i, 1) != wrapped->is_heavy(i, 1);
    return {"noisy oracle at delta 0", bad == 0, std::to_string(bad) + " differing answers"};
}

inline CheckResult check_determinism() {
    nlohmann::json j = {{"dataset", {{"n", 10000}, {"m", 4000}, {"q", 10}, {"seed", 2}}},
                        {"estimator", {{"copies", 3}, {"groups", 1}}},
                        {"histogram", {{"beta", 0.2}}},
                        {"sweep", {{"window_fractions", {0.25, 0.5, 1.0}}}}};
    const auto c = config_from_json(j);
    const auto a = to_csv(without_wall_time(run_experiment(c).rows));
    const auto b = to_csv(without_wall_time(run_experiment(c).rows));
    return {"determinism", a == b, a == b ? "identical CSVs" : "CSVs differ"};
}

}  // namespace detail

inline std::vector<CheckResult> run_verification() {
    return {detail::check_sandwich(8, 3),          detail::check_learned_degenerations(),
            detail::check_instance_bound(),        detail::check_time_decay(),
            detail::check_noisy_identity(),        detail::check_determinism()};
}

}  // namespace lastream::harness
