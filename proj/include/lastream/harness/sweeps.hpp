#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lastream/decay.hpp"
#include "lastream/ensemble.hpp"
#include "lastream/exact.hpp"
#include "lastream/harness/config.hpp"
#include "lastream/harness/results.hpp"
#include "lastream/learned.hpp"
#include "lastream/oracle.hpp"
#include "lastream/sketches.hpp"
#include "lastream/smooth_histogram.hpp"
#include "lastream/stream.hpp"
#include "lastream/time_decay.hpp"

namespace lastream::harness {

/// Evaluated stream plus the oracle training prefix that was cut off its front
/// (empty unless the oracle is prefix-trained).
struct Dataset {
    Stream stream;
    Stream prefix;
    std::uint64_t universe = 0;
};

inline Stream load_stream(const DatasetConfig& d) {
    if (d.source == "planted")
        return generate_planted_stream({d.n, d.m, static_cast<std::uint64_t>(d.q), d.heavy_fraction, d.seed});
    if (d.source == "binomial") return generate_binomial_stream({d.n, d.m, d.q, d.shift_q, d.shift_at, d.seed});
    return parse_stream_file(d.path, trace_format_from_string(d.format));
}

inline Dataset load_dataset(const ExperimentConfig& c) {
    Stream all = load_stream(c.dataset);
    Dataset out;
    out.universe = c.dataset.source == "file" ? universe_of(all) : c.dataset.n;
    if (c.oracle.kind == "prefix") {
        if (c.oracle.prefix >= all.size()) throw DataError("oracle prefix covers the whole stream");
        out.prefix = rebase(all, 0, c.oracle.prefix);
        out.stream = rebase(all, c.oracle.prefix, all.size());
    } else {
        out.stream = std::move(all);
    }
    if (out.stream.empty()) throw DataError("the evaluated stream is empty");
    if (c.estimator.kind == "cascaded") {
        const std::uint64_t d = c.estimator.cols;
        out.universe = (out.universe + d - 1) / d * d;
    }
    return out;
}

inline std::uint64_t matrix_rows(const ExperimentConfig& c, const Dataset& data) {
    return data.universe / c.estimator.cols;
}

inline MatrixStream as_matrix_stream(const Stream& s, std::uint64_t d) {
    MatrixStream out;
    out.reserve(s.size());
    for (const auto& u : s) out.push_back({u.timestamp, u.item / d, u.item % d, u.weight});
    return out;
}

inline OraclePtr build_oracle(const ExperimentConfig& c, const Dataset& data) {
    const auto& o = c.oracle;
    const double p = o.p.value_or(c.estimator.p);
    OraclePtr out;
    if (o.kind == "none") {
        out = all_light_oracle();
    } else if (o.kind == "file") {
        out = file_oracle(o.path);
    } else if (o.kind == "prefix") {
        PrefixOracleParams prm;
        prm.depth = o.depth;
        prm.width = o.width;
        prm.epsilon = o.epsilon;
        prm.rule = extraction_rule_from_string(o.rule);
        prm.top_k = o.top_k;
        prm.p = p;
        prm.seed = o.seed;
        prm.candidate_cap = o.candidate_cap;
        out = train_prefix_oracle(data.prefix, data.universe, prm);
    } else if (c.estimator.kind == "cascaded") {
        out = exact_cascaded_oracle(as_matrix_stream(data.stream, c.estimator.cols), matrix_rows(c, data),
                                    c.estimator.cols, c.estimator.k, c.estimator.p);
    } else {
        out = exact_oracle(data.stream, data.universe, p);
    }
    if (o.noise > 0.0) out = noisy_wrap(out, o.noise, o.seed);
    return out;
}

/// Estimates a smaller window from the whole-stream estimate by linear mass
/// scaling: estimate * W / m.
inline double scaled_baseline(double full_window_estimate, std::uint64_t window, std::uint64_t m) {
    lastream::detail::require(window >= 1 && window <= m, "scaled baseline needs 1 <= W <= m");
    return full_window_estimate * (static_cast<double>(window) / static_cast<double>(m));
}

// ---------------------------------------------------------------------------
// Ground truth

/// Brute-force quantity the sweep estimates over a slice of the stream.
struct Target {
    const Stream* stream = nullptr;
    std::uint64_t universe = 0;
    double p = 2;
    bool cascaded = false;
    double k = 0;
    std::uint64_t cols = 1;

    double window_truth(std::uint64_t W) const {
        const auto m = stream->size();
        auto v = exact_window_vector(*stream, universe, W, m);
        if (!cascaded) return exact_fp(v, p);
        std::vector<double> X(universe, 0.0);
        v.for_each_nonzero([&](std::uint64_t i, double x) { X[i] = x; });
        return cascaded_norm(X, universe / cols, cols, k, p);
    }

    /// Independent recount used for spot checks: hashed counts, no shared code.
    double window_recount(std::uint64_t W) const {
        const auto m = stream->size();
        std::unordered_map<std::uint64_t, double> c;
        for (std::size_t t = m - W; t < m; ++t) c[(*stream)[t].item] += (*stream)[t].weight;
        return summarize(c);
    }

    double decayed_recount(const DecayFunction& fn) const {
        const auto m = stream->size();
        std::unordered_map<std::uint64_t, double> c;
        for (const auto& u : *stream) c[u.item] += fn(m - u.timestamp + 1) * u.weight;
        return summarize(c);
    }

private:
    double summarize(const std::unordered_map<std::uint64_t, double>& c) const {
        if (!cascaded) {
            double s = 0;
            for (const auto& [_, x] : c) s += std::pow(std::fabs(x), p);
            return s;
        }
        std::unordered_map<std::uint64_t, double> rows;
        for (const auto& [i, x] : c) rows[i / cols] += std::pow(std::fabs(x), p);
        double outer = 0;
        for (const auto& [_, r] : rows) outer += std::pow(r, k / p);
        return outer > 0 ? std::pow(outer, 1.0 / k) : 0.0;
    }
};

struct TruthPoint {
    double truth;
    std::function<double()> recount;
};

/// Recomputes three randomly chosen ground-truth values independently.
inline void spot_check(const std::vector<TruthPoint>& points, std::uint64_t seed) {
    std::vector<std::size_t> idx(points.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::shuffle(idx.begin(), idx.end(), std::mt19937_64(seed));
    for (std::size_t k = 0; k < std::min<std::size_t>(3, idx.size()); ++k) {
        const auto& pt = points[idx[k]];
        const double again = pt.recount();
        if (!(std::fabs(again - pt.truth) <= 1e-9 * std::max(1.0, std::fabs(pt.truth))))
            throw InvariantViolation("ground truth " + detail::num(pt.truth) + " disagrees with recount " +
                                     detail::num(again));
    }
}

// ---------------------------------------------------------------------------
// Parallel execution

using Task = std::function<std::vector<MetricRow>()>;

/// Runs independent tasks on up to `threads` workers; results keep task order.
inline std::vector<MetricRow> run_tasks(const std::vector<Task>& tasks, std::size_t threads) {
    std::vector<std::vector<MetricRow>> out(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < tasks.size();) {
            try {
                out[i] = tasks[i]();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n = std::min(std::max<std::size_t>(threads, 1), tasks.size());
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<MetricRow> rows;
    for (auto& part : out) rows.insert(rows.end(), part.begin(), part.end());
    return rows;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// One histogram over the stream, queried at every window; optionally also the
/// scaled heuristic built from its whole-stream instance.
template <class E>
Task histogram_task(std::string label, typename SmoothHistogram<E>::Factory make, HistogramConfig hc,
                    const Stream& s, std::vector<std::uint64_t> windows, std::vector<double> truths, bool scaled) {
    return [=, &s] {
        const auto t0 = Clock::now();
        SmoothHistogram<E> h(make, hc);
        for (const auto& u : s) h.update(u);
        const double build = ms_since(t0);
        const std::uint64_t m = s.size();
        const double full = h.query(m).estimate;
        std::vector<MetricRow> rows;
        for (std::size_t k = 0; k < windows.size(); ++k) {
            const auto t1 = Clock::now();
            const double est = h.query(windows[k]).estimate;
            rows.push_back(make_row(static_cast<double>(windows[k]), truths[k], est, label, build + ms_since(t1),
                                    h.counters()));
            if (scaled)
                rows.push_back(make_row(static_cast<double>(windows[k]), truths[k],
                                        scaled_baseline(full, windows[k], m), label + "-scaled", build,
                                        h.instance(0).counters()));
        }
        return rows;
    };
}

/// A single window estimate: whole-stream estimator when W = m, else a histogram.
template <class E>
Task point_task(std::string label, std::function<E(std::uint64_t)> make, HistogramConfig hc, const Stream& s,
                std::uint64_t window, double truth, double sweep_value) {
    return [=, &s] {
        const auto t0 = Clock::now();
        double est;
        std::size_t counters;
        if (window == s.size()) {
            E e = make(1);
            for (const auto& u : s) e.update(u.item, u.weight);
            est = e.estimate();
            counters = e.counters();
        } else {
            SmoothHistogram<E> h(make, hc);
            for (const auto& u : s) h.update(u);
            est = h.query(window).estimate;
            counters = h.counters();
        }
        return std::vector<MetricRow>{make_row(sweep_value, truth, est, label, ms_since(t0), counters)};
    };
}

template <class P>
Task decay_task(std::string label, DecayFunction fn, SmoothnessParams prm, std::function<P()> make, const Stream& s,
                double truth, double sweep_value) {
    return [=, &s] {
        const auto t0 = Clock::now();
        TimeDecayEstimator<P> td(fn, prm, make);
        for (const auto& u : s) td.update(u);
        const double est = td.estimate();
        return std::vector<MetricRow>{make_row(sweep_value, truth, est, label, ms_since(t0), td.counters())};
    };
}

}  // namespace detail

/// Estimator families keyed by the configured kind. `add` receives a label and
/// a histogram factory for each contender; the first contender is the
/// learning-augmented one where there is one.
struct Contenders {
    const ExperimentConfig& cfg;
    const Dataset& data;
    OraclePtr oracle;

    using LearnedEnsemble = Ensemble<LearnedFpEstimator>;
    using SubsampleEnsemble = Ensemble<SubsampleFpEstimator>;
    using CascadedEnsemble = Ensemble<LearnedCascadedEstimator>;

    std::function<LearnedEnsemble(std::uint64_t)> learned_fp(double rate) const {
        const auto& e = cfg.estimator;
        LearnedFpParams prm{e.p, data.universe, rate, e.heavy_cap, cfg.seed, membership_from_string(e.hash)};
        const auto agg = aggregation_from_string(e.aggregation);
        const auto copies = e.copies, groups = e.groups;
        auto orc = oracle;
        return [=](std::uint64_t t) {
            return LearnedEnsemble(
                copies,
                [&](std::size_t j) {
                    auto pj = prm;
                    pj.seed = prm.seed + j;
                    return make_learned_fp(orc, pj, t);
                },
                agg, groups);
        };
    }

    std::function<SubsampleEnsemble(std::uint64_t)> subsample(double rate) const {
        const auto& e = cfg.estimator;
        const auto n = data.universe;
        const double p = e.p;
        const auto seed = cfg.seed;
        const auto hash = membership_from_string(e.hash);
        const auto agg = aggregation_from_string(e.aggregation);
        const auto copies = e.copies, groups = e.groups;
        return [=](std::uint64_t) {
            return SubsampleEnsemble(
                copies, [&](std::size_t j) { return SubsampleFpEstimator(n, p, rate, seed + j, hash); }, agg, groups);
        };
    }

    std::function<CascadedEnsemble(std::uint64_t)> cascaded(OraclePtr orc, double rate) const {
        const auto& e = cfg.estimator;
        const auto rows = matrix_rows(cfg, data), cols = e.cols;
        const double k = e.k, p = e.p;
        const auto seed = cfg.seed;
        const auto cap = e.heavy_cap;
        const auto agg = aggregation_from_string(e.aggregation);
        const auto copies = e.copies, groups = e.groups;
        return [=](std::uint64_t t) {
            return CascadedEnsemble(
                copies,
                [&](std::size_t j) { return LearnedCascadedEstimator(orc, rows, cols, k, p, rate, seed + j, t, cap); },
                agg, groups);
        };
    }

    std::function<LearnedAmsEstimator(std::uint64_t)> learned_ams() const {
        auto orc = oracle;
        const auto n = data.universe;
        const auto reps = cfg.estimator.repetitions;
        const auto seed = cfg.seed;
        const auto cap = cfg.estimator.heavy_cap;
        return [=](std::uint64_t t) { return make_learned_ams(orc, n, reps, seed, t, cap); };
    }

    std::function<AmsSketch(std::uint64_t)> ams() const {
        const auto n = data.universe;
        const auto reps = cfg.estimator.repetitions;
        const auto seed = cfg.seed;
        return [=](std::uint64_t) { return AmsSketch(n, reps, seed); };
    }

    std::function<ExactFpEstimator(std::uint64_t)> exact() const {
        const auto n = data.universe;
        const double p = cfg.estimator.p;
        return [=](std::uint64_t) { return ExactFpEstimator(n, p); };
    }
};

inline Target make_target(const ExperimentConfig& c, const Dataset& data) {
    Target t;
    t.stream = &data.stream;
    t.universe = data.universe;
    t.p = c.estimator.p;
    t.cascaded = c.estimator.kind == "cascaded";
    t.k = c.estimator.k;
    t.cols = c.estimator.cols;
    return t;
}

inline HistogramConfig histogram_config(const ExperimentConfig& c) {
    return {c.histogram.beta, c.histogram.cap, c.histogram.stride};
}

inline std::vector<std::uint64_t> resolve_windows(const ExperimentConfig& c, std::uint64_t m) {
    std::vector<std::uint64_t> out;
    if (c.sweep.windows) {
        out = *c.sweep.windows;
    } else {
        for (double f : c.sweep.window_fractions)
            out.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(f * static_cast<double>(m)))));
    }
    for (auto w : out)
        if (w > m) throw ConfigError("window " + std::to_string(w) + " exceeds the stream length " + std::to_string(m));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<MetricRow> run_window_sweep(const ExperimentConfig& c, const Dataset& data) {
    if (c.sweep.axis != "window") throw ConfigError("run_window_sweep needs sweep.axis = window");
    const auto windows = resolve_windows(c, data.stream.size());
    if (windows.empty()) return {};
    const Target target = make_target(c, data);
    std::vector<double> truths;
    std::vector<TruthPoint> points;
    for (auto W : windows) {
        truths.push_back(target.window_truth(W));
        points.push_back({truths.back(), [target, W] { return target.window_recount(W); }});
    }
    spot_check(points, c.seed);

    Contenders k{c, data, build_oracle(c, data)};
    const auto hc = histogram_config(c);
    const auto& s = data.stream;
    const bool sc = c.sweep.scaled;
    const auto& e = c.estimator;
    std::vector<Task> tasks;
    using detail::histogram_task;
    if (e.kind == "learned-fp") {
        tasks.push_back(histogram_task<Contenders::LearnedEnsemble>("ssa", k.learned_fp(e.learned_rate), hc, s, windows, truths, sc));
        tasks.push_back(histogram_task<Contenders::SubsampleEnsemble>("ss", k.subsample(e.baseline_rate), hc, s, windows, truths, sc));
    } else if (e.kind == "ss") {
        tasks.push_back(histogram_task<Contenders::SubsampleEnsemble>("ss", k.subsample(e.baseline_rate), hc, s, windows, truths, sc));
    } else if (e.kind == "ams") {
        tasks.push_back(histogram_task<LearnedAmsEstimator>("learned-ams", k.learned_ams(), hc, s, windows, truths, sc));
        tasks.push_back(histogram_task<AmsSketch>("ams", k.ams(), hc, s, windows, truths, sc));
    } else if (e.kind == "exact") {
        tasks.push_back(histogram_task<ExactFpEstimator>("exact", k.exact(), hc, s, windows, truths, sc));
    } else if (e.kind == "cascaded") {
        tasks.push_back(histogram_task<Contenders::CascadedEnsemble>(
            "learned-cascaded", k.cascaded(k.oracle, e.learned_rate), hc, s, windows, truths, sc));
        tasks.push_back(histogram_task<Contenders::CascadedEnsemble>(
            "cascaded-ss", k.cascaded(all_light_oracle(), e.baseline_rate), hc, s, windows, truths, sc));
    } else {
        throw ConfigError("estimator '" + e.kind + "' does not support window sweeps");
    }
    auto rows = run_tasks(tasks, c.threads);
    sort_rows(rows);
    return rows;
}

inline std::vector<MetricRow> run_probability_sweep(const ExperimentConfig& c, const Dataset& data) {
    if (c.sweep.axis != "probability") throw ConfigError("run_probability_sweep needs sweep.axis = probability");
    const auto m = data.stream.size();
    const std::uint64_t W = c.sweep.window == 0 ? m : c.sweep.window;
    if (W > m) throw ConfigError("sweep.window exceeds the stream length");
    const Target target = make_target(c, data);
    const double truth = target.window_truth(W);
    spot_check({{truth, [target, W] { return target.window_recount(W); }}}, c.seed);

    Contenders k{c, data, build_oracle(c, data)};
    const auto hc = histogram_config(c);
    const auto& s = data.stream;
    const auto& e = c.estimator;
    std::vector<Task> tasks;
    using detail::point_task;
    for (double q : c.sweep.probabilities) {
        if (e.kind == "learned-fp") {
            tasks.push_back(point_task<Contenders::LearnedEnsemble>("ssa", k.learned_fp(q), hc, s, W, truth, q));
            tasks.push_back(point_task<Contenders::SubsampleEnsemble>("ss", k.subsample(q), hc, s, W, truth, q));
        } else if (e.kind == "ss") {
            tasks.push_back(point_task<Contenders::SubsampleEnsemble>("ss", k.subsample(q), hc, s, W, truth, q));
        } else {
            tasks.push_back(point_task<Contenders::CascadedEnsemble>("learned-cascaded", k.cascaded(k.oracle, q), hc, s, W, truth, q));
            tasks.push_back(point_task<Contenders::CascadedEnsemble>("cascaded-ss", k.cascaded(all_light_oracle(), q), hc, s, W, truth, q));
        }
    }
    auto rows = run_tasks(tasks, c.threads);
    sort_rows(rows);
    return rows;
}

inline DecayFunction decay_function(const DecayPoint& d) {
    switch (decay_family_from_string(d.family)) {
        case DecayFamily::polynomial: return DecayFunction::polynomial(d.s);
        case DecayFamily::exponential: return DecayFunction::exponential(d.s);
        case DecayFamily::sliding_window: return DecayFunction::sliding_window(d.window);
    }
    throw ConfigError("unknown decay family");
}

inline std::vector<MetricRow> run_decay_sweep(const ExperimentConfig& c, const Dataset& data) {
    if (c.sweep.axis != "decay") throw ConfigError("run_decay_sweep needs sweep.axis = decay");
    const auto& s = data.stream;
    const auto m = s.size();
    const auto n = data.universe;
    const auto& e = c.estimator;
    const double p = e.p;
    const Target target = make_target(c, data);
    auto oracle = e.payload == "exact" ? OraclePtr{} : build_oracle(c, data);

    std::vector<TruthPoint> points;
    std::vector<Task> tasks;
    using detail::decay_task;
    for (const auto& dp : c.sweep.decays) {
        const auto fn = decay_function(dp);
        const auto prm = smoothness_params(fn, c.sweep.epsilon, p, m);
        const double truth = exact_fp(exact_decayed_vector(s, n, fn, m), p);
        points.push_back({truth, [target, fn] { return target.decayed_recount(fn); }});
        const double x = dp.family == "sliding_window" ? static_cast<double>(dp.window) : dp.s;
        const std::string tag = "-" + dp.family;
        const auto seed = c.seed;
        const auto reps = e.repetitions;
        if (e.payload == "exact") {
            tasks.push_back(decay_task<ExactVectorPayload>("td-exact" + tag, fn, prm, [p] { return ExactVectorPayload(p); }, s, truth, x));
        } else if (e.payload == "learned") {
            const double lr = e.learned_rate, br = e.baseline_rate;
            tasks.push_back(decay_task<LearnedVectorPayload>(
                "td-learned" + tag, fn, prm, [=] { return LearnedVectorPayload(oracle, p, lr, seed); }, s, truth, x));
            tasks.push_back(decay_task<LearnedVectorPayload>(
                "td-ss" + tag, fn, prm, [=] { return LearnedVectorPayload(all_light_oracle(), p, br, seed); }, s, truth, x));
        } else {
            tasks.push_back(decay_task<LearnedSketchPayload<AmsSketch>>(
                "td-learned-ams" + tag, fn, prm,
                [=] { return LearnedSketchPayload<AmsSketch>(oracle, AmsSketch(n, reps, seed)); }, s, truth, x));
            tasks.push_back(decay_task<AmsSketch>("td-ams" + tag, fn, prm, [=] { return AmsSketch(n, reps, seed); }, s, truth, x));
        }
    }
    spot_check(points, c.seed);
    auto rows = run_tasks(tasks, c.threads);
    sort_rows(rows);
    return rows;
}

struct RunResult {
    std::vector<MetricRow> rows;
    nlohmann::json metadata;
};

inline RunResult run_experiment(const ExperimentConfig& c) {
    const Dataset data = load_dataset(c);
    RunResult out;
    if (c.sweep.axis == "window")
        out.rows = run_window_sweep(c, data);
    else if (c.sweep.axis == "probability")
        out.rows = run_probability_sweep(c, data);
    else
        out.rows = run_decay_sweep(c, data);
    out.metadata = {{"config", to_json(c)},
                    {"seeds", {{"estimator", c.seed}, {"dataset", c.dataset.seed}, {"oracle", c.oracle.seed}}},
                    {"version", kVersion},
                    {"stream_length", data.stream.size()},
                    {"prefix_length", data.prefix.size()},
                    {"universe", data.universe},
                    {"rows", out.rows.size()}};
    return out;
}

inline std::vector<MetricRow> run_window_sweep(const ExperimentConfig& c) { return run_window_sweep(c, load_dataset(c)); }
inline std::vector<MetricRow> run_probability_sweep(const ExperimentConfig& c) {
    return run_probability_sweep(c, load_dataset(c));
}

}  // namespace lastream::harness
