#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lastream/ensemble.hpp"
#include "lastream/error.hpp"
#include "lastream/hash.hpp"
#include "lastream/oracle.hpp"
#include "lastream/stream.hpp"

namespace lastream::harness {

inline constexpr const char* kVersion = "0.1.0";

struct DatasetConfig {
    std::string source = "planted";  ///< planted | binomial | file
    std::uint64_t n = 10000;
    std::uint64_t m = 100000;
    double q = 25;
    double heavy_fraction = 0.5;
    std::optional<double> shift_q;
    std::optional<std::uint64_t> shift_at;
    std::uint64_t seed = 42;
    std::string path;
    std::string format = "auto";  ///< auto | ipv4 | integer
};

struct OracleConfig {
    std::string kind = "exact";  ///< exact | prefix | file | none
    std::optional<double> p;     ///< defaults to the estimator's p
    std::uint64_t prefix = 10000;
    std::size_t depth = 5;
    std::size_t width = 300;
    std::string rule = "l2";
    double epsilon = 0.1;
    std::size_t top_k = 26;
    std::size_t candidate_cap = 0;
    std::string path;
    double noise = 0.0;
    std::uint64_t seed = 7;
};

struct EstimatorConfig {
    std::string kind = "learned-fp";  ///< learned-fp | ss | ams | exact | cascaded | time-decay
    double p = 3;
    double k = 3;            // cascaded only
    std::uint64_t cols = 1;  // cascaded only: item = row * cols + col
    double learned_rate = 0.01;
    double baseline_rate = 0.1;
    std::size_t copies = 15;
    std::size_t groups = 3;
    std::string aggregation = "mean_of_means";
    std::size_t repetitions = 11;  // ams
    std::size_t heavy_cap = 0;
    std::string hash = "poly";
    std::string payload = "exact";  ///< time-decay: exact | learned | ams
};

struct HistogramSection {
    double beta = 0.05;
    std::size_t cap = 0;
    std::uint64_t stride = 1;
};

struct DecayPoint {
    std::string family = "polynomial";
    double s = 1.0;
    std::uint64_t window = 0;
};

struct SweepConfig {
    std::string axis = "window";  ///< window | probability | decay
    std::optional<std::vector<std::uint64_t>> windows;
    std::vector<double> window_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> probabilities;
    std::uint64_t window = 0;  ///< probability sweep window; 0 means m
    std::vector<DecayPoint> decays;
    double epsilon = 0.2;
    bool scaled = true;
};

struct OutputConfig {
    std::string path;
    std::string format = "csv";
};

struct ExperimentConfig {
    DatasetConfig dataset;
    OracleConfig oracle;
    EstimatorConfig estimator;
    HistogramSection histogram;
    SweepConfig sweep;
    std::uint64_t seed = 100;
    std::size_t threads = 1;
    OutputConfig output;
};

namespace detail {

using nlohmann::json;

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw ConfigError("unknown field '" + where + "." + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("field '" + where + "." + key + "' has the wrong type");
    }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v, where);
    out = v;
}

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

inline bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
    for (auto o : opts)
        if (v == o) return true;
    return false;
}

}  // namespace detail

inline Aggregation aggregation_from_string(const std::string& s) {
    if (s == "median") return Aggregation::median;
    if (s == "mean") return Aggregation::mean;
    if (s == "mean_of_means") return Aggregation::mean_of_means;
    throw ConfigError("unknown aggregation '" + s + "'");
}

inline MembershipHash membership_from_string(const std::string& s) {
    if (s == "poly") return MembershipHash::poly;
    if (s == "sha256") return MembershipHash::sha256;
    throw ConfigError("unknown membership hash '" + s + "'");
}

inline TraceFormat trace_format_from_string(const std::string& s) {
    if (s == "auto") return TraceFormat::automatic;
    if (s == "ipv4") return TraceFormat::ipv4;
    if (s == "integer") return TraceFormat::integer;
    throw ConfigError("unknown trace format '" + s + "'");
}

/// Range and consistency checks; throws ConfigError.
inline void validate(const ExperimentConfig& c) {
    using detail::check;
    using detail::one_of;
    const auto& d = c.dataset;
    check(one_of(d.source, {"planted", "binomial", "file"}), "dataset.source must be planted, binomial or file");
    trace_format_from_string(d.format);
    if (d.source == "file") {
        check(!d.path.empty(), "dataset.path is required for file datasets");
        check(std::filesystem::exists(d.path), "dataset file '" + d.path + "' does not exist");
    } else {
        check(d.n >= 1 && d.m >= 1, "dataset.n and dataset.m must be >= 1");
        check(d.q >= 0 && binomial_success(d.n, d.q) <= 1.0, "dataset.q must satisfy 0 <= 2q/sqrt(n) <= 1");
        if (d.shift_q) check(*d.shift_q >= 0 && binomial_success(d.n, *d.shift_q) <= 1.0, "dataset.shift_q out of range");
        check(d.heavy_fraction >= 0 && d.heavy_fraction <= 1, "dataset.heavy_fraction must lie in [0, 1]");
        if (d.source == "planted") check(d.q == std::floor(d.q) && d.q <= static_cast<double>(d.n), "planted q must be an integer <= n");
    }

    const auto& o = c.oracle;
    check(one_of(o.kind, {"exact", "prefix", "file", "none"}), "oracle.kind must be exact, prefix, file or none");
    check(o.noise >= 0 && o.noise <= 1, "oracle.noise must lie in [0, 1]");
    if (o.p) check(*o.p >= 1, "oracle.p must be >= 1");
    if (o.kind == "prefix") {
        check(o.prefix >= 1, "oracle.prefix must be >= 1");
        check(d.source == "file" || o.prefix < d.m, "oracle.prefix must be shorter than the stream");
        check(o.depth >= 1 && o.width >= 1, "oracle.depth and oracle.width must be >= 1");
        check(one_of(o.rule, {"l2", "l1", "top-k", "top_k", "fp"}), "unknown oracle.rule '" + o.rule + "'");
    }
    if (o.kind == "file") {
        check(!o.path.empty(), "oracle.path is required for file oracles");
        check(std::filesystem::exists(o.path), "oracle file '" + o.path + "' does not exist");
    }

    const auto& e = c.estimator;
    check(one_of(e.kind, {"learned-fp", "ss", "ams", "exact", "cascaded", "time-decay"}),
          "estimator.kind must be learned-fp, ss, ams, exact, cascaded or time-decay");
    check(e.p >= 1, "estimator.p must be >= 1");
    if (e.kind == "ams") check(e.p == 2, "the ams estimator only supports p = 2");
    if (e.kind == "cascaded") {
        check(e.k >= e.p && e.p >= 2, "cascaded needs k >= p >= 2");
        check(e.cols >= 1, "estimator.cols must be >= 1");
    }
    check(e.learned_rate > 0 && e.learned_rate <= 1, "estimator.learned_rate must lie in (0, 1]");
    check(e.baseline_rate > 0 && e.baseline_rate <= 1, "estimator.baseline_rate must lie in (0, 1]");
    check(e.copies >= 1 && e.groups >= 1 && e.copies % e.groups == 0, "estimator.copies must split into estimator.groups");
    check(e.repetitions >= 1, "estimator.repetitions must be >= 1");
    aggregation_from_string(e.aggregation);
    membership_from_string(e.hash);
    check(one_of(e.payload, {"exact", "learned", "ams"}), "estimator.payload must be exact, learned or ams");
    if (e.kind == "time-decay" && e.payload == "ams") check(e.p == 2, "ams payloads only support p = 2");

    const auto& h = c.histogram;
    check(h.beta >= 0 && h.beta < 1, "histogram.beta must lie in [0, 1)");
    check(h.cap == 0 || h.cap >= 2, "histogram.cap must be 0 or >= 2");
    check(h.stride >= 1, "histogram.stride must be >= 1");

    const auto& s = c.sweep;
    check(one_of(s.axis, {"window", "probability", "decay"}), "sweep.axis must be window, probability or decay");
    const bool has_windows = s.windows && !s.windows->empty();
    if (s.axis != "window") check(!has_windows, "sweep.windows given for a " + s.axis + " sweep");
    if (s.axis != "probability") check(s.probabilities.empty(), "sweep.probabilities given for a " + s.axis + " sweep");
    if (s.axis != "decay") check(s.decays.empty(), "sweep.decays given for a " + s.axis + " sweep");
    check((s.axis == "decay") == (e.kind == "time-decay"), "decay sweeps go with estimator.kind time-decay and only with it");
    for (double f : s.window_fractions) check(f > 0 && f <= 1, "sweep.window_fractions must lie in (0, 1]");
    if (s.windows)
        for (auto w : *s.windows) check(w >= 1, "sweep.windows must be >= 1");
    for (double q : s.probabilities) check(q > 0 && q <= 1, "sweep.probabilities must lie in (0, 1]");
    if (s.axis == "probability") check(one_of(e.kind, {"learned-fp", "ss", "cascaded"}), "probability sweeps need a sampling estimator");
    for (const auto& dp : s.decays) {
        check(one_of(dp.family, {"polynomial", "exponential", "sliding_window"}), "unknown decay family '" + dp.family + "'");
        if (dp.family == "polynomial") check(dp.s > 0, "polynomial decay needs s > 0");
        if (dp.family == "exponential") check(dp.s > 0 && dp.s < 1, "exponential decay needs s in (0, 1)");
        if (dp.family == "sliding_window") check(dp.window >= 1, "sliding_window decay needs window >= 1");
    }
    check(s.epsilon > 0 && s.epsilon < 1, "sweep.epsilon must lie in (0, 1)");
    check(c.threads >= 1, "threads must be >= 1");
    check(detail::one_of(c.output.format, {"csv", "json"}), "output.format must be csv or json");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::only_keys;
    using detail::read;
    ExperimentConfig c;
    only_keys(j, "config", {"dataset", "oracle", "estimator", "histogram", "sweep", "seed", "threads", "output"});
    read(j, "seed", c.seed, "config");
    read(j, "threads", c.threads, "config");

    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        only_keys(d, "dataset", {"source", "n", "m", "q", "heavy_fraction", "shift_q", "shift_at", "seed", "path", "format"});
        auto& o = c.dataset;
        read(d, "source", o.source, "dataset");
        read(d, "n", o.n, "dataset");
        read(d, "m", o.m, "dataset");
        read(d, "q", o.q, "dataset");
        read(d, "heavy_fraction", o.heavy_fraction, "dataset");
        read(d, "shift_q", o.shift_q, "dataset");
        read(d, "shift_at", o.shift_at, "dataset");
        read(d, "seed", o.seed, "dataset");
        read(d, "path", o.path, "dataset");
        read(d, "format", o.format, "dataset");
    }
    if (j.contains("oracle")) {
        const auto& d = j["oracle"];
        only_keys(d, "oracle", {"kind", "p", "prefix", "depth", "width", "rule", "epsilon", "top_k", "candidate_cap", "path",
                                "noise", "seed"});
        auto& o = c.oracle;
        read(d, "kind", o.kind, "oracle");
        read(d, "p", o.p, "oracle");
        read(d, "prefix", o.prefix, "oracle");
        read(d, "depth", o.depth, "oracle");
        read(d, "width", o.width, "oracle");
        read(d, "rule", o.rule, "oracle");
        read(d, "epsilon", o.epsilon, "oracle");
        read(d, "top_k", o.top_k, "oracle");
        read(d, "candidate_cap", o.candidate_cap, "oracle");
        read(d, "path", o.path, "oracle");
        read(d, "noise", o.noise, "oracle");
        read(d, "seed", o.seed, "oracle");
    }
    if (j.contains("estimator")) {
        const auto& d = j["estimator"];
        only_keys(d, "estimator", {"kind", "p", "k", "cols", "learned_rate", "baseline_rate", "copies", "groups", "aggregation",
                                   "repetitions", "heavy_cap", "hash", "payload"});
        auto& o = c.estimator;
        read(d, "kind", o.kind, "estimator");
        read(d, "p", o.p, "estimator");
        read(d, "k", o.k, "estimator");
        read(d, "cols", o.cols, "estimator");
        read(d, "learned_rate", o.learned_rate, "estimator");
        read(d, "baseline_rate", o.baseline_rate, "estimator");
        read(d, "copies", o.copies, "estimator");
        read(d, "groups", o.groups, "estimator");
        read(d, "aggregation", o.aggregation, "estimator");
        read(d, "repetitions", o.repetitions, "estimator");
        read(d, "heavy_cap", o.heavy_cap, "estimator");
        read(d, "hash", o.hash, "estimator");
        read(d, "payload", o.payload, "estimator");
    }
    if (j.contains("histogram")) {
        const auto& d = j["histogram"];
        only_keys(d, "histogram", {"beta", "cap", "stride"});
        read(d, "beta", c.histogram.beta, "histogram");
        read(d, "cap", c.histogram.cap, "histogram");
        read(d, "stride", c.histogram.stride, "histogram");
    }
    if (j.contains("sweep")) {
        const auto& d = j["sweep"];
        only_keys(d, "sweep", {"axis", "windows", "window_fractions", "probabilities", "window", "decays", "epsilon", "scaled"});
        auto& o = c.sweep;
        read(d, "axis", o.axis, "sweep");
        read(d, "windows", o.windows, "sweep");
        read(d, "window_fractions", o.window_fractions, "sweep");
        read(d, "probabilities", o.probabilities, "sweep");
        read(d, "window", o.window, "sweep");
        read(d, "epsilon", o.epsilon, "sweep");
        read(d, "scaled", o.scaled, "sweep");
        if (d.contains("decays")) {
            if (!d["decays"].is_array()) throw ConfigError("'sweep.decays' must be an array");
            for (const auto& e : d["decays"]) {
                only_keys(e, "sweep.decays[]", {"family", "s", "window"});
                DecayPoint dp;
                read(e, "family", dp.family, "sweep.decays[]");
                read(e, "s", dp.s, "sweep.decays[]");
                read(e, "window", dp.window, "sweep.decays[]");
                o.decays.push_back(dp);
            }
        }
    }
    if (j.contains("output")) {
        const auto& d = j["output"];
        only_keys(d, "output", {"path", "format"});
        read(d, "path", c.output.path, "output");
        read(d, "format", c.output.format, "output");
    }
    validate(c);
    return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json decays = nlohmann::json::array();
    for (const auto& d : c.sweep.decays) decays.push_back({{"family", d.family}, {"s", d.s}, {"window", d.window}});
    const auto& d = c.dataset;
    const auto& o = c.oracle;
    const auto& e = c.estimator;
    return {
        {"dataset",
         {{"source", d.source}, {"n", d.n}, {"m", d.m}, {"q", d.q}, {"heavy_fraction", d.heavy_fraction},
          {"shift_q", d.shift_q ? nlohmann::json(*d.shift_q) : nlohmann::json()},
          {"shift_at", d.shift_at ? nlohmann::json(*d.shift_at) : nlohmann::json()},
          {"seed", d.seed}, {"path", d.path}, {"format", d.format}}},
        {"oracle",
         {{"kind", o.kind}, {"p", o.p ? nlohmann::json(*o.p) : nlohmann::json()}, {"prefix", o.prefix},
          {"depth", o.depth}, {"width", o.width}, {"rule", o.rule}, {"epsilon", o.epsilon}, {"top_k", o.top_k},
          {"candidate_cap", o.candidate_cap}, {"path", o.path}, {"noise", o.noise}, {"seed", o.seed}}},
        {"estimator",
         {{"kind", e.kind}, {"p", e.p}, {"k", e.k}, {"cols", e.cols}, {"learned_rate", e.learned_rate},
          {"baseline_rate", e.baseline_rate}, {"copies", e.copies}, {"groups", e.groups},
          {"aggregation", e.aggregation}, {"repetitions", e.repetitions}, {"heavy_cap", e.heavy_cap},
          {"hash", e.hash}, {"payload", e.payload}}},
        {"histogram", {{"beta", c.histogram.beta}, {"cap", c.histogram.cap}, {"stride", c.histogram.stride}}},
        {"sweep",
         {{"axis", c.sweep.axis},
          {"windows", c.sweep.windows ? nlohmann::json(*c.sweep.windows) : nlohmann::json()},
          {"window_fractions", c.sweep.window_fractions}, {"probabilities", c.sweep.probabilities},
          {"window", c.sweep.window}, {"decays", decays}, {"epsilon", c.sweep.epsilon}, {"scaled", c.sweep.scaled}}},
        {"seed", c.seed},
        {"threads", c.threads},
        {"output", {{"path", c.output.path}, {"format", c.output.format}}},
    };
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace lastream::harness
