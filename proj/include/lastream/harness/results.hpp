#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "lastream/error.hpp"

namespace lastream::harness {

struct MetricRow {
    double sweep_value = 0.0;
    double truth = 0.0;
    double estimate = 0.0;
    double ratio = 0.0;
    std::string estimator;
    double wall_ms = 0.0;
    std::uint64_t counters = 0;

    friend bool operator==(const MetricRow& a, const MetricRow& b) {
        auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
        return same(a.sweep_value, b.sweep_value) && same(a.truth, b.truth) && same(a.estimate, b.estimate) &&
               same(a.ratio, b.ratio) && a.estimator == b.estimator && same(a.wall_ms, b.wall_ms) &&
               a.counters == b.counters;
    }
};

/// estimate / truth; 1 when both vanish, NaN when only the truth does.
inline double ratio_of(double estimate, double truth) {
    if (truth > 0.0) return estimate / truth;
    return estimate == 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
}

inline MetricRow make_row(double sweep_value, double truth, double estimate, std::string label, double wall_ms,
                          std::uint64_t counters) {
    return {sweep_value, truth, estimate, ratio_of(estimate, truth), std::move(label), wall_ms, counters};
}

/// Orders rows by (sweep value, estimator) so output does not depend on the
/// order sweep points finished in.
inline void sort_rows(std::vector<MetricRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.sweep_value, a.estimator) < std::tie(b.sweep_value, b.estimator);
    });
}

/// Zeroes wall times: the form compared by determinism checks.
inline std::vector<MetricRow> without_wall_time(std::vector<MetricRow> rows) {
    for (auto& r : rows) r.wall_ms = 0.0;
    return rows;
}

inline constexpr const char* kCsvHeader = "sweep_value,truth,estimate,ratio,estimator,wall_ms,counters";

namespace detail {

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline nlohmann::json num_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline double json_num(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        char wall[32];
        std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
        out << detail::num(r.sweep_value) << ',' << detail::num(r.truth) << ',' << detail::num(r.estimate) << ','
            << detail::num(r.ratio) << ',' << detail::csv_field(r.estimator) << ',' << wall << ',' << r.counters
            << '\n';
    }
}

inline std::string to_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream out;
    write_csv(out, rows);
    return out.str();
}

inline nlohmann::json rows_to_json(const std::vector<MetricRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"sweep_value", detail::num_json(r.sweep_value)},
                       {"truth", detail::num_json(r.truth)},
                       {"estimate", detail::num_json(r.estimate)},
                       {"ratio", detail::num_json(r.ratio)},
                       {"estimator", r.estimator},
                       {"wall_ms", detail::num_json(r.wall_ms)},
                       {"counters", r.counters}});
    return arr;
}

inline std::vector<MetricRow> rows_from_json(const nlohmann::json& arr) {
    if (!arr.is_array()) throw DataError("result document must be a JSON array");
    std::vector<MetricRow> rows;
    try {
        for (const auto& j : arr)
            rows.push_back({detail::json_num(j.at("sweep_value")), detail::json_num(j.at("truth")),
                            detail::json_num(j.at("estimate")), detail::json_num(j.at("ratio")),
                            j.at("estimator").get<std::string>(), detail::json_num(j.at("wall_ms")),
                            j.at("counters").get<std::uint64_t>()});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed result row: ") + e.what());
    }
    return rows;
}

inline std::string sidecar_path(const std::string& path) { return path + ".meta.json"; }

/// Writes rows as CSV or JSON and, next to them, the metadata sidecar.
inline void emit_results(const std::vector<MetricRow>& rows, const std::string& path, const std::string& format,
                         const nlohmann::json& metadata) {
    if (format != "csv" && format != "json") throw ConfigError("unknown output format '" + format + "'");
    {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write '" + path + "'");
        if (format == "csv")
            write_csv(out, rows);
        else
            out << rows_to_json(rows).dump(2) << '\n';
        if (!out) throw DataError("write to '" + path + "' failed");
    }
    std::ofstream meta(sidecar_path(path));
    if (!meta) throw DataError("cannot write '" + sidecar_path(path) + "'");
    meta << metadata.dump(2) << '\n';
}

}  // namespace lastream::harness
