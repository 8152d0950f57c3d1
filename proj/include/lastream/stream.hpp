#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lastream/error.hpp"

namespace lastream {

/// One insertion: item i_t arrives at 1-based step t with increment weight.
struct StreamUpdate {
    std::uint64_t timestamp = 0;
    std::uint64_t item = 0;
    double weight = 1.0;

    friend bool operator==(const StreamUpdate&, const StreamUpdate&) = default;
};

using Stream = std::vector<StreamUpdate>;

struct MatrixStreamUpdate {
    std::uint64_t timestamp = 0;
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    double weight = 1.0;

    friend bool operator==(const MatrixStreamUpdate&, const MatrixStreamUpdate&) = default;
};

using MatrixStream = std::vector<MatrixStreamUpdate>;

/// Row-major key of entry (row, col) in an n x d matrix.
inline std::uint64_t matrix_key(std::uint64_t row, std::uint64_t col, std::uint64_t d) {
    return row * d + col;
}

/// Flattens a matrix stream onto the universe [0, n*d) so matrix estimators
/// can sit behind the same single-item interfaces as vector estimators.
inline Stream flatten_matrix_stream(const MatrixStream& ms, std::uint64_t n, std::uint64_t d) {
    Stream out;
    out.reserve(ms.size());
    for (const auto& u : ms) {
        detail::require(u.row < n && u.col < d, "matrix update out of bounds");
        out.push_back({u.timestamp, matrix_key(u.row, u.col, d), u.weight});
    }
    return out;
}

/// Per-item non-negative counts over a universe of size n. Dense storage for
/// universes up to 2^20, hashed storage above.
class FrequencyVector {
public:
    static constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 20;

    FrequencyVector() : FrequencyVector(0) {}
    explicit FrequencyVector(std::uint64_t universe) : universe_(universe) {
        if (universe_ <= kDenseLimit) dense_.assign(universe_, 0.0);
    }

    std::uint64_t universe() const noexcept { return universe_; }
    bool is_dense() const noexcept { return universe_ <= kDenseLimit; }

    double operator[](std::uint64_t i) const {
        if (is_dense()) return i < dense_.size() ? dense_[i] : 0.0;
        auto it = sparse_.find(i);
        return it == sparse_.end() ? 0.0 : it->second;
    }

    void add(std::uint64_t i, double w) {
        detail::require(i < universe_, "item outside universe");
        if (is_dense())
            dense_[i] += w;
        else
            sparse_[i] += w;
    }

    /// Calls fn(item, value) for every coordinate that has been touched.
    template <class Fn>
    void for_each_nonzero(Fn&& fn) const {
        if (is_dense()) {
            for (std::uint64_t i = 0; i < dense_.size(); ++i)
                if (dense_[i] != 0.0) fn(i, dense_[i]);
        } else {
            for (const auto& [i, v] : sparse_)
                if (v != 0.0) fn(i, v);
        }
    }

    /// Number of non-zero coordinates.
    std::size_t support_size() const {
        std::size_t k = 0;
        for_each_nonzero([&](std::uint64_t, double) { ++k; });
        return k;
    }

    double total() const {
        double s = 0.0;
        for_each_nonzero([&](std::uint64_t, double v) { s += v; });
        return s;
    }

    friend bool operator==(const FrequencyVector& a, const FrequencyVector& b) {
        if (a.universe_ != b.universe_) return false;
        bool eq = true;
        a.for_each_nonzero([&](std::uint64_t i, double v) { eq = eq && b[i] == v; });
        b.for_each_nonzero([&](std::uint64_t i, double v) { eq = eq && a[i] == v; });
        return eq;
    }

private:
    std::uint64_t universe_;
    std::vector<double> dense_;
    std::unordered_map<std::uint64_t, double> sparse_;
};

// ---------------------------------------------------------------------------
// Synthetic generators

struct BinomialStreamParams {
    std::uint64_t n = 10000;  ///< universe size
    std::uint64_t m = 100000; ///< stream length
    double q = 25.0;          ///< target heavy count; success probability 2q/sqrt(n)
    std::optional<double> shift_q;          ///< success parameter after the shift
    std::optional<std::uint64_t> shift_at;  ///< first shifted step; defaults to floor(m/2)
    std::uint64_t seed = 0;
};

inline double binomial_success(std::uint64_t n, double q) {
    return 2.0 * q / std::sqrt(static_cast<double>(n));
}

/// Items drawn i.i.d. from Binomial(n - 1, 2q/sqrt(n)); with shift_q set, the
/// success parameter switches to 2q'/sqrt(n) from step shift_at onwards.
inline Stream generate_binomial_stream(const BinomialStreamParams& prm) {
    if (prm.n < 1) throw ContractViolation("universe size must be >= 1");
    if (prm.q < 0.0) throw ContractViolation("q must be >= 0");
    const double p0 = binomial_success(prm.n, prm.q);
    if (p0 > 1.0) throw ContractViolation("2q/sqrt(n) must be <= 1");
    double p1 = p0;
    if (prm.shift_q) {
        if (*prm.shift_q < 0.0) throw ContractViolation("shift q must be >= 0");
        p1 = binomial_success(prm.n, *prm.shift_q);
        if (p1 > 1.0) throw ContractViolation("2q'/sqrt(n) must be <= 1");
    }
    const std::uint64_t shift_at = prm.shift_at.value_or(prm.m / 2);

    std::mt19937_64 gen(prm.seed);
    const auto trials = static_cast<std::int64_t>(prm.n - 1);
    std::binomial_distribution<std::int64_t> before(trials, p0);
    std::binomial_distribution<std::int64_t> after(trials, p1);

    Stream out;
    out.reserve(prm.m);
    for (std::uint64_t t = 1; t <= prm.m; ++t) {
        const bool shifted = prm.shift_q.has_value() && t >= std::max<std::uint64_t>(shift_at, 1);
        const std::int64_t v = shifted ? after(gen) : before(gen);
        out.push_back({t, static_cast<std::uint64_t>(v), 1.0});
    }
    return out;
}

struct PlantedStreamParams {
    std::uint64_t n = 10000;
    std::uint64_t m = 100000;
    std::uint64_t q = 25;          ///< number of planted heavy items
    double heavy_fraction = 0.5;   ///< share of updates that go to planted items
    std::uint64_t seed = 0;
};

/// Skewed mixture: with probability heavy_fraction an update picks one of q
/// planted items uniformly, otherwise it is a Binomial(n - 1, 2q/sqrt(n))
/// background draw. Planted ids are distinct and drawn uniformly from [0, n).
inline Stream generate_planted_stream(const PlantedStreamParams& prm,
                                      std::vector<std::uint64_t>* planted_out = nullptr) {
    if (prm.n < 1) throw ContractViolation("universe size must be >= 1");
    if (prm.q > prm.n) throw ContractViolation("cannot plant more items than the universe holds");
    if (!(prm.heavy_fraction >= 0.0 && prm.heavy_fraction <= 1.0))
        throw ContractViolation("heavy_fraction must lie in [0, 1]");
    const double pb = binomial_success(prm.n, static_cast<double>(prm.q));
    if (pb > 1.0) throw ContractViolation("2q/sqrt(n) must be <= 1");

    std::mt19937_64 gen(prm.seed);
    std::vector<std::uint64_t> planted;
    {
        std::unordered_map<std::uint64_t, bool> used;
        std::uniform_int_distribution<std::uint64_t> pick(0, prm.n - 1);
        while (planted.size() < prm.q) {
            const auto id = pick(gen);
            if (used.emplace(id, true).second) planted.push_back(id);
        }
    }
    std::binomial_distribution<std::int64_t> background(static_cast<std::int64_t>(prm.n - 1), pb);
    std::bernoulli_distribution coin(prm.heavy_fraction);
    std::uniform_int_distribution<std::size_t> which(0, planted.empty() ? 0 : planted.size() - 1);

    Stream out;
    out.reserve(prm.m);
    for (std::uint64_t t = 1; t <= prm.m; ++t) {
        std::uint64_t item;
        if (!planted.empty() && coin(gen))
            item = planted[which(gen)];
        else
            item = static_cast<std::uint64_t>(background(gen));
        out.push_back({t, item, 1.0});
    }
    if (planted_out) *planted_out = planted;
    return out;
}

// ---------------------------------------------------------------------------
// Text traces

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> parse_ipv4(std::string_view s) {
    std::uint64_t value = 0;
    int parts = 0;
    while (true) {
        const auto dot = s.find('.');
        const auto part = s.substr(0, dot);
        if (part.empty() || part.size() > 3) return std::nullopt;
        auto octet = parse_u64(part);
        if (!octet || *octet > 255) return std::nullopt;
        value = value * 256 + *octet;
        ++parts;
        if (dot == std::string_view::npos) break;
        s.remove_prefix(dot + 1);
    }
    if (parts != 4) return std::nullopt;
    return value;
}

}  // namespace detail

/// Parses one identifier: a dotted-quad IPv4 (mapped to its 32-bit value) or
/// a non-negative decimal integer.
inline std::optional<std::uint64_t> parse_identifier(std::string_view token) {
    token = detail::trim(token);
    if (token.find('.') != std::string_view::npos) return detail::parse_ipv4(token);
    return detail::parse_u64(token);
}

enum class TraceFormat { automatic, ipv4, integer };

/// Reads one record per line; '#' lines and blank lines are skipped and
/// timestamps are assigned 1..m in record order.
inline Stream parse_stream(std::istream& in, TraceFormat format = TraceFormat::automatic) {
    Stream out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::optional<std::uint64_t> v;
        switch (format) {
            case TraceFormat::automatic: v = parse_identifier(body); break;
            case TraceFormat::ipv4: v = detail::parse_ipv4(body); break;
            case TraceFormat::integer: v = detail::parse_u64(body); break;
        }
        if (!v) throw ParseError(lineno, "malformed record '" + std::string(body) + "'");
        out.push_back({out.size() + 1, *v, 1.0});
    }
    return out;
}

inline Stream parse_stream_file(const std::string& path, TraceFormat format) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stream file '" + path + "'");
    return parse_stream(in, format);
}

inline Stream parse_ip_stream(const std::string& path) { return parse_stream_file(path, TraceFormat::ipv4); }
inline Stream parse_integer_stream(const std::string& path) {
    return parse_stream_file(path, TraceFormat::integer);
}

/// Smallest universe size that contains every item of the stream.
inline std::uint64_t universe_of(const Stream& s) {
    std::uint64_t n = 0;
    for (const auto& u : s) n = std::max(n, u.item + 1);
    return n;
}

/// Re-bases the timestamps of a contiguous slice to start at 1.
inline Stream rebase(const Stream& s, std::size_t from, std::size_t to) {
    Stream out;
    out.reserve(to > from ? to - from : 0);
    for (std::size_t k = from; k < to && k < s.size(); ++k)
        out.push_back({out.size() + 1, s[k].item, s[k].weight});
    return out;
}

}  // namespace lastream
