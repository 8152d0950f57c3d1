#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lastream/error.hpp"
#include "lastream/hash.hpp"
#include "lastream/math.hpp"
#include "lastream/sketches.hpp"
#include "lastream/stream.hpp"

namespace lastream {

/// "Is item heavy in the stream suffix [suffix_start : m]?"
struct OracleQuery {
    std::uint64_t item = 0;
    std::uint64_t suffix_start = 1;
};

/// Heavy-hitter oracle. Implementations are immutable after construction and
/// answer deterministically, so one instance can be shared by any number of
/// estimators.
class HeavyHitterOracle {
public:
    virtual ~HeavyHitterOracle() = default;
    virtual bool is_heavy(const OracleQuery& q) const = 0;
    bool is_heavy(std::uint64_t item, std::uint64_t suffix_start) const {
        return is_heavy(OracleQuery{item, suffix_start});
    }
    /// False when every answer ignores suffix_start.
    virtual bool suffix_dependent() const { return false; }
};

using OraclePtr = std::shared_ptr<const HeavyHitterOracle>;

class ConstantOracle final : public HeavyHitterOracle {
public:
    explicit ConstantOracle(bool answer) : answer_(answer) {}
    using HeavyHitterOracle::is_heavy;
    bool is_heavy(const OracleQuery&) const override { return answer_; }

private:
    bool answer_;
};

inline OraclePtr all_heavy_oracle() { return std::make_shared<ConstantOracle>(true); }
inline OraclePtr all_light_oracle() { return std::make_shared<ConstantOracle>(false); }

/// Offline ground-truth oracle over a fully known stream with timestamps 1..m.
/// Item i is heavy for suffix t iff x(t:m)_i^p >= factor * ||x(t:m)||_p^p.
/// Suffix masses for every t and per-item suffix counts (binary search over
/// the item's update times) are precomputed, O(m) memory.
class ExactOracle final : public HeavyHitterOracle {
public:
    ExactOracle(const Stream& stream, double p, double factor) : p_(p), factor_(factor) {
        detail::require(p >= 1.0, "p must be >= 1");
        m_ = stream.size();
        for (std::size_t k = 0; k < stream.size(); ++k)
            detail::require(stream[k].timestamp == k + 1, "exact oracle needs timestamps 1..m");

        suffix_fp_.assign(m_ + 2, 0.0);
        std::unordered_map<std::uint64_t, double> c;
        for (std::size_t k = m_; k-- > 0;) {
            const auto& u = stream[k];
            double& ci = c[u.item];
            suffix_fp_[k + 1] = suffix_fp_[k + 2] + abs_pow(ci + u.weight, p_) - abs_pow(ci, p_);
            ci += u.weight;
        }
        for (const auto& u : stream) {
            auto& h = history_[u.item];
            h.times.push_back(u.timestamp);
            h.cumulative.push_back((h.cumulative.empty() ? 0.0 : h.cumulative.back()) + u.weight);
        }
    }

    using HeavyHitterOracle::is_heavy;
    bool is_heavy(const OracleQuery& q) const override {
        detail::require(q.suffix_start >= 1, "suffix_start must be >= 1");
        if (q.suffix_start > m_) return false;
        const double x = suffix_count(q.item, q.suffix_start);
        if (x <= 0.0) return false;
        return abs_pow(x, p_) >= factor_ * suffix_fp_[q.suffix_start];
    }

    bool suffix_dependent() const override { return true; }

    /// ||x(t:m)||_p^p; zero for t > m.
    double suffix_mass(std::uint64_t t) const {
        detail::require(t >= 1, "suffix_start must be >= 1");
        return t > m_ ? 0.0 : suffix_fp_[t];
    }

    double suffix_count(std::uint64_t item, std::uint64_t t) const {
        auto it = history_.find(item);
        if (it == history_.end()) return 0.0;
        const auto& h = it->second;
        const auto pos = std::lower_bound(h.times.begin(), h.times.end(), t) - h.times.begin();
        const double before = pos == 0 ? 0.0 : h.cumulative[static_cast<std::size_t>(pos) - 1];
        return h.cumulative.back() - before;
    }

    /// Sorted heavy set for suffix t.
    std::vector<std::uint64_t> heavy_set(std::uint64_t t) const {
        std::vector<std::uint64_t> out;
        for (const auto& [item, h] : history_)
            if (is_heavy({item, t})) out.push_back(item);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::uint64_t length() const noexcept { return m_; }
    double factor() const noexcept { return factor_; }
    double p() const noexcept { return p_; }

private:
    struct History {
        std::vector<std::uint64_t> times;
        std::vector<double> cumulative;
    };

    double p_;
    double factor_;
    std::uint64_t m_ = 0;
    std::vector<double> suffix_fp_;
    std::unordered_map<std::uint64_t, History> history_;
};

/// F_p rule: |x_i|^p >= ||x||_p^p / sqrt(n).
inline std::shared_ptr<const ExactOracle> exact_oracle(const Stream& stream, std::uint64_t universe, double p) {
    return std::make_shared<ExactOracle>(stream, p, 1.0 / std::sqrt(static_cast<double>(universe)));
}

/// Rectangle rule on [Delta]^d: |x_i|^p >= ||x||_p^p / Delta^(d/2). The stream
/// carries flattened points.
inline std::shared_ptr<const ExactOracle> exact_rectangle_oracle(const Stream& flattened, std::uint64_t delta,
                                                                 std::uint64_t dims, double p) {
    return std::make_shared<ExactOracle>(flattened, p,
                                         std::pow(static_cast<double>(delta), -static_cast<double>(dims) / 2.0));
}

/// Cascaded rule: |X_ij|^p >= ||X||_p^p / (d^(1/2) n^(1 - p/(2k))), asked about
/// the flattened key row * d + col.
inline std::shared_ptr<const ExactOracle> exact_cascaded_oracle(const MatrixStream& ms, std::uint64_t n,
                                                                std::uint64_t d, double k, double p) {
    detail::require(k >= p && p >= 2.0, "cascaded oracle requires k >= p >= 2");
    const double denom = std::sqrt(static_cast<double>(d)) * std::pow(static_cast<double>(n), 1.0 - p / (2.0 * k));
    return std::make_shared<ExactOracle>(flatten_matrix_stream(ms, n, d), p, 1.0 / denom);
}

/// Membership in a fixed item set, optionally keyed by suffix start: the
/// section with the largest start <= t answers, and the unsectioned set
/// answers when no section applies.
class SetOracle final : public HeavyHitterOracle {
public:
    SetOracle() = default;
    explicit SetOracle(std::set<std::uint64_t> items) : default_(std::move(items)) {}
    SetOracle(std::set<std::uint64_t> items, std::map<std::uint64_t, std::set<std::uint64_t>> sections)
        : default_(std::move(items)), sections_(std::move(sections)) {}

    using HeavyHitterOracle::is_heavy;
    bool is_heavy(const OracleQuery& q) const override { return set_for(q.suffix_start).contains(q.item); }
    bool suffix_dependent() const override { return !sections_.empty(); }

    const std::set<std::uint64_t>& set_for(std::uint64_t t) const {
        auto it = sections_.upper_bound(t);
        if (it == sections_.begin()) return default_;
        return std::prev(it)->second;
    }

    const std::set<std::uint64_t>& items() const noexcept { return default_; }
    const std::map<std::uint64_t, std::set<std::uint64_t>>& sections() const noexcept { return sections_; }

private:
    std::set<std::uint64_t> default_;
    std::map<std::uint64_t, std::set<std::uint64_t>> sections_;
};

/// Oracle file: one identifier (decimal or dotted-quad IPv4) per line, '#'
/// comments, and optional "@t <timestamp>" headers opening per-suffix sets.
inline SetOracle read_oracle(std::istream& in) {
    std::set<std::uint64_t> base;
    std::map<std::uint64_t, std::set<std::uint64_t>> sections;
    std::set<std::uint64_t>* current = &base;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (body.front() == '@') {
            body.remove_prefix(1);
            if (body.size() < 2 || body.front() != 't' || (body[1] != ' ' && body[1] != '\t'))
                throw ParseError(lineno, "expected '@t <timestamp>'");
            auto t = detail::parse_u64(detail::trim(body.substr(1)));
            if (!t || *t < 1) throw ParseError(lineno, "bad section timestamp");
            current = &sections[*t];
            continue;
        }
        auto id = parse_identifier(body);
        if (!id) throw ParseError(lineno, "malformed identifier '" + std::string(body) + "'");
        current->insert(*id);
    }
    return SetOracle(std::move(base), std::move(sections));
}

inline std::shared_ptr<const SetOracle> file_oracle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open oracle file '" + path + "'");
    return std::make_shared<SetOracle>(read_oracle(in));
}

inline void write_oracle(std::ostream& out, const std::set<std::uint64_t>& items,
                         const std::map<std::uint64_t, std::set<std::uint64_t>>& sections = {}) {
    out << "# heavy-hitter oracle\n";
    for (auto i : items) out << i << '\n';
    for (const auto& [t, s] : sections) {
        out << "@t " << t << '\n';
        for (auto i : s) out << i << '\n';
    }
}

inline void write_oracle(std::ostream& out, const SetOracle& o) { write_oracle(out, o.items(), o.sections()); }

/// Exports the exact oracle's heavy sets at the requested suffix starts.
inline void write_oracle(std::ostream& out, const ExactOracle& o, const std::vector<std::uint64_t>& starts) {
    std::map<std::uint64_t, std::set<std::uint64_t>> sections;
    for (auto t : starts) {
        auto hs = o.heavy_set(t);
        sections[t] = std::set<std::uint64_t>(hs.begin(), hs.end());
    }
    write_oracle(out, {}, sections);
}

/// Flips the inner oracle's answer for item i iff a seeded hash of i falls
/// below delta. The flip is per coordinate, so repeated queries agree.
class NoisyOracle final : public HeavyHitterOracle {
public:
    NoisyOracle(OraclePtr inner, double delta, std::uint64_t seed)
        : inner_(std::move(inner)), delta_(delta), hash_(seed, PolyHash::kPrime) {
        detail::require(inner_ != nullptr, "noisy oracle needs an inner oracle");
        detail::require(delta >= 0.0 && delta <= 1.0, "delta must lie in [0, 1]");
    }

    bool flipped(std::uint64_t item) const { return hash_.unit(item) < delta_; }
    using HeavyHitterOracle::is_heavy;
    bool is_heavy(const OracleQuery& q) const override { return inner_->is_heavy(q) != flipped(q.item); }
    bool suffix_dependent() const override { return inner_->suffix_dependent(); }

private:
    OraclePtr inner_;
    double delta_;
    PolyHash hash_;
};

inline OraclePtr noisy_wrap(OraclePtr inner, double delta, std::uint64_t seed) {
    return std::make_shared<NoisyOracle>(std::move(inner), delta, seed);
}

enum class ExtractionRule {
    l2,     ///< estimate >= eps * sqrt(F2 estimate)
    l1,     ///< estimate >= eps * prefix length (total weight)
    top_k,  ///< the top_k largest estimates
    fp,     ///< estimate^p >= n^(-1/2) * sum over candidates of estimate^p
};

struct PrefixOracleParams {
    std::size_t depth = 5;
    std::size_t width = 300;
    double epsilon = 0.1;
    ExtractionRule rule = ExtractionRule::l2;
    std::size_t top_k = 26;
    double p = 2.0;
    std::uint64_t seed = 0;
    std::size_t candidate_cap = 0;  ///< 0 keeps every distinct prefix item
};

/// Runs a count-sketch over the prefix and freezes the extracted items into a
/// static set; answers do not depend on suffix_start.
inline std::shared_ptr<const SetOracle> train_prefix_oracle(const Stream& prefix, std::uint64_t universe,
                                                            const PrefixOracleParams& prm,
                                                            CountSketch* sketch_out = nullptr) {
    if (prefix.empty()) throw ContractViolation("cannot train an oracle on an empty prefix");
    CountSketch cs(universe, prm.depth, prm.width, prm.seed);
    std::unordered_set<std::uint64_t> candidates;
    double total = 0.0;

    auto shrink = [&](std::size_t keep) {
        std::vector<std::pair<double, std::uint64_t>> ranked;
        ranked.reserve(candidates.size());
        for (auto i : candidates) ranked.emplace_back(cs.point_query(i), i);
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        candidates.clear();
        for (std::size_t k = 0; k < std::min(keep, ranked.size()); ++k) candidates.insert(ranked[k].second);
    };

    for (const auto& u : prefix) {
        cs.update(u.item, u.weight);
        total += u.weight;
        candidates.insert(u.item);
        if (prm.candidate_cap > 0 && candidates.size() > 2 * prm.candidate_cap) shrink(prm.candidate_cap);
    }
    if (prm.candidate_cap > 0 && candidates.size() > prm.candidate_cap) shrink(prm.candidate_cap);

    std::vector<std::uint64_t> cand(candidates.begin(), candidates.end());
    std::sort(cand.begin(), cand.end());
    std::set<std::uint64_t> chosen;
    switch (prm.rule) {
        case ExtractionRule::l2: {
            for (auto i : cs.heavy_hitters(cand, prm.epsilon * std::sqrt(std::max(0.0, cs.f2_estimate()))))
                chosen.insert(i);
            break;
        }
        case ExtractionRule::l1: {
            for (auto i : cs.heavy_hitters(cand, prm.epsilon * total)) chosen.insert(i);
            break;
        }
        case ExtractionRule::top_k: {
            std::vector<std::pair<double, std::uint64_t>> ranked;
            for (auto i : cand) ranked.emplace_back(cs.point_query(i), i);
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            for (std::size_t k = 0; k < std::min(prm.top_k, ranked.size()); ++k) chosen.insert(ranked[k].second);
            break;
        }
        case ExtractionRule::fp: {
            std::vector<double> est(cand.size());
            double mass = 0.0;
            for (std::size_t k = 0; k < cand.size(); ++k) {
                est[k] = std::max(0.0, cs.point_query(cand[k]));
                mass += abs_pow(est[k], prm.p);
            }
            const double bar = mass / std::sqrt(static_cast<double>(universe));
            for (std::size_t k = 0; k < cand.size(); ++k)
                if (est[k] > 0.0 && abs_pow(est[k], prm.p) >= bar) chosen.insert(cand[k]);
            break;
        }
    }
    if (sketch_out) *sketch_out = cs;
    return std::make_shared<SetOracle>(std::move(chosen));
}

inline ExtractionRule extraction_rule_from_string(const std::string& s) {
    if (s == "l2") return ExtractionRule::l2;
    if (s == "l1") return ExtractionRule::l1;
    if (s == "top-k" || s == "top_k") return ExtractionRule::top_k;
    if (s == "fp") return ExtractionRule::fp;
    throw ContractViolation("unknown extraction rule '" + s + "'");
}

/// Precision and recall of a predicted set against a reference set.
struct SetAgreement {
    double precision = 1.0;
    double recall = 1.0;
};

template <class A, class B>
SetAgreement compare_sets(const A& predicted, const B& truth) {
    std::set<std::uint64_t> p(predicted.begin(), predicted.end());
    std::set<std::uint64_t> t(truth.begin(), truth.end());
    std::size_t hit = 0;
    for (auto i : p) hit += t.count(i);
    SetAgreement out;
    out.precision = p.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(p.size());
    out.recall = t.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(t.size());
    return out;
}

}  // namespace lastream
