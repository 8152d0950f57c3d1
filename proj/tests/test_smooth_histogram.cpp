#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "lastream/exact.hpp"
#include "lastream/smooth_histogram.hpp"

using namespace lastream;

namespace {

using Hist = SmoothHistogram<ExactFpEstimator>;

Hist exact_hist(std::uint64_t n, double p, HistogramConfig cfg) {
    return Hist([n, p](std::uint64_t) { return ExactFpEstimator(n, p); }, cfg);
}

Stream random_stream(std::size_t m, std::uint64_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    Stream s;
    for (std::size_t t = 1; t <= m; ++t) s.push_back({t, g() % n, 1.0});
    return s;
}

// Straightforward restatement of the pruning rule: survivors are start times,
// values are recomputed from scratch, and "largest k" is a linear scan.
std::vector<std::uint64_t> reference_survivors(const Stream& s, std::uint64_t n, double p, double beta) {
    std::vector<std::uint64_t> alive;
    for (std::uint64_t t = 1; t <= s.size(); ++t) {
        alive.push_back(t);
        std::vector<double> val;
        for (auto st : alive) val.push_back(exact_fp(exact_range_vector(s, n, st, t), p));
        std::vector<bool> keep(alive.size(), true);
        std::size_t l = 0;
        while (l + 1 < alive.size()) {
            std::size_t k = l;
            for (std::size_t j = alive.size(); j-- > l + 1;)
                if (val[j] >= (1 - beta) * val[l]) {
                    k = j;
                    break;
                }
            if (k == l) {
                ++l;
                continue;
            }
            for (std::size_t j = l + 1; j < k; ++j) keep[j] = false;
            l = k;
        }
        std::vector<std::uint64_t> next;
        for (std::size_t j = 0; j < alive.size(); ++j)
            if (keep[j]) next.push_back(alive[j]);
        alive = next;
    }
    return alive;
}

}  // namespace

TEST(SmoothnessBeta, Examples) {
    EXPECT_DOUBLE_EQ(smoothness_beta(SmoothFamily::fp, 0.1, 2), 0.0025);
    EXPECT_DOUBLE_EQ(smoothness_beta(SmoothFamily::rectangle_fp, 0.1, 2), 0.0025);
    EXPECT_DOUBLE_EQ(smoothness_beta(SmoothFamily::cascaded, 0.5, 2, 2), 0.125);
    EXPECT_DOUBLE_EQ(smoothness_beta(SmoothFamily::fp, 0.3, 2), 0.0225);
    EXPECT_THROW(smoothness_beta(SmoothFamily::fp, 1.0, 2), ContractViolation);
    EXPECT_THROW(smoothness_beta(SmoothFamily::fp, 0.0, 2), ContractViolation);
    EXPECT_THROW(smoothness_beta(SmoothFamily::fp, 0.1, 0.5), ContractViolation);
    EXPECT_THROW(smoothness_beta(SmoothFamily::cascaded, 0.1, 3, 2), ContractViolation);
}

TEST(SmoothHistogram, ConstantStreamSurvivorBound) {
    auto h = exact_hist(1, 2, {0.5, 0, 1});
    for (int t = 0; t < 8; ++t) h.update(0);
    // suffix values 64, 36, 25, 16, 9, 4, 1 survive: each is adjacent to its
    // successor or has no later partner within the factor 1/2
    EXPECT_EQ(h.size(), 7u);
    EXPECT_LE(static_cast<double>(h.size()), 2 * std::log2(64.0 / 1.0) + 2);
    Stream s;
    for (std::uint64_t t = 1; t <= 8; ++t) s.push_back({t, 0, 1.0});
    EXPECT_EQ(h.start_times(), reference_survivors(s, 1, 2, 0.5));
}

TEST(SmoothHistogram, MatchesReferencePruning) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::uint64_t n = 2 + seed % 5;
        auto s = random_stream(40, n, seed);
        for (double beta : {0.05, 0.2, 0.5, 0.9}) {
            auto h = exact_hist(n, 2, {beta, 0, 1});
            for (const auto& u : s) h.update(u);
            EXPECT_EQ(h.start_times(), reference_survivors(s, n, 2, beta)) << seed << " " << beta;
        }
    }
}

TEST(SmoothHistogram, BetaZeroKeepsEverything) {
    auto s = random_stream(50, 4, 2);
    auto h = exact_hist(4, 2, {0.0, 0, 1});
    for (const auto& u : s) h.update(u);
    ASSERT_EQ(h.size(), 50u);
    for (std::uint64_t j = 0; j < 50; ++j) EXPECT_EQ(h.start_times()[j], j + 1);
}

TEST(SmoothHistogram, SingleUpdate) {
    auto h = exact_hist(4, 2, {0.5, 0, 1});
    h.update(StreamUpdate{1, 2, 1.0});
    EXPECT_EQ(h.start_times(), std::vector<std::uint64_t>{1});
    EXPECT_EQ(h.query(1).estimate, 1.0);
}

TEST(SmoothHistogram, WholeWindowAndLastUpdate) {
    auto s = random_stream(30, 5, 7);
    auto h = exact_hist(5, 2, {0.3, 0, 1});
    auto all = exact_hist(5, 2, {0.0, 0, 1});
    for (const auto& u : s) h.update(u), all.update(u);
    EXPECT_EQ(h.query(30).start, 1u);
    EXPECT_EQ(h.query(30).estimate, exact_fp(exact_vector(s, 5), 2));
    EXPECT_EQ(all.query(1).start, 30u);
    EXPECT_EQ(all.query(1).estimate, 1.0);
}

TEST(SmoothHistogram, Errors) {
    auto h = exact_hist(4, 2, {0.5, 0, 1});
    h.update(StreamUpdate{1, 0, 1.0});
    EXPECT_THROW(h.update(StreamUpdate{3, 0, 1.0}), ContractViolation);
    EXPECT_THROW(h.query(2), ContractViolation);
    EXPECT_THROW(h.query(0), ContractViolation);
    EXPECT_THROW(exact_hist(4, 2, {1.0, 0, 1}), ContractViolation);
    EXPECT_THROW(exact_hist(4, 2, {0.5, 1, 1}), ContractViolation);
    EXPECT_THROW(exact_hist(4, 2, {0.5, 0, 0}), ContractViolation);
}

TEST(SmoothHistogram, SandwichSmallExhaustive) {
    // every stream of length <= 7 over 3 items; full check lives in the acceptance suite
    const double eps = 0.3, beta = smoothness_beta(SmoothFamily::fp, eps, 2);
    std::function<void(Stream&)> rec = [&](Stream& s) {
        if (!s.empty()) {
            auto h = exact_hist(3, 2, {beta, 0, 1});
            for (const auto& u : s) h.update(u);
            const std::uint64_t m = s.size();
            for (std::uint64_t W = 1; W <= m; ++W) {
                auto a = h.query(W);
                const double win = exact_fp(exact_window_vector(s, 3, W, m), 2);
                const double suffix = exact_fp(exact_range_vector(s, 3, a.start, m), 2);
                ASSERT_GE(a.estimate, (1 - eps) * win);
                ASSERT_LE(a.estimate, suffix);
                ASSERT_LE(a.start, m - W + 1);
            }
        }
        if (s.size() == 7) return;
        for (std::uint64_t i = 0; i < 3; ++i) {
            s.push_back({s.size() + 1, i, 1.0});
            rec(s);
            s.pop_back();
        }
    };
    Stream s;
    rec(s);
}

TEST(SmoothHistogram, NeverDropsFirstOrNewest) {
    auto s = random_stream(500, 20, 4);
    auto h = exact_hist(20, 3, {0.5, 5, 1});
    for (const auto& u : s) {
        h.update(u);
        EXPECT_EQ(h.start_times().front(), 1u);
        EXPECT_EQ(h.start_times().back(), u.timestamp);
        EXPECT_LE(h.size(), 5u);
    }
    EXPECT_LE(h.peak_size(), 5u);
}

TEST(SmoothHistogram, CapEvictsFlattestNeighbourhood) {
    // beta = 0 keeps 4 survivors; cap 3 must remove the one whose neighbours are closest
    auto h = exact_hist(10, 1, {0.0, 3, 1});
    // suffix F1 values before the cap: 4, 3, 2, 1 -> ratios est(j-1)/est(j+1): j=1: 2, j=2: 3
    for (int k = 0; k < 4; ++k) h.update(static_cast<std::uint64_t>(k));
    EXPECT_EQ(h.start_times(), (std::vector<std::uint64_t>{1, 3, 4}));
}

TEST(SmoothHistogram, StrideSpawnsEveryGthStep) {
    auto h = exact_hist(4, 2, {0.0, 0, 3});
    for (int k = 0; k < 10; ++k) h.update(static_cast<std::uint64_t>(k % 4));
    EXPECT_EQ(h.start_times(), (std::vector<std::uint64_t>{1, 4, 7, 10}));
    // windows reaching before the first instance fall back to it
    EXPECT_EQ(h.query(10).start, 1u);
    EXPECT_EQ(h.query(2).start, 7u);
}

TEST(SmoothHistogram, Deterministic) {
    auto s = random_stream(300, 30, 9);
    auto a = exact_hist(30, 2, {0.1, 0, 1}), b = exact_hist(30, 2, {0.1, 0, 1});
    for (const auto& u : s) a.update(u), b.update(u);
    EXPECT_EQ(a.start_times(), b.start_times());
    EXPECT_EQ(a.estimates(), b.estimates());
}

TEST(SmoothHistogram, MonotoneInstanceBound) {
    for (double beta : {0.5, 0.1}) {
        auto h = exact_hist(8, 2, {beta, 0, 1});
        auto s = random_stream(2000, 8, 1);
        for (const auto& u : s) {
            h.update(u);
            const double bound = 4 * std::log(static_cast<double>(u.timestamp) + 1) / beta;
            ASSERT_LE(static_cast<double>(h.size()), bound);
        }
    }
}

TEST(SmoothHistogram, TraceRows) {
    std::ostringstream out;
    auto h = exact_hist(4, 2, {0.0, 0, 1});
    h.set_trace(&out);
    h.update(1);
    h.update(1);
    EXPECT_EQ(out.str(), "time,instances,start_times,estimates\n1,1,1,1\n2,2,1;2,4;1\n");
}
