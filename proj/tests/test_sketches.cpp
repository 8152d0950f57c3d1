#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "lastream/ensemble.hpp"
#include "lastream/exact.hpp"
#include "lastream/sketches.hpp"

using namespace lastream;

namespace {

Stream random_stream(std::size_t m, std::uint64_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    Stream s;
    for (std::size_t t = 1; t <= m; ++t) s.push_back({t, g() % n, 1.0});
    return s;
}

}  // namespace

TEST(Ams, SingleUpdateIsPlusMinusWeight) {
    AmsSketch a(10, 11, 0);
    a.update(3, 5.0);
    for (double z : a.values()) EXPECT_EQ(std::fabs(z), 5.0);
}

TEST(Ams, InverseUpdatesCancel) {
    AmsSketch a(10, 11, 0);
    a.update(4, 1.0);
    a.update(4, -1.0);
    for (double z : a.values()) EXPECT_EQ(z, 0.0);
    EXPECT_EQ(a.estimate(), 0.0);
}

TEST(Ams, OrderIndependent) {
    auto s = random_stream(200, 30, 4);
    AmsSketch a(30, 11, 0), b(30, 11, 0);
    for (const auto& u : s) a.update(u.item);
    std::map<std::uint64_t, double> batched;
    for (const auto& u : s) batched[u.item] += 1;
    for (auto it = batched.rbegin(); it != batched.rend(); ++it) b.update(it->first, it->second);
    EXPECT_EQ(a.values(), b.values());
}

TEST(Ams, RepeatedItemIsExact) {
    AmsSketch a(5, 11, 0);
    for (int k = 0; k < 7; ++k) a.update(2);
    EXPECT_EQ(a.estimate(), 49.0);
}

TEST(Ams, EmptyIsZero) { EXPECT_EQ(AmsSketch(5, 11, 0).estimate(), 0.0); }

TEST(Ams, SingleRepetitionUnbiased) {
    double sum = 0;
    const int seeds = 10000;
    for (int s = 0; s < seeds; ++s) {
        AmsSketch a(4, std::vector<std::uint64_t>{static_cast<std::uint64_t>(s)});
        a.update(0, 3.0);
        a.update(1, 4.0);
        sum += a.repetition_square(0);
    }
    EXPECT_NEAR(sum / seeds, 25.0, 0.5);
}

TEST(Ams, CombineIsSketchOfSum) {
    auto u = random_stream(100, 20, 1), v = random_stream(150, 20, 2);
    AmsSketch a(20, 11, 3), b(20, 11, 3), ab(20, 11, 3);
    for (const auto& x : u) a.update(x.item), ab.update(x.item);
    for (const auto& x : v) b.update(x.item), ab.update(x.item);
    EXPECT_EQ(ams_combine(a, b).values(), ab.values());
}

TEST(Ams, Scale) {
    AmsSketch a(8, 11, 0);
    a.update(5, 4.0);
    const auto zero = ams_scale(a, 0.0);
    for (double z : zero.values()) EXPECT_EQ(z, 0.0);
    EXPECT_DOUBLE_EQ(ams_scale(a, 0.5).estimate(), 0.25 * a.estimate());
}

TEST(Ams, MismatchedConfigurationRejected) {
    AmsSketch a(8, 11, 0), b(8, 11, 1), c(9, 11, 0), d(8, 5, 0);
    EXPECT_THROW(ams_combine(a, b), ContractViolation);
    EXPECT_THROW(ams_combine(a, c), ContractViolation);
    EXPECT_THROW(ams_combine(a, d), ContractViolation);
    EXPECT_THROW(a.update(8), ContractViolation);
}

TEST(CountSketch, SingleItemExact) {
    CountSketch cs(1000, 5, 300, 1);
    for (int k = 0; k < 10; ++k) cs.update(77);
    EXPECT_EQ(cs.point_query(77), 10.0);
    EXPECT_EQ(CountSketch(1000, 5, 300, 1).point_query(5), 0.0);
}

TEST(CountSketch, ZipfTopItem) {
    // Zipf(1.2) over 1000 items, 10^4 updates
    const std::uint64_t n = 1000;
    std::vector<double> w(n);
    for (std::uint64_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -1.2);
    std::discrete_distribution<std::uint64_t> zipf(w.begin(), w.end());
    std::mt19937_64 g(12);
    CountSketch cs(n, 5, 300, 7);
    std::vector<double> truth(n, 0.0);
    for (int t = 0; t < 10000; ++t) {
        auto i = zipf(g);
        cs.update(i);
        truth[i] += 1;
    }
    const auto top = static_cast<std::uint64_t>(std::max_element(truth.begin(), truth.end()) - truth.begin());
    EXPECT_NEAR(cs.point_query(top), truth[top], 0.1 * truth[top]);
}

TEST(CountSketch, ErrorBoundHoldsMostly) {
    // |est - x_i| <= 2 ||x_tail||_2 / sqrt(w) should hold for nearly all items
    const std::uint64_t n = 2000;
    auto s = random_stream(20000, n, 31);
    auto v = exact_vector(s, n);
    CountSketch cs(n, 5, 100, 3);
    for (const auto& u : s) cs.update(u.item);
    std::vector<double> xs;
    v.for_each_nonzero([&](std::uint64_t, double x) { xs.push_back(x); });
    std::sort(xs.rbegin(), xs.rend());
    double tail = 0;
    for (std::size_t k = 100; k < xs.size(); ++k) tail += xs[k] * xs[k];
    const double bound = 2 * std::sqrt(tail) / std::sqrt(100.0);
    int bad = 0;
    for (std::uint64_t i = 0; i < n; ++i) bad += std::fabs(cs.point_query(i) - v[i]) > bound;
    EXPECT_LE(bad, static_cast<int>(n / 20));
}

TEST(CountSketch, OrderIndependentAndLinear) {
    auto s = random_stream(500, 50, 8);
    CountSketch a(50, 5, 30, 2), b(50, 5, 30, 2), half1(50, 5, 30, 2), half2(50, 5, 30, 2);
    for (const auto& u : s) a.update(u.item);
    for (auto it = s.rbegin(); it != s.rend(); ++it) b.update(it->item);
    EXPECT_EQ(a.table(), b.table());
    for (std::size_t k = 0; k < s.size(); ++k) (k % 2 ? half1 : half2).update(s[k].item);
    half1.add_scaled(half2, 1.0);
    EXPECT_EQ(half1.table(), a.table());
    EXPECT_THROW(a.add_scaled(CountSketch(50, 5, 30, 3), 1.0), ContractViolation);
}

TEST(CountSketch, HeavyHitterThresholds) {
    CountSketch cs(100, 5, 300, 4);
    std::vector<std::uint64_t> cand{1, 2, 3, 4};
    cs.update(1, 5);
    cs.update(2, 1);
    cs.update(3, 9);
    EXPECT_EQ(cs.heavy_hitters(cand, 0.0), (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_EQ(cs.heavy_hitters(cand, 5.0), (std::vector<std::uint64_t>{1, 3}));
    EXPECT_TRUE(cs.heavy_hitters(cand, 16.0).empty());
}

TEST(CountSketch, PlantedHeavyHitters) {
    std::vector<std::uint64_t> planted;
    const std::uint64_t n = 10000;
    auto s = generate_planted_stream({n, 100000, 25, 0.5, 42}, &planted);
    CountSketch cs(n, 5, 300, 1);
    std::vector<std::uint64_t> cand;
    std::vector<double> truth(n, 0.0);
    for (const auto& u : s) {
        cs.update(u.item);
        if (truth[u.item] == 0.0) cand.push_back(u.item);
        truth[u.item] += 1;
    }
    // brute-force ranking: the heavy set is the items with at least 1% of the stream
    const double bar = 0.01 * static_cast<double>(s.size());
    std::vector<std::uint64_t> want;
    for (auto i : cand)
        if (truth[i] >= bar) want.push_back(i);
    auto got = cs.heavy_hitters(cand, bar);
    std::sort(want.begin(), want.end());
    std::size_t hit = 0;
    for (auto i : got) hit += std::binary_search(want.begin(), want.end(), i);
    EXPECT_GE(static_cast<double>(hit) / static_cast<double>(want.size()), 0.9);
    EXPECT_GE(static_cast<double>(hit) / static_cast<double>(std::max<std::size_t>(got.size(), 1)), 0.9);
}

TEST(Subsample, RateOneIsExact) {
    auto s = random_stream(500, 40, 3);
    SubsampleFpEstimator e(40, 3, 1.0, 9);
    for (const auto& u : s) e.update(u.item);
    EXPECT_TRUE(rel_close(e.estimate(), exact_fp(exact_vector(s, 40), 3), 1e-9));
    EXPECT_EQ(SubsampleFpEstimator(40, 3, 0.5, 1).estimate(), 0.0);
}

TEST(Subsample, Unbiased) {
    double sum = 0;
    const int seeds = 10000;
    for (int s = 0; s < seeds; ++s) {
        SubsampleFpEstimator e(4, 3, 0.5, static_cast<std::uint64_t>(s));
        for (std::uint64_t i = 0; i < 4; ++i) e.update(i, 5.0);
        sum += e.estimate();
    }
    EXPECT_NEAR(sum / seeds, 500.0, 15.0);
}

TEST(Subsample, MembershipIsStable) {
    SubsampleFpEstimator e(100, 2, 0.3, 4);
    std::map<std::uint64_t, bool> first;
    std::mt19937_64 g(1);
    for (int k = 0; k < 2000; ++k) {
        auto i = g() % 100;
        auto [it, fresh] = first.emplace(i, e.is_sampled(i));
        EXPECT_EQ(it->second, e.is_sampled(i));
        e.update(i);
    }
    for (auto& [i, c] : e.counts()) EXPECT_TRUE(first[i]);
}

TEST(Subsample, FractionalCounts) {
    SubsampleFpEstimator e(4, 3, 1.0, 0);
    e.update(1, 0.5);
    e.update(1, 0.25);
    EXPECT_NEAR(e.estimate(), 0.75 * 0.75 * 0.75, 1e-15);
}

TEST(Ensemble, Aggregations) {
    auto make = [](std::size_t j) {
        SubsampleFpEstimator e(10, 1, 1.0, 0);
        e.update(0, static_cast<double>(j + 1));
        return e;
    };
    EXPECT_EQ(Ensemble<SubsampleFpEstimator>(5, make, Aggregation::median).estimate(), 3.0);
    EXPECT_EQ(Ensemble<SubsampleFpEstimator>(4, make, Aggregation::median).estimate(), 2.5);
    EXPECT_EQ(Ensemble<SubsampleFpEstimator>(4, make, Aggregation::mean).estimate(), 2.5);
    // groups {1,2,3}, {4,5,6} -> means 2 and 5 -> 3.5
    EXPECT_EQ(Ensemble<SubsampleFpEstimator>(6, make, Aggregation::mean_of_means, 2).estimate(), 3.5);
    EXPECT_THROW(Ensemble<SubsampleFpEstimator>(5, make, Aggregation::mean_of_means, 2), ContractViolation);
}
