#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "lastream/exact.hpp"
#include "lastream/sketches.hpp"
#include "lastream/time_decay.hpp"

using namespace lastream;

namespace {

using ExactTd = TimeDecayEstimator<ExactVectorPayload>;

ExactTd exact_td(DecayFunction fn, SmoothnessParams prm, double p = 2) {
    return ExactTd(fn, prm, [p] { return ExactVectorPayload(p); });
}

Stream random_stream(std::size_t m, std::uint64_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    Stream s;
    for (std::size_t t = 1; t <= m; ++t) s.push_back({t, g() % n, 1.0});
    return s;
}

}  // namespace

TEST(DecayWeight, Examples) {
    EXPECT_DOUBLE_EQ(decay_weight(DecayFunction::polynomial(1), 4), 0.25);
    EXPECT_DOUBLE_EQ(decay_weight(DecayFunction::exponential(0.5), 3), 0.25);
    for (auto fn : {DecayFunction::polynomial(2), DecayFunction::exponential(0.9), DecayFunction::sliding_window(5)})
        EXPECT_EQ(decay_weight(fn, 1), 1.0);
    EXPECT_EQ(decay_weight(DecayFunction::sliding_window(5), 5), 1.0);
    EXPECT_EQ(decay_weight(DecayFunction::sliding_window(5), 6), 0.0);
    EXPECT_THROW(decay_weight(DecayFunction::polynomial(1), 0), ContractViolation);
    EXPECT_THROW(DecayFunction::exponential(1.5), ContractViolation);
    EXPECT_THROW(DecayFunction::polynomial(0), ContractViolation);
}

TEST(DecayWeight, NonIncreasing) {
    for (auto fn : {DecayFunction::polynomial(0.5), DecayFunction::exponential(0.7), DecayFunction::sliding_window(9)})
        for (std::uint64_t tau = 1; tau < 200; ++tau) EXPECT_GE(fn(tau), fn(tau + 1));
}

TEST(DecayFamily, Names) {
    for (auto f : {DecayFamily::polynomial, DecayFamily::exponential, DecayFamily::sliding_window})
        EXPECT_EQ(decay_family_from_string(to_string(f)), f);
    EXPECT_THROW(decay_family_from_string("linear"), ContractViolation);
}

TEST(SmoothnessParams, Examples) {
    auto poly = smoothness_params(DecayFunction::polynomial(1), 0.1, 2, 100);
    EXPECT_DOUBLE_EQ(poly.eta, 0.00025);
    EXPECT_DOUBLE_EQ(poly.nu, 5e-6);
    // ceil(nu^-2) is far beyond m, so the expiry is clamped
    EXPECT_EQ(poly.expiry_age, 101u);

    auto big = smoothness_params(DecayFunction::polynomial(8), 0.1, 2, 1000000);
    EXPECT_EQ(big.expiry_age, static_cast<std::uint64_t>(std::ceil(std::pow(big.nu, -2.0 / 8))));

    EXPECT_THROW(smoothness_params(DecayFunction::polynomial(1), 1.0, 2, 10), ContractViolation);
    EXPECT_THROW(smoothness_params(DecayFunction::polynomial(1), 0.1, 1.5, 10), ContractViolation);
    EXPECT_THROW(smoothness_params(DecayFunction::polynomial(1), 0.1, 2, 0), ContractViolation);
}

TEST(SmoothnessParams, ExponentialExpiryByDirectSummation) {
    // smallest a with sum_{i >= a} 0.5^(i-1) <= 1e-3
    auto tail = [](double s, std::uint64_t a) {
        double t = 0;
        for (std::uint64_t i = a; i < a + 2000; ++i) t += std::pow(s, static_cast<double>(i - 1));
        return t;
    };
    std::uint64_t a = 1;
    while (tail(0.5, a) > 1e-3) ++a;
    EXPECT_EQ(a, 12u);
    EXPECT_EQ(exponential_expiry_age(0.5, 1e-3), 12.0);
    for (double s : {0.3, 0.5, 0.9, 0.99})
        for (double nu : {1e-2, 1e-4, 1e-7}) {
            const auto got = static_cast<std::uint64_t>(exponential_expiry_age(s, nu));
            EXPECT_LE(tail(s, got), nu * (1 + 1e-12));
            if (got > 1) {
                EXPECT_GT(tail(s, got - 1), nu);
            }
        }
    EXPECT_TRUE(std::isinf(exponential_expiry_age(1.0, 1e-3)));

    auto prm = smoothness_params(DecayFunction::exponential(0.5), 0.1, 2, 50);
    EXPECT_DOUBLE_EQ(prm.nu, 0.1 / (100 * 2 * 50));
    EXPECT_EQ(prm.expiry_age, static_cast<std::uint64_t>(exponential_expiry_age(0.5, prm.nu)));
}

TEST(SmoothnessParams, SlidingWindowExpiry) {
    EXPECT_EQ(smoothness_params(DecayFunction::sliding_window(10), 0.1, 2, 100).expiry_age, 11u);
    EXPECT_EQ(smoothness_params(DecayFunction::sliding_window(500), 0.1, 2, 100).expiry_age, 101u);
}

TEST(TimeDecay, EmptyAndSingle) {
    auto td = exact_td(DecayFunction::polynomial(1), {0.05, 1e-3, 1000});
    EXPECT_EQ(td.estimate(), 0.0);
    td.update(StreamUpdate{1, 3, 1.0});
    EXPECT_DOUBLE_EQ(td.estimate(), 1.0 / 1.05);
}

TEST(TimeDecay, OutOfOrderRejected) {
    auto td = exact_td(DecayFunction::polynomial(1), {0.05, 1e-3, 1000});
    td.update(StreamUpdate{1, 0, 1.0});
    EXPECT_THROW(td.update(StreamUpdate{1, 0, 1.0}), ContractViolation);
    EXPECT_THROW(exact_td(DecayFunction::polynomial(1), {0.0, 1e-3, 10}), ContractViolation);
}

TEST(TimeDecay, ExponentialHalfNeverMerges) {
    auto td = exact_td(DecayFunction::exponential(0.5), {0.5, 1e-6, 1000});
    for (std::uint64_t t = 1; t <= 100; ++t) {
        td.update(t % 3);
        EXPECT_EQ(td.block_count(), t);
    }
}

TEST(TimeDecay, PolynomialAges100And101Merge) {
    for (auto [eta, merged] : {std::pair{0.0202, true}, {0.0199, false}}) {
        auto td = exact_td(DecayFunction::polynomial(1), {eta, 1e-9, 100000});
        for (std::uint64_t t = 1; t <= 100; ++t) td.update(0);
        EXPECT_EQ(td.block_count(), 100u);
        td.update(0);
        // the only pair within 101/100 is the oldest one
        EXPECT_EQ(td.block_count(), merged ? 100u : 101u);
        if (merged) {
            EXPECT_EQ(td.blocks().front().oldest, 1u);
            EXPECT_EQ(td.blocks().front().newest, 2u);
        }
    }
}

TEST(TimeDecay, SlidingWindowTruncatesAtBlockGranularity) {
    const std::uint64_t W = 10;
    auto fn = DecayFunction::sliding_window(W);
    auto prm = smoothness_params(fn, 0.2, 2, 1000);
    auto td = exact_td(fn, prm, 1);
    auto s = random_stream(200, 4, 3);
    for (const auto& u : s) {
        td.update(u);
        const std::uint64_t t = u.timestamp;
        const double scale = std::sqrt(1 + prm.eta);
        // every surviving block still touches the window, and every update in
        // the window sits in a surviving block
        std::uint64_t covered = 0;
        for (const auto& b : td.blocks()) {
            EXPECT_LT(t - b.newest + 1, W + 1);
            covered += b.updates;
        }
        EXPECT_GE(covered, std::min<std::uint64_t>(t, W));
        EXPECT_NEAR(td.estimate() * scale, static_cast<double>(covered), 1e-9);
    }
}

TEST(TimeDecay, WeightSandwichAndBlockBound) {
    for (auto fn : {DecayFunction::polynomial(1), DecayFunction::polynomial(0.5), DecayFunction::exponential(0.9)}) {
        auto prm = smoothness_params(fn, 0.2, 2, 300);
        auto td = exact_td(fn, prm);
        auto s = random_stream(300, 6, 11);
        const double lim = std::sqrt(1 + prm.eta);
        for (const auto& u : s) {
            td.update(u);
            EXPECT_LE(static_cast<double>(td.block_count()), td.block_bound());
            for (const auto& b : td.blocks()) {
                const double wp = td.scaled_weight(b);
                for (std::uint64_t t = b.oldest; t <= b.newest; ++t) {
                    const double w = fn(u.timestamp - t + 1);
                    EXPECT_LE(wp, w * (1 + 1e-12));
                    EXPECT_LE(w, lim * wp * (1 + 1e-12));
                }
            }
        }
    }
}

TEST(TimeDecay, DeletedWeightWithinNu) {
    auto fn = DecayFunction::exponential(0.5);
    auto prm = smoothness_params(fn, 0.2, 2, 100);
    auto td = exact_td(fn, prm);
    for (std::uint64_t t = 1; t <= 100; ++t) {
        td.update(0);
        const std::uint64_t live_from = td.blocks().front().oldest;
        double dead = 0;
        for (std::uint64_t tp = 1; tp < live_from; ++tp) dead += fn(t - tp + 1);
        EXPECT_LE(dead, prm.nu);
    }
    EXPECT_EQ(td.deleted_updates(), 100 - (100 - td.blocks().front().oldest + 1));
}

TEST(TimeDecay, MergeMonotonicity) {
    auto fn = DecayFunction::polynomial(1);
    auto td = exact_td(fn, {0.3, 1e-6, 100000});
    auto s = random_stream(400, 5, 2);
    std::map<std::uint64_t, std::uint64_t> block_of_prev;
    for (const auto& u : s) {
        td.update(u);
        std::map<std::uint64_t, std::uint64_t> block_of;
        for (const auto& b : td.blocks())
            for (std::uint64_t t = b.oldest; t <= b.newest; ++t) block_of[t] = b.oldest;
        for (std::uint64_t t = 1; t + 1 < u.timestamp; ++t)
            if (block_of_prev.count(t) && block_of_prev.count(t + 1) && block_of_prev[t] == block_of_prev[t + 1]) {
                EXPECT_EQ(block_of[t], block_of[t + 1]);
            }
        block_of_prev = block_of;
    }
}

TEST(TimeDecay, EstimateWithinBounds) {
    const double eps = 0.2;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::uint64_t n = 3 + seed % 6;
        auto s = random_stream(1 + seed * 10, n, seed);
        auto fn = DecayFunction::polynomial(1);
        auto prm = smoothness_params(fn, eps, 2, s.size());
        auto td = exact_td(fn, prm);
        for (const auto& u : s) td.update(u);
        const double truth = exact_fp(exact_decayed_vector(s, n, fn, s.size()), 2);
        EXPECT_LE(td.estimate(), truth * (1 + 1e-12));
        EXPECT_GE(td.estimate(), (1 - eps) * truth - prm.nu * static_cast<double>(n));
    }
}

TEST(TimeDecay, SketchModeIsLinearCombination) {
    auto fn = DecayFunction::polynomial(1);
    SmoothnessParams prm{0.1, 1e-6, 100000};
    const std::uint64_t n = 16;
    auto exact = exact_td(fn, prm);
    TimeDecayEstimator<AmsSketch> ams(fn, prm, [n] { return AmsSketch(n, 11, 0); });
    auto s = random_stream(150, n, 5);
    for (const auto& u : s) exact.update(u), ams.update(u);
    EXPECT_EQ(exact.block_count(), ams.block_count());
    // sketch of the implied weighted vector vs weighted combination of block sketches
    AmsSketch direct(n, 11, 0);
    const auto weighted = exact.combined();
    for (const auto& [i, x] : weighted.entries()) direct.update(i, x);
    const auto comb = ams.combined();
    for (std::size_t j = 0; j < 11; ++j) EXPECT_NEAR(comb.values()[j], direct.values()[j], 1e-9);
}

TEST(TimeDecay, LearnedPayloads) {
    auto fn = DecayFunction::exponential(0.9);
    SmoothnessParams prm{0.05, 1e-6, 100000};
    const std::uint64_t n = 12;
    auto s = random_stream(120, n, 6);
    auto exact = exact_td(fn, prm);
    TimeDecayEstimator<LearnedVectorPayload> heavy(fn, prm, [] { return LearnedVectorPayload(all_heavy_oracle(), 2, 0.5, 1); });
    TimeDecayEstimator<LearnedVectorPayload> full(fn, prm, [] { return LearnedVectorPayload(all_light_oracle(), 2, 1.0, 1); });
    TimeDecayEstimator<LearnedSketchPayload<AmsSketch>> split(
        fn, prm, [n] { return LearnedSketchPayload<AmsSketch>(all_light_oracle(), AmsSketch(n, 11, 0)); });
    TimeDecayEstimator<AmsSketch> ams(fn, prm, [n] { return AmsSketch(n, 11, 0); });
    for (const auto& u : s) {
        exact.update(u), heavy.update(u), full.update(u), split.update(u), ams.update(u);
    }
    EXPECT_TRUE(rel_close(heavy.estimate(), exact.estimate(), 1e-12));
    EXPECT_TRUE(rel_close(full.estimate(), exact.estimate(), 1e-12));
    EXPECT_TRUE(rel_close(split.estimate(), ams.estimate(), 1e-12));
}

TEST(TimeDecay, TraceRows) {
    std::ostringstream out;
    auto td = exact_td(DecayFunction::exponential(0.5), {0.5, 1e-6, 1000});
    td.set_trace(&out);
    td.update(0);
    td.update(1);
    std::istringstream in(out.str());
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    EXPECT_EQ(header, "time,blocks,oldest_age,estimate");
    EXPECT_EQ(row1.substr(0, 6), "1,1,1,");
    EXPECT_EQ(row2.substr(0, 6), "2,2,2,");
}
