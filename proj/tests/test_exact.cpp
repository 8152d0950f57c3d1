#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lastream/exact.hpp"

using namespace lastream;

namespace {

Stream random_stream(std::size_t m, std::uint64_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    Stream s;
    for (std::size_t t = 1; t <= m; ++t) s.push_back({t, g() % n, 1.0});
    return s;
}

FrequencyVector vec(std::initializer_list<double> xs) {
    FrequencyVector v(xs.size());
    std::uint64_t i = 0;
    for (double x : xs) v.add(i++, x);
    return v;
}

}  // namespace

TEST(ExactFp, Examples) {
    EXPECT_EQ(exact_fp(vec({3, 4}), 2), 25.0);
    EXPECT_EQ(exact_fp(FrequencyVector(10), 2), 0.0);
    EXPECT_EQ(exact_fp(vec({1, 2, 3}), 3), 36.0);
    EXPECT_NEAR(exact_fp(vec({4}), 2.5), 32.0, 1e-12);
    EXPECT_THROW(exact_fp(vec({1}), 0.5), ContractViolation);
}

TEST(ExactFp, Superadditive) {
    std::mt19937_64 g(1);
    for (int trial = 0; trial < 100; ++trial) {
        FrequencyVector u(8), v(8), uv(8);
        for (std::uint64_t i = 0; i < 8; ++i) {
            const double a = static_cast<double>(g() % 5), b = static_cast<double>(g() % 5);
            u.add(i, a);
            v.add(i, b);
            uv.add(i, a + b);
        }
        for (double p : {1.0, 2.0, 3.0, 2.5})
            EXPECT_GE(exact_fp(uv, p) + 1e-9, exact_fp(u, p) + exact_fp(v, p));
    }
}

TEST(ExactWindow, Examples) {
    auto s = random_stream(8, 3, 11);
    auto whole = exact_window_vector(s, 3, 8, 8);
    EXPECT_EQ(whole, exact_vector(s, 3));

    auto last = exact_window_vector(s, 3, 1, 8);
    EXPECT_EQ(last.total(), 1.0);
    EXPECT_EQ(last[s[7].item], 1.0);

    // direct recount of timestamps 5..8
    double c[3] = {0, 0, 0};
    for (std::size_t k = 4; k < 8; ++k) c[s[k].item] += 1;
    auto w4 = exact_window_vector(s, 3, 4, 8);
    for (std::uint64_t i = 0; i < 3; ++i) EXPECT_EQ(w4[i], c[i]);

    EXPECT_THROW(exact_window_vector(s, 3, 9, 8), ContractViolation);
}

TEST(ExactWindow, MassEqualsWindow) {
    auto s = random_stream(60, 7, 3);
    for (std::uint64_t t = 1; t <= 60; ++t)
        for (std::uint64_t W = 1; W <= t; ++W) EXPECT_EQ(exact_window_vector(s, 7, W, t).total(), double(W));
}

TEST(ExactDecayed, Examples) {
    auto poly = DecayFunction::polynomial(1.0);
    Stream one{{1, 2, 1.0}};
    EXPECT_EQ(exact_decayed_vector(one, 4, poly, 1)[2], 1.0);

    Stream two{{1, 0, 1.0}, {2, 0, 1.0}};
    EXPECT_DOUBLE_EQ(exact_decayed_vector(two, 1, poly, 2)[0], 1.5);
}

TEST(ExactDecayed, MatchesIndependentSum) {
    auto s = random_stream(20, 4, 8);
    auto fn = DecayFunction::exponential(0.5);
    auto v = exact_decayed_vector(s, 4, fn, 20);
    for (std::uint64_t i = 0; i < 4; ++i) {
        double want = 0;
        for (const auto& u : s)
            if (u.item == i) want += std::ldexp(1.0, -static_cast<int>(20 - u.timestamp));
        EXPECT_NEAR(v[i], want, 1e-12);
    }
}

TEST(ExactDecayed, MonotoneInExtraUpdatesAtQueryTime) {
    auto fn = DecayFunction::polynomial(2.0);
    auto s = random_stream(30, 5, 2);
    auto base = exact_decayed_vector(s, 5, fn, 30);
    Stream more = s;
    more.push_back({30, 3, 1.0});
    auto bumped = exact_decayed_vector(more, 5, fn, 30);
    for (std::uint64_t i = 0; i < 5; ++i) EXPECT_GE(bumped[i], base[i]);
    EXPECT_DOUBLE_EQ(bumped[3], base[3] + 1.0);
}

TEST(ExactCascaded, Examples) {
    MatrixStream one{{1, 0, 0, 1.0}, {2, 0, 0, 1.0}, {3, 0, 0, 1.0}};
    for (auto [k, p] : {std::pair{2.0, 2.0}, {3.0, 2.0}, {5.0, 5.0}})
        EXPECT_NEAR(exact_cascaded(one, 1, 1, k, p), 3.0, 1e-12);

    MatrixStream ident;
    for (std::uint64_t i = 0; i < 5; ++i) ident.push_back({i + 1, i, (i * 2) % 3, 1.0});
    EXPECT_NEAR(exact_cascaded(ident, 5, 3, 3, 2), std::pow(5.0, 1.0 / 3.0), 1e-12);
}

TEST(ExactCascaded, MatchesNestedLoop) {
    std::mt19937_64 g(99);
    MatrixStream ms;
    double X[4][3] = {};
    for (std::uint64_t t = 1; t <= 40; ++t) {
        auto r = g() % 4, c = g() % 3;
        ms.push_back({t, r, c, 1.0});
        X[r][c] += 1;
    }
    double outer = 0;
    for (auto& row : X) {
        double in = 0;
        for (double x : row) in += x * x * x;
        outer += in;  // (k/p) = 1
    }
    EXPECT_NEAR(exact_cascaded(ms, 4, 3, 3, 3), std::cbrt(outer), 1e-9 * std::cbrt(outer));
}

TEST(ExactCascaded, KEqualsPCollapsesToFp) {
    std::mt19937_64 g(5);
    for (int trial = 0; trial < 20; ++trial) {
        MatrixStream ms;
        for (std::uint64_t t = 1; t <= 50; ++t) ms.push_back({t, g() % 6, g() % 4, 1.0});
        for (double p : {2.0, 3.0, 4.0}) {
            const double fp = exact_fp(exact_vector(flatten_matrix_stream(ms, 6, 4), 24), p);
            EXPECT_TRUE(rel_close(exact_cascaded(ms, 6, 4, p, p), std::pow(fp, 1.0 / p), 1e-9));
        }
    }
}

TEST(ExactEstimators, TrackBruteForce) {
    auto s = random_stream(300, 17, 21);
    ExactFpEstimator e(17, 3);
    for (std::size_t k = 0; k < s.size(); ++k) {
        e.update(s[k].item);
        if (k % 37 == 0) {
            Stream pre(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k + 1));
            EXPECT_EQ(e.estimate(), exact_fp(exact_vector(pre, 17), 3));
        }
    }

    std::mt19937_64 g(6);
    MatrixStream ms;
    ExactCascadedEstimator c(5, 4, 3, 2);
    for (std::uint64_t t = 1; t <= 200; ++t) {
        ms.push_back({t, g() % 5, g() % 4, 1.0});
        c.update(matrix_key(ms.back().row, ms.back().col, 4));
    }
    EXPECT_TRUE(rel_close(c.estimate(), exact_cascaded(ms, 5, 4, 3, 2), 1e-12));
}
