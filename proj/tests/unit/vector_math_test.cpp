/*
 * Copyright 2026 The vrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "vrag/random.hpp"
#include "vrag/vector_math.hpp"

namespace vrag {
namespace {

TEST(L2Normalize, ThreeFourFive) {
    const auto v = l2_normalize(Vector{3, 4});
    EXPECT_DOUBLE_EQ(v[0], 0.6);
    EXPECT_DOUBLE_EQ(v[1], 0.8);
}

TEST(L2Normalize, UnitVectorIsFixedPoint) {
    const Vector u{0.0, 1.0, 0.0};
    EXPECT_EQ(l2_normalize(u), u);
}

TEST(L2Normalize, ZeroVectorThrows) {
    try {
        l2_normalize(Vector{0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroVector);
    }
}

TEST(L2Normalize, IdempotentOnRandomInputs) {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const auto once = l2_normalize(testing::random_vector(rng, 1 + rng.index(64)));
        const auto twice = l2_normalize(once);
        EXPECT_NEAR(norm(once), 1.0, 1e-9);
        for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once[i], twice[i], 1e-12);
    }
}

TEST(Cosine, BasicCases) {
    EXPECT_DOUBLE_EQ(cosine(Vector{1, 0}, Vector{1, 0}), 1.0);
    EXPECT_DOUBLE_EQ(cosine(Vector{1, 0}, Vector{0, 1}), 0.0);
    // tests/oracles/numeric_oracle.py (40-digit decimal arithmetic)
    EXPECT_NEAR(cosine(Vector{1, 2, 3}, Vector{4, 5, 6}), 0.974631846197, 1e-12);
}

TEST(Cosine, Errors) {
    EXPECT_THROW(cosine(Vector{1, 0}, Vector{1, 0, 0}), Error);
    try {
        cosine(Vector{0, 0}, Vector{1, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroVector);
    }
    try {
        cosine(Vector{1}, Vector{1, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimMismatch);
    }
}

TEST(Cosine, SymmetricBoundedAndSelfOne) {
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
        const std::size_t dim = 1 + rng.index(128);
        const auto a = testing::random_vector(rng, dim);
        const auto b = testing::random_vector(rng, dim);
        EXPECT_EQ(cosine(a, b), cosine(b, a));
        EXPECT_LE(std::abs(cosine(a, b)), 1.0 + 1e-12);
        EXPECT_NEAR(cosine(a, a), 1.0, 1e-9);
    }
}

TEST(MeanPool, Examples) {
    EXPECT_EQ(mean_pool(std::vector<Vector>{{1, 1}}), (Vector{1, 1}));
    EXPECT_EQ(mean_pool(std::vector<Vector>{{0, 2}, {2, 0}}), (Vector{1, 1}));
}

TEST(MeanPool, MatchesOracle) {
    // Rows and mean from tests/oracles/numeric_oracle.py (numpy, seed 7).
    const std::vector<Vector> rows{
        {0.0012301533574825742, 0.2987455375084699, -0.2741378553622176, -0.8905918387572742, -0.45467078517172255, -0.9916465549964624,
         0.060143602597438485, 1.3402152455545335},
        {-0.49220651855132963, -0.6204748998199404, 0.4898420501851982, 0.35688700816006075, 0.10541424899789856, -0.9304680447082047,
         -0.02925182246327349, 0.6953031944582878},
        {-1.344214547285082, -0.45761576104021817, -1.901222739800844, -1.289537739784976, -1.8417350377917323, -0.23509113107468127,
         -1.2674464814437032, 0.2712643588217015},
        {0.15675108662422516, -0.18693094462995438, -2.516759710820513, -0.5386928958466366, -0.048500945401071985, 0.11330898600330756,
         -1.5301357655053935, -0.47775327603393064},
        {-0.9785190780566395, -0.8088372394255993, 1.0608986233860787, -0.8075346753318965, -0.0325217049455206, 0.8843898673831739,
         -0.583600432743302, -0.11170194958415963}};
    const Vector expected{-0.5313917807822687, -0.3550226614814485, -0.6282759264824594, -0.6338940283121446,
                          -0.45440284486242977, -0.23190137547857342, -0.6700581799116467, 0.34346551464328656};
    const auto got = mean_pool(rows);
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-15);
}

TEST(MeanPool, Errors) {
    try {
        mean_pool(std::vector<Vector>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
    }
    EXPECT_THROW(mean_pool(std::vector<Vector>{{1, 2}, {1}}), Error);
}

TEST(InterpolateEnsemble, OracleValue) {
    const auto v = interpolate_ensemble(Vector{1, 0}, Vector{0, 1}, 0.7);
    EXPECT_NEAR(v[0], 0.919145030018, 1e-12);
    EXPECT_NEAR(v[1], 0.393919298579, 1e-12);
}

TEST(InterpolateEnsemble, EndpointsReproduceNormalizedInputs) {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        const auto text = testing::random_unit(rng, 32);
        const auto visual = testing::random_unit(rng, 32);
        const auto at1 = interpolate_ensemble(text, visual, 1.0);
        const auto at0 = interpolate_ensemble(text, visual, 0.0);
        const auto nt = l2_normalize(text);
        const auto nv = l2_normalize(visual);
        for (std::size_t i = 0; i < 32; ++i) {
            EXPECT_NEAR(at1[i], nt[i], 1e-12);
            EXPECT_NEAR(at0[i], nv[i], 1e-12);
        }
    }
}

TEST(InterpolateEnsemble, MixBeforeNormalizationNeverExceedsUnitNorm) {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        const auto a = testing::random_unit(rng, 16);
        const auto b = testing::random_unit(rng, 16);
        const double alpha = rng.uniform01();
        Vector mixed(16);
        for (std::size_t i = 0; i < 16; ++i) mixed[i] = alpha * a[i] + (1 - alpha) * b[i];
        EXPECT_LE(norm(mixed), 1.0 + 1e-12);
    }
}

TEST(InterpolateEnsemble, Errors) {
    try {
        interpolate_ensemble(Vector{1, 0}, Vector{0, 1}, 1.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AlphaOutOfRange);
    }
    EXPECT_THROW(interpolate_ensemble(Vector{1, 0}, Vector{0, 1}, -0.1), Error);
    EXPECT_THROW(interpolate_ensemble(Vector{1, 0}, Vector{0, 1}, std::nan("")), Error);
    try {
        interpolate_ensemble(Vector{1, 0}, Vector{0, 1, 0}, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimMismatch);
    }
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs = differs || x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, IndexStaysInRangeAndShufflePermutes) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.index(7), 7u);
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    rng.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST(Rng, TenThousandthDrawMatchesStandard) {
    // [rand.predef]: the 10000th output of a default-seeded mt19937_64.
    Rng rng(5489);
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) x = rng.next();
    EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(DeriveSeed, SubstreamsAreIndependentOfEachOther) {
    EXPECT_EQ(derive_seed(7, "index", "a"), derive_seed(7, "index", "a"));
    EXPECT_NE(derive_seed(7, "index", "a"), derive_seed(7, "index", "b"));
    EXPECT_NE(derive_seed(7, "index", "a"), derive_seed(7, "retrieve", "a"));
    EXPECT_NE(derive_seed(7, "index", "a"), derive_seed(8, "index", "a"));
    EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
}

TEST(Fnv1a, KnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace vrag
