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

#include <set>

#include "test_support.hpp"
#include "vrag/frame_reduction.hpp"

namespace vrag {
namespace {

std::vector<Vector> blobs(Rng& rng, const std::vector<Vector>& centres, std::size_t per_blob, double spread) {
    std::vector<Vector> out;
    for (const auto& c : centres) {
        for (std::size_t i = 0; i < per_blob; ++i) {
            Vector v = c;
            for (double& x : v) x += spread * rng.normal();
            out.push_back(v);
        }
    }
    return out;
}

TEST(KmeansPP, KEqualsCountPicksEveryFrame) {
    Rng rng(3);
    std::vector<Vector> frames;
    for (int i = 0; i < 7; ++i) frames.push_back(testing::random_vector(rng, 5));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto picks = kmeans_pp_seed_indices(frames, 7, seed);
        std::sort(picks.begin(), picks.end());
        EXPECT_EQ(picks, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
    }
}

TEST(KmeansPP, IdenticalFramesKOne) {
    const std::vector<Vector> frames(5, Vector{1.5, -2.0});
    const auto c = kmeans_pp_seed(frames, 1, 9);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0], (Vector{1.5, -2.0}));
}

TEST(KmeansPP, TooFewFrames) {
    const std::vector<Vector> frames(3, Vector{1.0});
    EXPECT_THROW(kmeans_pp_seed(frames, 4, 0), Error);
    EXPECT_THROW(kmeans_pp_seed(frames, 0, 0), Error);
}

// Exact probability that D^2 seeding with k=2 lands one seed in each blob:
// average over the uniform first pick of the other blob's share of D^2 mass.
double exact_split_probability(const std::vector<Vector>& frames, std::size_t per_blob) {
    double p = 0.0;
    for (std::size_t first = 0; first < frames.size(); ++first) {
        double total = 0.0, other = 0.0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < frames[i].size(); ++j) d += (frames[i][j] - frames[first][j]) * (frames[i][j] - frames[first][j]);
            total += d;
            if ((i < per_blob) != (first < per_blob)) other += d;
        }
        p += other / total;
    }
    return p / static_cast<double>(frames.size());
}

TEST(KmeansPP, TwoBlobsOneSeedEach) {
    Rng rng(11);
    const std::size_t per_blob = 50;
    const auto frames = blobs(rng, {{0.0, 0.0}, {10.0, 10.0}}, per_blob, 0.5);
    const double exact = exact_split_probability(frames, per_blob);
    ASSERT_GE(exact, 0.95);
    int split = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto picks = kmeans_pp_seed_indices(frames, 2, seed);
        if ((picks[0] < per_blob) != (picks[1] < per_blob)) ++split;
    }
    EXPECT_GE(split, 950);
    // binomial sd at n=1000 is under 0.01; allow 4 sd
    EXPECT_NEAR(split / 1000.0, exact, 0.04);
}

TEST(KmeansPP, Deterministic) {
    Rng rng(5);
    std::vector<Vector> frames;
    for (int i = 0; i < 40; ++i) frames.push_back(testing::random_vector(rng, 8));
    EXPECT_EQ(kmeans_pp_seed_indices(frames, 6, 77), kmeans_pp_seed_indices(frames, 6, 77));
}

TEST(Lloyd, AlreadyConverged) {
    const std::vector<Vector> frames{{0.0, 0.0}, {5.0, 5.0}, {-3.0, 1.0}};
    const auto r = lloyd_cluster(frames, frames);
    EXPECT_LE(r.iterations, 1u);
    EXPECT_EQ(r.cost, 0.0);
    EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Lloyd, SquareCorners) {
    for (double side : {1.0, 2.0, 6.0}) {
        const std::vector<Vector> frames{{0.0, 0.0}, {side, 0.0}, {0.0, side}, {side, side}};
        const std::vector<Vector> seeds{{0.0, 0.0}, {side, 0.0}};
        const auto r = lloyd_cluster(frames, seeds);
        EXPECT_NEAR(r.cost, 4.0 * (side / 2) * (side / 2), 1e-12);
        EXPECT_EQ(r.centroids[0], (Vector{0.0, side / 2}));
        EXPECT_EQ(r.centroids[1], (Vector{side, side / 2}));
    }
}

TEST(Lloyd, CostNonIncreasingAndConsistent) {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        std::vector<Vector> frames;
        for (int i = 0; i < 100; ++i) frames.push_back(testing::random_vector(rng, 4));
        const auto seeds = kmeans_pp_seed(frames, 5, static_cast<std::uint64_t>(t));
        const auto r = lloyd_cluster(frames, seeds);
        ASSERT_GE(r.cost_history.size(), 2u);
        for (std::size_t i = 1; i < r.cost_history.size(); ++i) {
            EXPECT_LE(r.cost_history[i], r.cost_history[i - 1] * (1 + 1e-12));
        }
        EXPECT_LE(r.cost, r.cost_history.front());
        double recomputed = 0.0;
        std::vector<int> sizes(5, 0);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            recomputed += squared_distance(frames[i], r.centroids[r.assignment[i]]);
            ++sizes[r.assignment[i]];
        }
        EXPECT_NEAR(r.cost, recomputed, 1e-6 * recomputed);
        for (int s : sizes) EXPECT_GE(s, 1);
    }
}

TEST(Lloyd, RepairsEmptyCluster) {
    // second seed is far from every frame, so it starts empty
    const std::vector<Vector> frames{{0.0}, {1.0}, {2.0}, {10.0}};
    const std::vector<Vector> seeds{{0.0}, {100.0}};
    const auto r = lloyd_cluster(frames, seeds);
    std::set<std::size_t> used(r.assignment.begin(), r.assignment.end());
    EXPECT_EQ(used.size(), 2u);
}

TEST(Lloyd, DimMismatchAndBadOptions) {
    const std::vector<Vector> frames{{0.0, 1.0}, {1.0, 0.0}};
    const std::vector<Vector> seeds{{0.0}};
    try {
        lloyd_cluster(frames, seeds);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimMismatch);
    }
    EXPECT_THROW(lloyd_cluster(frames, frames, LloydOptions{0, 1e-4}), Error);
}

TEST(ReduceFrames, FewerFramesThanClusters) {
    Rng rng(1);
    std::vector<Vector> frames;
    for (int i = 0; i < 6; ++i) frames.push_back(testing::random_vector(rng, 3));
    EXPECT_EQ(reduce_frames(frames, 8, 0), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
    EXPECT_EQ(reduce_frames(frames, 6, 0), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(ReduceFrames, IdenticalFrames) {
    const std::vector<Vector> frames(8, Vector{0.3, 0.3, 0.3});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EXPECT_EQ(reduce_frames(frames, 4, seed), (std::vector<std::size_t>{0, 1, 2, 3}));
    }
}

TEST(ReduceFrames, OneIndexPerBlob) {
    Rng rng(2);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto frames = blobs(rng, {{0, 0, 0}, {20, 0, 0}, {0, 20, 0}}, 10, 0.3);
        const auto idx = reduce_frames(frames, 3, seed);
        ASSERT_EQ(idx.size(), 3u);
        std::set<std::size_t> hit;
        for (std::size_t i : idx) hit.insert(i / 10);
        EXPECT_EQ(hit.size(), 3u) << "seed " << seed;
    }
}

TEST(ReduceFrames, PicksMemberNearestCentroid) {
    // one blob with an exact centre member at index 2
    const std::vector<Vector> frames{{-1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}, {0.0, -1.0},
                                     {50.0, 50.0}, {51.0, 50.0}};
    const auto idx = reduce_frames(frames, 2, 4);
    EXPECT_EQ(idx, (std::vector<std::size_t>{2, 5}));
}

TEST(ReduceFrames, OutputPropertiesAndDeterminism) {
    Rng rng(6);
    for (int t = 0; t < 30; ++t) {
        std::vector<Vector> frames;
        const std::size_t n = 1 + rng.index(60);
        for (std::size_t i = 0; i < n; ++i) frames.push_back(testing::random_vector(rng, 6));
        const std::size_t k = 1 + rng.index(16);
        const auto a = reduce_frames(frames, k, static_cast<std::uint64_t>(t));
        EXPECT_EQ(a, reduce_frames(frames, k, static_cast<std::uint64_t>(t)));
        EXPECT_EQ(a.size(), std::min(k, n));
        EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
        EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), a.size());
        for (std::size_t i : a) EXPECT_LT(i, n);
    }
}

TEST(ReduceFrames, EmptyInput) {
    const std::vector<Vector> none;
    EXPECT_THROW(reduce_frames(none, 2, 0), Error);
}

TEST(UniformStride, Examples) {
    EXPECT_EQ(uniform_stride(10, 4), (std::vector<std::size_t>{0, 2, 5, 7}));
    EXPECT_EQ(uniform_stride(3, 4), (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(uniform_stride(8, 8), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
    EXPECT_EQ(uniform_stride(100, 1), (std::vector<std::size_t>{0}));
}

}  // namespace
}  // namespace vrag
