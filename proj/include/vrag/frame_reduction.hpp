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

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "vrag/corpus_store.hpp"
#include "vrag/error.hpp"
#include "vrag/random.hpp"
#include "vrag/vector_math.hpp"

namespace vrag {

struct ClusterAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;  // per frame, in [0, k)
    std::vector<Vector> centroids;
    double cost = 0.0;  // sum of squared distances to assigned centroids
    std::size_t iterations = 0;
    std::vector<double> cost_history;  // initial cost, then one entry per iteration
};

struct LloydOptions {
    std::size_t max_iters = 100;
    double tol = 1e-4;  // relative cost change
};

/// Indices of the k frames chosen by D^2 seeding. The first pick is uniform;
/// each later pick is drawn with probability proportional to the squared
/// distance to the nearest pick so far. When every remaining frame coincides
/// with a pick (all weights zero) the lowest unpicked index is taken.
inline std::vector<std::size_t> kmeans_pp_seed_indices(std::span<const Vector> frames, std::size_t k, std::uint64_t seed) {
    if (k == 0 || frames.size() < k) {
        fail(ErrorKind::TooFewFrames, std::to_string(frames.size()) + " frames for k=" + std::to_string(k));
    }
    Rng rng(seed);
    const std::size_t n = frames.size();
    std::vector<std::size_t> picks{rng.index(n)};
    std::vector<bool> picked(n, false);
    picked[picks[0]] = true;
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(frames[i], frames[picks[0]]);

    while (picks.size() < k) {
        double total = 0.0;
        for (double d : nearest) total += d;
        std::size_t choice = n;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (nearest[i] <= 0.0) continue;
                choice = i;  // last positive-weight frame absorbs rounding at the top end
                cumulative += nearest[i];
                if (target < cumulative) break;
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (!picked[i]) {
                    choice = i;
                    break;
                }
            }
        }
        picks.push_back(choice);
        picked[choice] = true;
        for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], squared_distance(frames[i], frames[choice]));
    }
    return picks;
}

inline std::vector<Vector> kmeans_pp_seed(std::span<const Vector> frames, std::size_t k, std::uint64_t seed) {
    std::vector<Vector> centroids;
    for (std::size_t i : kmeans_pp_seed_indices(frames, k, seed)) centroids.push_back(frames[i]);
    return centroids;
}

inline std::vector<Vector> kmeans_pp_seed(const EmbeddingMatrix& frames, std::size_t k, std::uint64_t seed) {
    const auto rows = frames.rows();
    return kmeans_pp_seed(rows, k, seed);
}

namespace detail {

inline std::size_t nearest_centroid(std::span<const double> x, std::span<const Vector> centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(x, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

inline double assignment_cost(std::span<const Vector> frames, std::span<const std::size_t> assignment, std::span<const Vector> centroids) {
    double cost = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) cost += squared_distance(frames[i], centroids[assignment[i]]);
    return cost;
}

// Every empty cluster takes the frame farthest from its current centroid,
// drawn only from clusters that keep at least one other member.
inline void repair_empty_clusters(std::span<const Vector> frames, std::vector<std::size_t>& assignment, std::vector<Vector>& centroids) {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (std::size_t c : assignment) ++sizes[c];
    for (std::size_t empty = 0; empty < centroids.size(); ++empty) {
        if (sizes[empty] > 0) continue;
        std::size_t donor = frames.size();
        double farthest = -1.0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (sizes[assignment[i]] < 2) continue;
            const double d = squared_distance(frames[i], centroids[assignment[i]]);
            if (d > farthest) {
                farthest = d;
                donor = i;
            }
        }
        --sizes[assignment[donor]];
        assignment[donor] = empty;
        sizes[empty] = 1;
        centroids[empty] = frames[donor];
    }
}

inline void update_centroids(std::span<const Vector> frames, std::span<const std::size_t> assignment, std::vector<Vector>& centroids) {
    const std::size_t dim = centroids.front().size();
    std::vector<Vector> sums(centroids.size(), Vector(dim, 0.0));
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto& s = sums[assignment[i]];
        for (std::size_t d = 0; d < dim; ++d) s[d] += frames[i][d];
        ++sizes[assignment[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (sizes[c] == 0) continue;
        for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(sizes[c]);
    }
}

}  // namespace detail

/// Lloyd iteration from the given seeds. Each iteration assigns every frame
/// to its nearest centroid (ties to the lower cluster index), repairs empty
/// clusters, then moves centroids to member means.
inline ClusterAssignment lloyd_cluster(std::span<const Vector> frames, std::span<const Vector> seeds, LloydOptions opts = {}) {
    if (seeds.empty()) fail(ErrorKind::EmptyInput, "no seed centroids");
    if (opts.max_iters < 1) fail(ErrorKind::InvalidConfig, "max_iters must be >= 1");
    if (frames.size() < seeds.size()) fail(ErrorKind::TooFewFrames, "fewer frames than centroids");
    for (const auto& s : seeds) require_same_dim(s, seeds.front());
    for (const auto& f : frames) require_same_dim(f, seeds.front());

    ClusterAssignment out;
    out.k = seeds.size();
    out.centroids.assign(seeds.begin(), seeds.end());
    out.assignment.resize(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) out.assignment[i] = detail::nearest_centroid(frames[i], out.centroids);
    double previous = detail::assignment_cost(frames, out.assignment, out.centroids);
    out.cost_history.push_back(previous);

    while (out.iterations < opts.max_iters) {
        ++out.iterations;
        for (std::size_t i = 0; i < frames.size(); ++i) out.assignment[i] = detail::nearest_centroid(frames[i], out.centroids);
        detail::repair_empty_clusters(frames, out.assignment, out.centroids);
        detail::update_centroids(frames, out.assignment, out.centroids);
        const double cost = detail::assignment_cost(frames, out.assignment, out.centroids);
        out.cost_history.push_back(cost);
        const bool converged = previous <= 0.0 || (previous - cost) / previous < opts.tol;
        previous = cost;
        if (converged) break;
    }
    out.cost = previous;
    return out;
}

/// Representative frame indices: one per k-means++/Lloyd cluster, the member
/// nearest its centroid (lowest index on ties), sorted ascending. With no more
/// frames than clusters every index is returned.
inline std::vector<std::size_t> reduce_frames(std::span<const Vector> frames, std::size_t k, std::uint64_t seed, LloydOptions opts = {}) {
    if (frames.empty()) fail(ErrorKind::EmptyInput, "no frames to reduce");
    if (k == 0) fail(ErrorKind::InvalidConfig, "k must be positive");
    std::vector<std::size_t> out(std::min(k, frames.size()));
    if (frames.size() <= k) {
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    const auto seeds = kmeans_pp_seed(frames, k, seed);
    const auto clusters = lloyd_cluster(frames, seeds, opts);
    std::vector<double> best_d(k, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::size_t c = clusters.assignment[i];
        const double d = squared_distance(frames[i], clusters.centroids[c]);
        if (d < best_d[c]) {
            best_d[c] = d;
            out[c] = i;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<std::size_t> reduce_frames(const EmbeddingMatrix& frames, std::size_t k, std::uint64_t seed, LloydOptions opts = {}) {
    const auto rows = frames.rows();
    return reduce_frames(rows, k, seed, opts);
}

/// Evenly spaced stride: floor(i * n / m) for i in [0, m). All frames when n <= m.
inline std::vector<std::size_t> uniform_stride(std::size_t frame_count, std::size_t m) {
    std::vector<std::size_t> out;
    if (frame_count <= m) {
        out.resize(frame_count);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back(i * frame_count / m);
    return out;
}

}  // namespace vrag
