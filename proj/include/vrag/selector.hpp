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
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrag/corpus_store.hpp"
#include "vrag/error.hpp"
#include "vrag/frame_reduction.hpp"
#include "vrag/neural_core.hpp"
#include "vrag/random.hpp"
#include "vrag/vector_math.hpp"

namespace vrag {

enum class SelectorMode { Retrieval, Generation };

inline std::string_view to_string(SelectorMode m) { return m == SelectorMode::Retrieval ? "retrieval" : "generation"; }

inline SelectorMode parse_selector_mode(std::string_view s) {
    if (s == "retrieval") return SelectorMode::Retrieval;
    if (s == "generation") return SelectorMode::Generation;
    fail(ErrorKind::SchemaViolation, "mode (expected retrieval|generation, got " + std::string(s) + ")");
}

using Subset = std::vector<std::size_t>;

struct SubsetCandidate {
    std::string video_id;
    Subset frame_indices;  // strictly increasing indices into the candidate list
    std::optional<double> score;
};

/// Frames that survived reduction, in timestamp order.
struct FrameCandidates {
    std::string video_id;
    std::vector<Vector> frames;
    std::vector<double> timestamps;
    std::vector<std::size_t> source_indices;  // rows of the original embedding matrix

    [[nodiscard]] std::size_t size() const { return frames.size(); }
};

inline FrameCandidates reduce_candidates(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed) {
    FrameCandidates c;
    c.video_id = matrix.video_id;
    const auto rows = matrix.rows();
    c.source_indices = reduce_frames(rows, k, seed);
    for (std::size_t i : c.source_indices) {
        c.frames.push_back(rows[i]);
        c.timestamps.push_back(matrix.timestamp(i));
    }
    return c;
}

/// The scorer f. Retrieval: one MLP over the concatenation of m frames,
/// score = positive-class logit. Generation: a frame tower over the mean frame
/// and a query tower, score = dot product of the two tower outputs.
struct SelectorModel {
    SelectorMode mode = SelectorMode::Retrieval;
    std::size_t m = 4;
    std::size_t candidate_count = 8;
    std::size_t embedding_dim = 0;
    MlpParams scorer;       // retrieval only
    MlpParams frame_tower;  // generation only
    MlpParams query_tower;  // generation only

    bool operator==(const SelectorModel&) const = default;
};

inline SelectorModel make_retrieval_selector(std::size_t m, std::size_t candidate_count, std::size_t dim, std::size_t hidden1 = 512,
                                             std::size_t hidden2 = 256, std::uint64_t seed = 0) {
    if (m == 0 || dim == 0) fail(ErrorKind::InvalidConfig, "selector m and dim must be positive");
    SelectorModel model;
    model.mode = SelectorMode::Retrieval;
    model.m = m;
    model.candidate_count = candidate_count;
    model.embedding_dim = dim;
    model.scorer = make_mlp({m * dim, hidden1, hidden2, 2}, seed);
    return model;
}

inline SelectorModel make_generation_selector(std::size_t m, std::size_t candidate_count, std::size_t dim, std::size_t hidden1 = 512,
                                              std::size_t hidden2 = 512, std::size_t projection = 256, std::uint64_t seed = 0) {
    if (m == 0 || dim == 0) fail(ErrorKind::InvalidConfig, "selector m and dim must be positive");
    SelectorModel model;
    model.mode = SelectorMode::Generation;
    model.m = m;
    model.candidate_count = candidate_count;
    model.embedding_dim = dim;
    model.frame_tower = make_mlp({dim, hidden1, hidden2, projection}, derive_seed(seed, "selector", "frame_tower"));
    model.query_tower = make_mlp({dim, hidden1, hidden2, projection}, derive_seed(seed, "selector", "query_tower"));
    return model;
}

inline void validate(const SelectorModel& model) {
    if (model.m == 0 || model.candidate_count == 0 || model.embedding_dim == 0) fail(ErrorKind::SchemaViolation, "selector sizes must be positive");
    if (model.mode == SelectorMode::Retrieval) {
        if (model.scorer.in_dim() != model.m * model.embedding_dim || model.scorer.out_dim() != 2) {
            fail(ErrorKind::SchemaViolation, "retrieval scorer must map m x dim inputs to 2 logits");
        }
    } else {
        if (model.frame_tower.in_dim() != model.embedding_dim || model.query_tower.in_dim() != model.embedding_dim) {
            fail(ErrorKind::SchemaViolation, "generation towers must take dim-wide inputs");
        }
        if (model.frame_tower.out_dim() != model.query_tower.out_dim()) fail(ErrorKind::SchemaViolation, "generation towers must share output dim");
    }
}

inline std::vector<Vector> gather(std::span<const Vector> frames, std::span<const std::size_t> subset) {
    std::vector<Vector> out;
    out.reserve(subset.size());
    for (std::size_t i : subset) {
        if (i >= frames.size()) fail(ErrorKind::DimMismatch, "subset index " + std::to_string(i) + " out of range");
        out.push_back(frames[i]);
    }
    return out;
}

inline Vector concat_frames(std::span<const Vector> frames) {
    Vector x;
    for (const auto& f : frames) x.insert(x.end(), f.begin(), f.end());
    return x;
}

/// Frames must arrive in ascending timestamp order; the concatenation is
/// position-sensitive.
inline double score_subset_retrieval(const SelectorModel& model, std::span<const Vector> frames, std::span<const double> timestamps) {
    if (model.mode != SelectorMode::Retrieval) fail(ErrorKind::WrongMode, "retrieval scoring on a generation selector");
    if (frames.size() != model.m) fail(ErrorKind::DimMismatch, "expected " + std::to_string(model.m) + " frames");
    if (timestamps.size() != frames.size()) fail(ErrorKind::DimMismatch, "one timestamp per frame");
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (!(timestamps[i] > timestamps[i - 1])) fail(ErrorKind::UnsortedFrames, "frames must be in ascending timestamp order");
    }
    for (const auto& f : frames) {
        if (f.size() != model.embedding_dim) fail(ErrorKind::DimMismatch, "frame width");
    }
    return mlp_forward(model.scorer, concat_frames(frames))[1];
}

inline double score_subset_generation(const SelectorModel& model, std::span<const Vector> frames, std::span<const double> query) {
    if (model.mode != SelectorMode::Generation) fail(ErrorKind::WrongMode, "generation scoring on a retrieval selector");
    if (query.size() != model.embedding_dim) fail(ErrorKind::DimMismatch, "query width");
    const Vector pooled = mean_pool(frames);
    if (pooled.size() != model.embedding_dim) fail(ErrorKind::DimMismatch, "frame width");
    return dot(mlp_forward(model.frame_tower, pooled), mlp_forward(model.query_tower, query));
}

/// C(n, k), saturating at UINT64_MAX.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const std::uint64_t num = n - k + i;
        // result * num / i is always integral; guard the multiplication.
        const std::uint64_t g = std::gcd(result, i);
        const std::uint64_t r = result / g;
        const std::uint64_t d = i / g;
        const std::uint64_t q = num / d;
        if (r > UINT64_MAX / q) return UINT64_MAX;
        result = r * q;
    }
    return result;
}

/// All k-subsets of [0, n) in lexicographic order.
inline std::vector<Subset> enumerate_combinations(std::size_t n, std::size_t k) {
    std::vector<Subset> out;
    if (k > n) return out;
    Subset cur(k);
    std::iota(cur.begin(), cur.end(), std::size_t{0});
    while (true) {
        out.push_back(cur);
        std::size_t i = k;
        while (i > 0 && cur[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++cur[i - 1];
        for (std::size_t j = i; j < k; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

namespace detail {

inline Subset random_subset(Rng& rng, std::size_t n, std::size_t k) {
    // Partial Fisher-Yates: uniform over k-subsets.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(n - i)]);
    Subset s(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(s.begin(), s.end());
    return s;
}

}  // namespace detail

/// Distinct subsets of size min(m, n) drawn uniformly from the combination
/// space. When n_subsets covers the whole space the full enumeration is
/// returned in lexicographic order.
inline std::vector<Subset> sample_subsets(std::size_t candidate_count, std::size_t m, std::size_t n_subsets, std::uint64_t seed) {
    if (candidate_count == 0 || m == 0 || n_subsets == 0) fail(ErrorKind::InvalidConfig, "sample_subsets needs positive sizes");
    const std::size_t size = std::min(m, candidate_count);
    const std::uint64_t space = binomial(candidate_count, size);
    if (n_subsets >= space) return enumerate_combinations(candidate_count, size);
    Rng rng(seed);
    if (space <= 4 * static_cast<std::uint64_t>(n_subsets)) {
        // Dense regime: shuffle the enumeration instead of rejection sampling.
        auto all = enumerate_combinations(candidate_count, size);
        for (std::size_t i = 0; i < n_subsets; ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
        all.resize(n_subsets);
        return all;
    }
    std::vector<Subset> out;
    std::set<Subset> seen;
    while (out.size() < n_subsets) {
        Subset s = detail::random_subset(rng, candidate_count, size);
        if (seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
}

using SubsetScorer = std::function<double(std::span<const std::size_t>)>;

namespace detail {

inline bool better(double score, const Subset& subset, double best_score, const Subset& best) {
    return score > best_score || (score == best_score && subset < best);
}

}  // namespace detail

/// argmax of `score` over sampled subsets; ties go to the lexicographically
/// smallest index list. All candidates when candidate_count <= m.
inline SubsetCandidate select_frames_with(const SubsetScorer& score, std::size_t candidate_count, std::size_t m, std::size_t n_subsets,
                                          std::uint64_t seed) {
    SubsetCandidate out;
    if (candidate_count <= m) {
        out.frame_indices.resize(candidate_count);
        std::iota(out.frame_indices.begin(), out.frame_indices.end(), std::size_t{0});
        return out;
    }
    const auto subsets = sample_subsets(candidate_count, m, n_subsets, seed);
    std::vector<double> scores(subsets.size());
    for (std::size_t i = 0; i < subsets.size(); ++i) scores[i] = score(subsets[i]);
    std::size_t best = 0;
    for (std::size_t i = 1; i < subsets.size(); ++i) {
        if (detail::better(scores[i], subsets[i], scores[best], subsets[best])) best = i;
    }
    out.frame_indices = subsets[best];
    out.score = scores[best];
    return out;
}

inline SubsetScorer model_scorer(const SelectorModel& model, const FrameCandidates& candidates, const std::optional<Vector>& query) {
    if (model.mode == SelectorMode::Retrieval && query) fail(ErrorKind::WrongMode, "retrieval selection is query-independent");
    if (model.mode == SelectorMode::Generation && !query) fail(ErrorKind::MissingQuery, "generation selection needs the query");
    if (model.mode == SelectorMode::Retrieval) {
        return [&model, &candidates](std::span<const std::size_t> subset) {
            std::vector<double> ts;
            for (std::size_t i : subset) ts.push_back(candidates.timestamps.at(i));
            return score_subset_retrieval(model, gather(candidates.frames, subset), ts);
        };
    }
    return [&model, &candidates, q = *query](std::span<const std::size_t> subset) {
        return score_subset_generation(model, gather(candidates.frames, subset), q);
    };
}

inline SubsetCandidate select_frames(const SelectorModel& model, const FrameCandidates& candidates, const std::optional<Vector>& query,
                                     std::size_t n_subsets, std::uint64_t seed) {
    const auto scorer = model_scorer(model, candidates, query);
    SubsetCandidate out = select_frames_with(scorer, candidates.size(), model.m, n_subsets, seed);
    out.video_id = candidates.video_id;
    return out;
}

inline constexpr std::uint64_t kBruteForceCap = 1'000'000;

/// Exhaustive argmax over every m-subset, same tie-break as select_frames.
inline SubsetCandidate brute_force_select(const SubsetScorer& score, std::size_t candidate_count, std::size_t m) {
    SubsetCandidate out;
    if (candidate_count <= m) {
        out.frame_indices.resize(candidate_count);
        std::iota(out.frame_indices.begin(), out.frame_indices.end(), std::size_t{0});
        return out;
    }
    const std::uint64_t space = binomial(candidate_count, m);
    if (space > kBruteForceCap) fail(ErrorKind::SpaceTooLarge, "C(" + std::to_string(candidate_count) + ", " + std::to_string(m) + ")");
    double best_score = -std::numeric_limits<double>::infinity();
    bool have = false;
    for (const auto& subset : enumerate_combinations(candidate_count, m)) {
        const double s = score(subset);
        if (!have || detail::better(s, subset, best_score, out.frame_indices)) {
            best_score = s;
            out.frame_indices = subset;
            have = true;
        }
    }
    out.score = best_score;
    return out;
}

inline SubsetCandidate brute_force_select(const SelectorModel& model, const FrameCandidates& candidates, const std::optional<Vector>& query) {
    SubsetCandidate out = brute_force_select(model_scorer(model, candidates, query), candidates.size(), model.m);
    out.video_id = candidates.video_id;
    return out;
}

// ---------------------------------------------------------------------------
// Training data

struct SelectorPair {
    std::string query_id;
    Vector query;
    FrameCandidates candidates;
};

struct SelectorTrainingExample {
    std::optional<std::string> query_id;
    std::string video_id;
    Subset frame_indices;
    bool label = false;
    double raw_signal = 0.0;

    bool operator==(const SelectorTrainingExample&) const = default;
};

struct SkippedPair {
    std::string query_id;
    std::string video_id;
    std::string reason;
};

struct CollectedData {
    std::vector<SelectorTrainingExample> examples;
    std::vector<SkippedPair> skipped;
};

/// Raw signal for a subset: higher means the subset led to a better outcome.
using SubsetSignal = std::function<double(const SelectorPair&, std::span<const std::size_t>)>;

/// Retrieval labeling signal: cosine between the mean-pooled subset and the
/// query embedding.
inline SubsetSignal retrieval_similarity_signal() {
    return [](const SelectorPair& pair, std::span<const std::size_t> subset) {
        return cosine(mean_pool(gather(pair.candidates.frames, subset)), pair.query);
    };
}

inline constexpr std::size_t kLabelsPerSide = 3;

/// Per pair: sample subsets, score each with `signal`, rank by (signal desc,
/// subset lexicographic asc), label the top three True and the bottom three
/// False, drop the rest. Pairs whose candidate pool is smaller than m, or
/// whose combination space holds fewer than six subsets, are skipped with a
/// record instead of failing the batch.
inline CollectedData collect_training_data(std::span<const SelectorPair> pairs, std::size_t m, std::size_t n_subsets, std::uint64_t seed,
                                           const SubsetSignal& signal) {
    if (n_subsets < 2 * kLabelsPerSide) {
        fail(ErrorKind::TooFewSubsets, "need at least " + std::to_string(2 * kLabelsPerSide) + " subsets, got " + std::to_string(n_subsets));
    }
    CollectedData data;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& pair = pairs[p];
        const std::size_t n = pair.candidates.size();
        if (n < m) {
            data.skipped.push_back({pair.query_id, pair.candidates.video_id, "fewer candidates than m"});
            continue;
        }
        if (binomial(n, m) < 2 * kLabelsPerSide) {
            data.skipped.push_back({pair.query_id, pair.candidates.video_id, "combination space smaller than six"});
            continue;
        }
        const auto subsets = sample_subsets(n, m, n_subsets, derive_seed(seed, p));
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = 0; i < subsets.size(); ++i) {
            const double s = signal(pair, subsets[i]);
            if (!std::isfinite(s)) fail(ErrorKind::ContractViolation, "non-finite labeling signal for " + pair.candidates.video_id);
            ranked.emplace_back(s, i);
        }
        std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return subsets[a.second] < subsets[b.second];
        });
        auto emit = [&](std::size_t rank, bool label) {
            const auto& [s, i] = ranked[rank];
            data.examples.push_back({pair.query_id.empty() ? std::nullopt : std::optional<std::string>(pair.query_id),
                                     pair.candidates.video_id, subsets[i], label, s});
        };
        for (std::size_t r = 0; r < kLabelsPerSide; ++r) emit(r, true);
        for (std::size_t r = ranked.size() - kLabelsPerSide; r < ranked.size(); ++r) emit(r, false);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Training

struct SelectorTrainResult {
    SelectorModel model;
    std::vector<double> loss_trace;
    double train_accuracy = 0.0;
};

namespace detail {

inline std::string pair_key(const std::optional<std::string>& query_id, std::string_view video_id) {
    return query_id.value_or("") + '\x1f' + std::string(video_id);
}

inline std::map<std::string, const SelectorPair*> index_pairs(std::span<const SelectorPair> pairs) {
    std::map<std::string, const SelectorPair*> lookup;
    for (const auto& p : pairs) {
        lookup[pair_key(p.query_id.empty() ? std::nullopt : std::optional<std::string>(p.query_id), p.candidates.video_id)] = &p;
    }
    return lookup;
}

inline const SelectorPair& find_pair(const std::map<std::string, const SelectorPair*>& lookup, const SelectorTrainingExample& ex) {
    auto it = lookup.find(pair_key(ex.query_id, ex.video_id));
    if (it == lookup.end()) fail(ErrorKind::SchemaViolation, "training example references unknown pair " + ex.video_id);
    return *it->second;
}

struct GenerationItem {
    Vector pooled;
    Vector query;
    double target = 0.0;
};

inline double generation_step_loss(double s, double y) {
    // Two-class cross-entropy on logits (0, s).
    const double softplus = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    return softplus - y * s;
}

}  // namespace detail

inline std::vector<LabeledExample> retrieval_training_set(const SelectorModel& model, std::span<const SelectorPair> pairs,
                                                          std::span<const SelectorTrainingExample> examples) {
    const auto lookup = detail::index_pairs(pairs);
    std::vector<LabeledExample> data;
    for (const auto& ex : examples) {
        const auto& pair = detail::find_pair(lookup, ex);
        if (ex.frame_indices.size() != model.m) fail(ErrorKind::DimMismatch, "training subset size differs from m");
        data.push_back({concat_frames(gather(pair.candidates.frames, ex.frame_indices)), ex.label ? 1u : 0u});
    }
    return data;
}

/// Fits the scorer on collected examples with softmax cross-entropy.
/// Retrieval mode trains the concat MLP directly; generation mode treats
/// (0, score) as the two logits and backpropagates through both towers.
inline SelectorTrainResult train_selector(SelectorModel model, std::span<const SelectorPair> pairs,
                                          std::span<const SelectorTrainingExample> examples, const TrainConfig& cfg) {
    validate(model);
    validate(cfg);
    if (examples.empty()) fail(ErrorKind::EmptyDataset, "no selector training examples");
    SelectorTrainResult result;
    if (model.mode == SelectorMode::Retrieval) {
        const auto data = retrieval_training_set(model, pairs, examples);
        auto trained = train(model.scorer, data, cfg);
        model.scorer = std::move(trained.params);
        result.loss_trace = std::move(trained.loss_trace);
        result.train_accuracy = accuracy(model.scorer, data);
        result.model = std::move(model);
        return result;
    }

    const auto lookup = detail::index_pairs(pairs);
    std::vector<detail::GenerationItem> items;
    for (const auto& ex : examples) {
        const auto& pair = detail::find_pair(lookup, ex);
        items.push_back({mean_pool(gather(pair.candidates.frames, ex.frame_indices)), pair.query, ex.label ? 1.0 : 0.0});
        if (items.back().pooled.size() != model.embedding_dim || items.back().query.size() != model.embedding_dim) {
            fail(ErrorKind::DimMismatch, "generation training input width");
        }
    }
    Optimizer opt(cfg);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    MlpGradients g_frame = zero_mlp(model.frame_tower.layer_dims);
    MlpGradients g_query = zero_mlp(model.query_tower.layer_dims);
    std::vector<std::vector<double>*> params;
    std::vector<const std::vector<double>*> grads;
    for (auto* b : parameter_blocks(model.frame_tower)) params.push_back(b);
    for (auto* b : parameter_blocks(model.query_tower)) params.push_back(b);
    for (auto* b : parameter_blocks(g_frame)) grads.push_back(b);
    for (auto* b : parameter_blocks(g_query)) grads.push_back(b);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto* b : parameter_blocks(g_frame)) std::fill(b->begin(), b->end(), 0.0);
            for (auto* b : parameter_blocks(g_query)) std::fill(b->begin(), b->end(), 0.0);
            for (std::size_t j = start; j < end; ++j) {
                const auto& item = items[order[j]];
                const ForwardTrace tf = mlp_forward_trace(model.frame_tower, item.pooled);
                const ForwardTrace tq = mlp_forward_trace(model.query_tower, item.query);
                const double s = dot(tf.post[2], tq.post[2]);
                loss_sum += detail::generation_step_loss(s, item.target);
                const double ds = 1.0 / (1.0 + std::exp(-s)) - item.target;
                Vector d_frame(tq.post[2]);
                Vector d_query(tf.post[2]);
                for (double& v : d_frame) v *= ds;
                for (double& v : d_query) v *= ds;
                mlp_backward_accumulate(model.frame_tower, item.pooled, tf, d_frame, g_frame);
                mlp_backward_accumulate(model.query_tower, item.query, tq, d_query, g_query);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto* b : parameter_blocks(g_frame)) {
                for (double& v : *b) v *= scale;
            }
            for (auto* b : parameter_blocks(g_query)) {
                for (double& v : *b) v *= scale;
            }
            opt.step(params, grads);
        }
        result.loss_trace.push_back(loss_sum / static_cast<double>(items.size()));
    }
    std::size_t hits = 0;
    for (const auto& item : items) {
        const double s = dot(mlp_forward(model.frame_tower, item.pooled), mlp_forward(model.query_tower, item.query));
        hits += ((s > 0.0) == (item.target > 0.5)) ? 1 : 0;
    }
    result.train_accuracy = static_cast<double>(hits) / static_cast<double>(items.size());
    result.model = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::ordered_json selector_to_json(const SelectorModel& model) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(model.mode);
    j["m"] = model.m;
    j["candidate_count"] = model.candidate_count;
    j["embedding_dim"] = model.embedding_dim;
    nlohmann::ordered_json nets;
    if (model.mode == SelectorMode::Retrieval) {
        nets["scorer"] = mlp_to_json(model.scorer, to_string(model.mode));
    } else {
        nets["frame_tower"] = mlp_to_json(model.frame_tower, to_string(model.mode));
        nets["query_tower"] = mlp_to_json(model.query_tower, to_string(model.mode));
    }
    j["nets"] = std::move(nets);
    return j;
}

inline SelectorModel selector_from_json(const nlohmann::json& j) {
    SelectorModel model;
    try {
        model.mode = parse_selector_mode(j.at("mode").get<std::string>());
        model.m = j.at("m").get<std::size_t>();
        model.candidate_count = j.at("candidate_count").get<std::size_t>();
        model.embedding_dim = j.at("embedding_dim").get<std::size_t>();
        const auto& nets = j.at("nets");
        if (model.mode == SelectorMode::Retrieval) {
            model.scorer = mlp_from_json(nets.at("scorer"));
        } else {
            model.frame_tower = mlp_from_json(nets.at("frame_tower"));
            model.query_tower = mlp_from_json(nets.at("query_tower"));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("selector JSON: ") + e.what());
    }
    validate(model);
    return model;
}

inline void save_selector(const SelectorModel& model, const fs::path& path) { binary::write_file(path, selector_to_json(model).dump() + "\n"); }

inline SelectorModel load_selector(const fs::path& path) {
    try {
        return selector_from_json(nlohmann::json::parse(binary::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("selector file is not JSON: ") + e.what());
    }
}

inline nlohmann::ordered_json to_json(const SelectorTrainingExample& ex) {
    nlohmann::ordered_json j;
    j["query_id"] = ex.query_id ? nlohmann::ordered_json(*ex.query_id) : nlohmann::ordered_json(nullptr);
    j["video_id"] = ex.video_id;
    j["frame_indices"] = ex.frame_indices;
    j["label"] = ex.label;
    j["raw_signal"] = ex.raw_signal;
    return j;
}

inline SelectorTrainingExample training_example_from_json(const nlohmann::json& j) {
    try {
        SelectorTrainingExample ex;
        if (!j.at("query_id").is_null()) ex.query_id = j.at("query_id").get<std::string>();
        ex.video_id = j.at("video_id").get<std::string>();
        ex.frame_indices = j.at("frame_indices").get<Subset>();
        ex.label = j.at("label").get<bool>();
        ex.raw_signal = j.at("raw_signal").get<double>();
        return ex;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("training example: ") + e.what());
    }
}

inline std::string training_examples_to_jsonl(std::span<const SelectorTrainingExample> examples) {
    std::string out;
    for (const auto& ex : examples) out += to_json(ex).dump() + "\n";
    return out;
}

inline std::vector<SelectorTrainingExample> training_examples_from_jsonl(std::string_view text) {
    std::vector<SelectorTrainingExample> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            try {
                out.push_back(training_example_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorKind::SchemaViolation, std::string("training examples JSONL: ") + e.what());
            }
        }
        start = end + 1;
    }
    return out;
}

}  // namespace vrag
