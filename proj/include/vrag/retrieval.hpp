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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrag/binary_io.hpp"
#include "vrag/corpus_store.hpp"
#include "vrag/error.hpp"
#include "vrag/frame_reduction.hpp"
#include "vrag/random.hpp"
#include "vrag/selector.hpp"
#include "vrag/vector_math.hpp"

namespace vrag {

enum class FrameStrategy { Uniform, Adaptive };

inline std::string_view to_string(FrameStrategy s) { return s == FrameStrategy::Uniform ? "uniform" : "adaptive"; }

struct IndexEntry {
    std::string video_id;
    std::optional<Vector> visual_repr;
    std::optional<Vector> text_repr;
    Vector ensemble_repr;

    bool operator==(const IndexEntry&) const = default;
};

/// Immutable after construction; safe to query from any number of threads.
struct VideoIndex {
    std::string corpus_id;
    double alpha = 0.6;
    std::uint32_t dim = 0;
    std::vector<IndexEntry> entries;
    FrameStrategy selector_mode = FrameStrategy::Uniform;
    std::size_t frames_per_video = 4;
};

struct RankedVideo {
    std::string video_id;
    double score = 0.0;
};

struct RetrievalResult {
    std::string query_id;
    std::vector<RankedVideo> ranked;  // descending score, ties by ascending id
    std::size_t k = 1;
};

struct ReprConfig {
    double alpha = 0.6;
    std::size_t frames_per_video = 4;
    std::size_t candidates = 8;
    std::size_t n_subsets = 70;  // C(8, 4): exhaustive at the default sizes
    std::uint64_t seed = 0;
    bool require_text = true;  // alpha > 0 without a text embedding is an error
};

/// Visual representation: frames_per_video frames (uniform stride, or
/// reduce_frames -> select_frames when a retrieval selector is supplied),
/// mean-pooled and normalized. The ensemble interpolates the normalized text
/// embedding with it; without text the ensemble is the visual vector.
inline IndexEntry embed_video_repr(const VideoRecord& video, const EmbeddingMatrix& visual, const std::optional<Vector>& text,
                                   const SelectorModel* selector, const ReprConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) fail(ErrorKind::AlphaOutOfRange, "alpha=" + std::to_string(cfg.alpha));
    if (visual.count == 0) fail(ErrorKind::EmptyInput, video.video_id + ": no visual frames");
    if (text && text->size() != visual.dim) fail(ErrorKind::DimMismatch, video.video_id + ": text vs visual embedding width");

    const auto rows = visual.rows();
    std::vector<Vector> chosen;
    if (selector) {
        if (selector->mode != SelectorMode::Retrieval) fail(ErrorKind::WrongMode, "index building needs a retrieval selector");
        if (selector->embedding_dim != visual.dim) fail(ErrorKind::DimMismatch, video.video_id + ": selector embedding width");
        const auto candidates = reduce_candidates(visual, cfg.candidates, derive_seed(cfg.seed, "index", video.video_id + "/reduce"));
        const auto subset = select_frames(*selector, candidates, std::nullopt, cfg.n_subsets,
                                          derive_seed(cfg.seed, "index", video.video_id + "/select"));
        chosen = gather(candidates.frames, subset.frame_indices);
    } else {
        chosen = gather(rows, uniform_stride(rows.size(), cfg.frames_per_video));
    }

    IndexEntry entry;
    entry.video_id = video.video_id;
    entry.visual_repr = l2_normalize(mean_pool(chosen));
    if (text) {
        entry.text_repr = l2_normalize(*text);
        entry.ensemble_repr = interpolate_ensemble(*entry.text_repr, *entry.visual_repr, cfg.alpha);
    } else {
        if (cfg.alpha > 0.0 && cfg.require_text) {
            fail(ErrorKind::MissingTextEmbedding, video.video_id + " has no text embedding (enable transcripts or set alpha=0)");
        }
        entry.ensemble_repr = *entry.visual_repr;
    }
    return entry;
}

struct IndexBuildConfig {
    ReprConfig repr;
    fs::path embedding_root;  // resolved embedding_dir
    const SelectorModel* selector = nullptr;
};

inline VideoIndex build_index(const CorpusManifest& manifest, const IndexBuildConfig& cfg) {
    VideoIndex index;
    index.corpus_id = manifest.corpus_id;
    index.alpha = cfg.repr.alpha;
    index.dim = manifest.embedding_dim;
    index.selector_mode = cfg.selector ? FrameStrategy::Adaptive : FrameStrategy::Uniform;
    index.frames_per_video = cfg.selector ? cfg.selector->m : cfg.repr.frames_per_video;
    for (const auto& video : manifest.videos) {
        try {
            const auto visual = read_embeddings(embedding_path(cfg.embedding_root, video.video_id, Modality::Visual));
            if (visual.modality != Modality::Visual) fail(ErrorKind::InvalidMatrix, "visual file holds a text embedding");
            if (visual.dim != manifest.embedding_dim) fail(ErrorKind::DimMismatch, "visual embedding width differs from manifest");
            std::optional<Vector> text;
            const auto text_path = embedding_path(cfg.embedding_root, video.video_id, Modality::Text);
            if (fs::exists(text_path)) {
                const auto t = read_embeddings(text_path);
                if (t.modality != Modality::Text) fail(ErrorKind::InvalidMatrix, "text file holds a visual embedding");
                if (t.dim != manifest.embedding_dim) fail(ErrorKind::DimMismatch, "text embedding width differs from manifest");
                text = t.row_vector(0);
            }
            index.entries.push_back(embed_video_repr(video, visual, text, cfg.selector, cfg.repr));
        } catch (const Error& e) {
            throw Error(e.kind(), "video " + video.video_id + ": " + e.detail());
        }
    }
    return index;
}

/// Same index with every ensemble vector re-interpolated at a new alpha.
/// Reuses the pooled visual and text vectors, so frame selection is not rerun.
inline VideoIndex reweight_index(VideoIndex index, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::AlphaOutOfRange, "alpha=" + std::to_string(alpha));
    index.alpha = alpha;
    for (auto& e : index.entries) {
        if (!e.visual_repr) fail(ErrorKind::InvalidMatrix, "video " + e.video_id + ": index entry has no visual vector");
        if (e.text_repr) {
            e.ensemble_repr = interpolate_ensemble(*e.text_repr, *e.visual_repr, alpha);
        } else if (alpha > 0.0) {
            fail(ErrorKind::MissingTextEmbedding, e.video_id + " has no text embedding (enable transcripts or set alpha=0)");
        } else {
            e.ensemble_repr = *e.visual_repr;
        }
    }
    return index;
}

enum class RankSource { Ensemble, Visual, Text };

inline RankSource parse_rank_source(std::string_view s) {
    if (s == "ensemble") return RankSource::Ensemble;
    if (s == "visual") return RankSource::Visual;
    if (s == "text") return RankSource::Text;
    fail(ErrorKind::InvalidConfig, "source (expected ensemble|visual|text, got " + std::string(s) + ")");
}

/// Exact cosine scan. Entries without the requested modality are skipped.
inline RetrievalResult retrieve_topk(const VideoIndex& index, std::span<const double> query, std::size_t k, std::string query_id = {},
                                     RankSource source = RankSource::Ensemble) {
    if (k < 1) fail(ErrorKind::InvalidConfig, "k must be >= 1");
    if (index.entries.empty()) fail(ErrorKind::EmptyIndex, "index has no entries");
    if (query.size() != index.dim) fail(ErrorKind::DimMismatch, "query width " + std::to_string(query.size()) + " vs index " + std::to_string(index.dim));
    const Vector q = l2_normalize(query);
    std::vector<RankedVideo> scored;
    scored.reserve(index.entries.size());
    for (const auto& e : index.entries) {
        const Vector* repr = &e.ensemble_repr;
        if (source == RankSource::Visual) repr = e.visual_repr ? &*e.visual_repr : nullptr;
        if (source == RankSource::Text) repr = e.text_repr ? &*e.text_repr : nullptr;
        if (!repr) continue;
        scored.push_back({e.video_id, std::clamp(dot(q, *repr) / norm(*repr), -1.0, 1.0)});
    }
    const std::size_t keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.video_id < b.video_id;
    });
    scored.resize(keep);
    return {std::move(query_id), std::move(scored), k};
}

/// Fraction of results whose ground-truth id is within the first k ranks.
inline double recall_at_k(std::span<const RetrievalResult> results, const std::map<std::string, std::string>& truth, std::size_t k) {
    if (results.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : results) {
        auto it = truth.find(r.query_id);
        if (it == truth.end()) fail(ErrorKind::MissingTruth, r.query_id);
        const std::size_t depth = std::min(k, r.ranked.size());
        for (std::size_t i = 0; i < depth; ++i) {
            if (r.ranked[i].video_id == it->second) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

// ---------------------------------------------------------------------------
// Index file: "VIDX", version u32, alpha f64, dim u32, count u32, then per
// entry id-length u32 + UTF-8 id + presence flags u8 (visual, text, ensemble)
// + the present vectors as runs of dim f32 values.

inline constexpr std::string_view kIndexMagic = "VIDX";
inline constexpr std::uint32_t kIndexVersion = 1;

inline std::string encode_index(const VideoIndex& index) {
    binary::Writer w;
    w.bytes(kIndexMagic);
    w.u32(kIndexVersion);
    w.f64(index.alpha);
    w.u32(index.dim);
    w.u32(static_cast<std::uint32_t>(index.entries.size()));
    auto run = [&](const Vector& v) {
        if (v.size() != index.dim) fail(ErrorKind::DimMismatch, "index vector width");
        for (double x : v) w.f32(static_cast<float>(x));
    };
    for (const auto& e : index.entries) {
        w.u32(static_cast<std::uint32_t>(e.video_id.size()));
        w.bytes(e.video_id);
        w.u8(e.visual_repr ? 1 : 0);
        w.u8(e.text_repr ? 1 : 0);
        w.u8(1);
        if (e.visual_repr) run(*e.visual_repr);
        if (e.text_repr) run(*e.text_repr);
        run(e.ensemble_repr);
    }
    return w.data();
}

/// Stored vectors are 32-bit; they are re-normalized in 64-bit on load.
inline VideoIndex decode_index(std::string_view data) {
    if (data.size() >= 4 && data.substr(0, 4) != kIndexMagic) fail(ErrorKind::BadMagic, "not a VIDX file");
    binary::Reader r(data);
    if (r.bytes(4) != kIndexMagic) fail(ErrorKind::BadMagic, "not a VIDX file");
    const std::uint32_t version = r.u32();
    if (version != kIndexVersion) fail(ErrorKind::UnsupportedVersion, "index version " + std::to_string(version));
    VideoIndex index;
    index.alpha = r.f64();
    index.dim = r.u32();
    const std::uint32_t count = r.u32();
    if (index.dim == 0 && count > 0) fail(ErrorKind::InvalidMatrix, "zero-width index");
    auto run = [&]() {
        Vector v(index.dim);
        for (double& x : v) {
            x = r.f32();
            if (!std::isfinite(x)) fail(ErrorKind::NonFiniteValue, "index vector");
        }
        return l2_normalize(v);
    };
    for (std::uint32_t i = 0; i < count; ++i) {
        IndexEntry e;
        const std::uint32_t len = r.u32();
        e.video_id = std::string(r.bytes(len));
        const std::uint8_t has_visual = r.u8();
        const std::uint8_t has_text = r.u8();
        const std::uint8_t has_ensemble = r.u8();
        if (has_visual > 1 || has_text > 1 || has_ensemble != 1) fail(ErrorKind::InvalidMatrix, "bad presence flags for " + e.video_id);
        if (has_visual) e.visual_repr = run();
        if (has_text) e.text_repr = run();
        e.ensemble_repr = run();
        index.entries.push_back(std::move(e));
    }
    if (r.remaining() != 0) fail(ErrorKind::InvalidMatrix, "trailing bytes after index entries");
    return index;
}

inline void write_index(const VideoIndex& index, const fs::path& path) { binary::write_file(path, encode_index(index)); }

inline VideoIndex read_index(const fs::path& path) { return decode_index(binary::read_file(path)); }

inline nlohmann::ordered_json to_json(const RetrievalResult& r) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    j["ranked"] = nlohmann::ordered_json::array();
    for (const auto& item : r.ranked) j["ranked"].push_back({{"video_id", item.video_id}, {"score", item.score}});
    return j;
}

inline RetrievalResult retrieval_result_from_json(const nlohmann::json& j) {
    try {
        RetrievalResult r;
        r.query_id = j.at("query_id").get<std::string>();
        for (const auto& item : j.at("ranked")) r.ranked.push_back({item.at("video_id").get<std::string>(), item.at("score").get<double>()});
        r.k = std::max<std::size_t>(1, r.ranked.size());
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("retrieval result: ") + e.what());
    }
}

}  // namespace vrag
