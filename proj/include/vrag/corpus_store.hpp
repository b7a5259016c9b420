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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrag/binary_io.hpp"
#include "vrag/error.hpp"
#include "vrag/vector_math.hpp"

namespace vrag {

namespace fs = std::filesystem;

struct VideoRecord {
    std::string video_id;
    std::string source_path;
    double duration_s = 0.0;
    std::uint32_t frame_count = 1;  // frames sampled at 1 fps
    std::optional<std::string> subtitle;
    std::optional<std::string> aux_transcript;
    std::optional<std::string> category;

    /// Subtitle when present, otherwise the ASR transcript.
    [[nodiscard]] const std::optional<std::string>& text() const { return subtitle ? subtitle : aux_transcript; }

    bool operator==(const VideoRecord&) const = default;
};

struct CorpusManifest {
    std::string corpus_id;
    std::string encoder_id;
    std::uint32_t embedding_dim = 1;
    std::string embedding_dir;
    std::vector<VideoRecord> videos;

    [[nodiscard]] const VideoRecord* find(std::string_view video_id) const {
        for (const auto& v : videos) {
            if (v.video_id == video_id) return &v;
        }
        return nullptr;
    }

    bool operator==(const CorpusManifest&) const = default;
};

enum class Modality : std::uint32_t { Visual = 0, Text = 1 };

inline std::string_view to_string(Modality m) { return m == Modality::Visual ? "visual" : "text"; }

/// count x dim row-major matrix of 32-bit reals, optionally with per-row
/// timestamps in seconds.
struct EmbeddingMatrix {
    std::string video_id;
    Modality modality = Modality::Visual;
    std::uint32_t dim = 0;
    std::uint32_t count = 0;
    std::vector<float> values;
    std::optional<std::vector<float>> timestamps;

    [[nodiscard]] std::span<const float> row(std::size_t r) const { return {values.data() + r * dim, dim}; }

    [[nodiscard]] Vector row_vector(std::size_t r) const {
        auto src = row(r);
        return {src.begin(), src.end()};
    }

    [[nodiscard]] std::vector<Vector> rows() const {
        std::vector<Vector> out;
        out.reserve(count);
        for (std::size_t r = 0; r < count; ++r) out.push_back(row_vector(r));
        return out;
    }

    /// Timestamp of row r; rows are 1 fps frames when no timestamps are stored.
    [[nodiscard]] double timestamp(std::size_t r) const {
        return timestamps ? static_cast<double>((*timestamps)[r]) : static_cast<double>(r);
    }

    bool operator==(const EmbeddingMatrix&) const = default;
};

inline constexpr std::string_view kEmbeddingMagic = "VREM";
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 21;

inline fs::path embedding_path(const fs::path& dir, std::string_view video_id, Modality m) {
    return dir / (std::string(video_id) + (m == Modality::Visual ? ".visual.vrem" : ".text.vrem"));
}

inline void validate(const EmbeddingMatrix& e) {
    if (e.dim == 0 || e.count == 0) fail(ErrorKind::InvalidMatrix, e.video_id + ": dim and count must be positive");
    if (e.values.size() != static_cast<std::size_t>(e.count) * e.dim) {
        fail(ErrorKind::InvalidMatrix, e.video_id + ": value count does not match count x dim");
    }
    if (e.modality == Modality::Text && e.count != 1) fail(ErrorKind::InvalidMatrix, e.video_id + ": text embedding must have one row");
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        if (!std::isfinite(e.values[i])) {
            fail(ErrorKind::NonFiniteValue, e.video_id + ": row " + std::to_string(i / e.dim) + ", col " + std::to_string(i % e.dim));
        }
    }
    if (e.timestamps) {
        const auto& ts = *e.timestamps;
        if (ts.size() != e.count) fail(ErrorKind::InvalidMatrix, e.video_id + ": timestamp count mismatch");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (!std::isfinite(ts[i])) fail(ErrorKind::NonFiniteValue, e.video_id + ": timestamp " + std::to_string(i));
            if (i > 0 && !(ts[i] > ts[i - 1])) fail(ErrorKind::InvalidMatrix, e.video_id + ": timestamps not strictly increasing");
        }
    }
}

inline std::string encode_embeddings(const EmbeddingMatrix& e) {
    validate(e);
    binary::Writer w;
    w.bytes(kEmbeddingMagic);
    w.u32(kEmbeddingVersion);
    w.u32(static_cast<std::uint32_t>(e.modality));
    w.u32(e.dim);
    w.u32(e.count);
    w.u8(e.timestamps ? 1 : 0);
    if (e.timestamps) {
        for (float t : *e.timestamps) w.f32(t);
    }
    for (float v : e.values) w.f32(v);
    return w.data();
}

inline EmbeddingMatrix decode_embeddings(std::string_view data, std::string video_id = {}) {
    if (data.size() >= 4 && data.substr(0, 4) != kEmbeddingMagic) fail(ErrorKind::BadMagic, video_id);
    binary::Reader r(data);
    if (r.bytes(4) != kEmbeddingMagic) fail(ErrorKind::BadMagic, video_id);
    const std::uint32_t version = r.u32();
    if (version != kEmbeddingVersion) fail(ErrorKind::UnsupportedVersion, "version " + std::to_string(version));
    EmbeddingMatrix e;
    e.video_id = std::move(video_id);
    const std::uint32_t modality = r.u32();
    if (modality > 1) fail(ErrorKind::InvalidMatrix, "unknown modality " + std::to_string(modality));
    e.modality = static_cast<Modality>(modality);
    e.dim = r.u32();
    e.count = r.u32();
    const std::uint8_t flag = r.u8();
    if (flag > 1) fail(ErrorKind::InvalidMatrix, "timestamp flag must be 0 or 1");
    if (e.dim == 0 || e.count == 0) fail(ErrorKind::InvalidMatrix, "dim and count must be positive");
    const std::uint64_t payload = (flag ? std::uint64_t{e.count} : 0) * 4 + std::uint64_t{e.count} * e.dim * 4;
    if (r.remaining() < payload) {
        fail(ErrorKind::TruncatedFile, "expected " + std::to_string(payload) + " payload bytes, found " + std::to_string(r.remaining()));
    }
    if (r.remaining() > payload) fail(ErrorKind::InvalidMatrix, "trailing bytes after payload");
    if (flag) {
        std::vector<float> ts(e.count);
        for (float& t : ts) t = r.f32();
        e.timestamps = std::move(ts);
    }
    e.values.resize(static_cast<std::size_t>(e.count) * e.dim);
    for (float& v : e.values) v = r.f32();
    validate(e);
    return e;
}

inline void write_embeddings(const EmbeddingMatrix& e, const fs::path& path) { binary::write_file(path, encode_embeddings(e)); }

/// Reads a .vrem file. The video id is recovered from the file name
/// (`<id>.visual.vrem` / `<id>.text.vrem`).
inline EmbeddingMatrix read_embeddings(const fs::path& path) {
    std::string name = path.filename().string();
    for (std::string_view suffix : {".visual.vrem", ".text.vrem", ".vrem"}) {
        if (name.size() > suffix.size() && name.ends_with(suffix)) {
            name.resize(name.size() - suffix.size());
            break;
        }
    }
    return decode_embeddings(binary::read_file(path), name);
}

namespace detail {

using nlohmann::json;
using nlohmann::ordered_json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(ErrorKind::SchemaViolation, where + key + " (missing)");
    return *it;
}

inline std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) fail(ErrorKind::SchemaViolation, where + key + " (expected string)");
    return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_string()) fail(ErrorKind::SchemaViolation, where + key + " (expected string)");
    return it->get<std::string>();
}

inline std::uint32_t require_positive_int(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1 || v.get<std::int64_t>() > UINT32_MAX) {
        fail(ErrorKind::SchemaViolation, where + key + " (expected positive integer)");
    }
    return static_cast<std::uint32_t>(v.get<std::int64_t>());
}

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) fail(ErrorKind::SchemaViolation, where + key + " (unknown key)");
    }
}

}  // namespace detail

inline CorpusManifest manifest_from_json(const nlohmann::json& doc) {
    using namespace detail;
    if (!doc.is_object()) fail(ErrorKind::SchemaViolation, "<root> (expected object)");
    reject_unknown_keys(doc, {"corpus_id", "encoder_id", "embedding_dim", "embedding_dir", "videos"}, "");
    CorpusManifest m;
    m.corpus_id = require_string(doc, "corpus_id", "");
    m.encoder_id = require_string(doc, "encoder_id", "");
    m.embedding_dim = require_positive_int(doc, "embedding_dim", "");
    m.embedding_dir = require_string(doc, "embedding_dir", "");
    const json& videos = require(doc, "videos", "");
    if (!videos.is_array()) fail(ErrorKind::SchemaViolation, "videos (expected array)");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const json& v = videos[i];
        const std::string where = "videos[" + std::to_string(i) + "].";
        if (!v.is_object()) fail(ErrorKind::SchemaViolation, where + " (expected object)");
        reject_unknown_keys(v, {"video_id", "source_path", "duration_s", "frame_count", "subtitle", "aux_transcript", "category"}, where);
        VideoRecord r;
        r.video_id = require_string(v, "video_id", where);
        if (r.video_id.empty()) fail(ErrorKind::SchemaViolation, where + "video_id (empty)");
        r.source_path = require_string(v, "source_path", where);
        const json& dur = require(v, "duration_s", where);
        if (!dur.is_number() || !std::isfinite(dur.get<double>()) || dur.get<double>() < 0.0) {
            fail(ErrorKind::SchemaViolation, where + "duration_s (expected non-negative number)");
        }
        r.duration_s = dur.get<double>();
        r.frame_count = require_positive_int(v, "frame_count", where);
        r.subtitle = optional_string(v, "subtitle", where);
        r.aux_transcript = optional_string(v, "aux_transcript", where);
        r.category = optional_string(v, "category", where);
        if (!seen.insert(r.video_id).second) fail(ErrorKind::DuplicateVideoId, r.video_id);
        m.videos.push_back(std::move(r));
    }
    return m;
}

/// Canonical form: fixed key order, optional fields omitted when absent.
inline nlohmann::ordered_json manifest_to_json(const CorpusManifest& m) {
    nlohmann::ordered_json doc;
    doc["corpus_id"] = m.corpus_id;
    doc["encoder_id"] = m.encoder_id;
    doc["embedding_dim"] = m.embedding_dim;
    doc["embedding_dir"] = m.embedding_dir;
    doc["videos"] = nlohmann::ordered_json::array();
    for (const auto& r : m.videos) {
        nlohmann::ordered_json v;
        v["video_id"] = r.video_id;
        v["source_path"] = r.source_path;
        v["duration_s"] = r.duration_s;
        v["frame_count"] = r.frame_count;
        if (r.subtitle) v["subtitle"] = *r.subtitle;
        if (r.aux_transcript) v["aux_transcript"] = *r.aux_transcript;
        if (r.category) v["category"] = *r.category;
        doc["videos"].push_back(std::move(v));
    }
    return doc;
}

inline std::string serialize_manifest(const CorpusManifest& m) { return manifest_to_json(m).dump(2) + "\n"; }

inline CorpusManifest load_manifest(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorKind::MissingFile, path.string());
    const std::string text = binary::read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("<root> (not JSON: ") + e.what() + ")");
    }
    return manifest_from_json(doc);
}

inline void save_manifest(const CorpusManifest& m, const fs::path& path) {
    std::set<std::string_view> seen;
    for (const auto& v : m.videos) {
        if (!seen.insert(v.video_id).second) fail(ErrorKind::DuplicateVideoId, v.video_id);
    }
    binary::write_file(path, serialize_manifest(m));
}

/// Relative embedding_dir entries resolve against the manifest's directory.
inline fs::path resolve_embedding_dir(const CorpusManifest& m, const fs::path& manifest_path) {
    fs::path dir(m.embedding_dir);
    if (dir.is_relative()) dir = manifest_path.parent_path() / dir;
    return dir;
}

}  // namespace vrag
