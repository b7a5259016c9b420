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
#include <string>
#include <vector>

#include <json.hpp>

#include "vrag/corpus_store.hpp"
#include "vrag/error.hpp"
#include "vrag/http.hpp"
#include "vrag/vector_math.hpp"

namespace vrag {

struct EncoderHealth {
    std::string status;
    std::string encoder_id;
    std::uint32_t dim = 0;
};

struct TranscriptSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;
};

struct Transcript {
    std::string text;
    std::vector<TranscriptSegment> segments;
};

inline constexpr double kUnitNormTolerance = 1e-5;
inline constexpr std::size_t kMaxTextBatch = 64;

namespace detail {

inline nlohmann::json parse_service_json(const HttpResponse& r, const std::string& what) {
    try {
        return nlohmann::json::parse(r.body);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ContractViolation, what + ": response is not JSON (" + e.what() + ")");
    }
}

}  // namespace detail

/// Checks an embedding response {dim, count, embeddings, timestamps?}
/// against the ingest contract and converts it to a matrix.
inline EmbeddingMatrix validate_embed_response(const nlohmann::json& j, Modality modality, std::string video_id) {
    EmbeddingMatrix e;
    e.video_id = std::move(video_id);
    e.modality = modality;
    try {
        const auto dim = j.at("dim").get<std::int64_t>();
        const auto count = j.at("count").get<std::int64_t>();
        if (dim < 1 || count < 1) fail(ErrorKind::ContractViolation, "dim and count must be positive");
        e.dim = static_cast<std::uint32_t>(dim);
        e.count = static_cast<std::uint32_t>(count);
        const auto& rows = j.at("embeddings");
        if (!rows.is_array() || rows.size() != e.count) fail(ErrorKind::ContractViolation, "embeddings length differs from count");
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto row = rows[r].get<std::vector<double>>();
            if (row.size() != e.dim) fail(ErrorKind::ContractViolation, "row " + std::to_string(r) + " length differs from dim");
            if (!all_finite(row)) fail(ErrorKind::ContractViolation, "row " + std::to_string(r) + " has non-finite values");
            if (std::abs(norm(row) - 1.0) > kUnitNormTolerance) fail(ErrorKind::ContractViolation, "row " + std::to_string(r) + " is not unit norm");
            for (double v : row) e.values.push_back(static_cast<float>(v));
        }
        if (j.contains("timestamps") && !j.at("timestamps").is_null()) {
            const auto ts = j.at("timestamps").get<std::vector<double>>();
            if (ts.size() != e.count) fail(ErrorKind::ContractViolation, "timestamps length differs from count");
            std::vector<float> out;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                if (!std::isfinite(ts[i]) || (i > 0 && !(ts[i] > ts[i - 1]))) fail(ErrorKind::ContractViolation, "timestamps must increase strictly");
                out.push_back(static_cast<float>(ts[i]));
            }
            e.timestamps = std::move(out);
        }
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorKind::ContractViolation, std::string("embedding response: ") + ex.what());
    }
    try {
        validate(e);
    } catch (const Error& ex) {
        fail(ErrorKind::ContractViolation, ex.detail());
    }
    return e;
}

/// Client for the encoder/ASR service (GET /healthz, POST /v1/embed/text,
/// POST /v1/embed/frames, POST /v1/transcribe).
class EncoderClient {
  public:
    explicit EncoderClient(HttpTransport& transport) : transport_(transport) {}

    EncoderHealth health() {
        const auto r = transport_.get("/healthz");
        if (r.status >= 400) fail(ErrorKind::ServiceError, "/healthz returned " + std::to_string(r.status));
        const auto j = detail::parse_service_json(r, "/healthz");
        try {
            return {j.at("status").get<std::string>(), j.at("encoder_id").get<std::string>(), j.at("dim").get<std::uint32_t>()};
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::ContractViolation, std::string("/healthz: ") + e.what());
        }
    }

    /// One unit vector per text, in input order. Batches of at most 64.
    std::vector<Vector> embed_texts(const std::vector<std::string>& texts) {
        std::vector<Vector> out;
        for (std::size_t start = 0; start < texts.size(); start += kMaxTextBatch) {
            const std::size_t end = std::min(texts.size(), start + kMaxTextBatch);
            nlohmann::json body;
            body["texts"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start), texts.begin() + static_cast<std::ptrdiff_t>(end));
            const auto r = transport_.post("/v1/embed/text", body.dump());
            if (r.status >= 400) fail(ErrorKind::ServiceError, "/v1/embed/text returned " + std::to_string(r.status) + ": " + r.body);
            const auto m = validate_embed_response(detail::parse_service_json(r, "/v1/embed/text"), Modality::Visual, "text");
            if (m.count != end - start) fail(ErrorKind::ContractViolation, "/v1/embed/text returned a different number of vectors");
            for (std::size_t i = 0; i < m.count; ++i) out.push_back(m.row_vector(i));
        }
        return out;
    }

    EmbeddingMatrix embed_frames(const std::string& video_id, const std::string& video_path, double fps = 1.0) {
        const nlohmann::json body = {{"video_path", video_path}, {"fps", fps}};
        const auto r = transport_.post("/v1/embed/frames", body.dump());
        if (r.status >= 400) fail(ErrorKind::ServiceError, "/v1/embed/frames returned " + std::to_string(r.status) + " for " + video_path);
        return validate_embed_response(detail::parse_service_json(r, "/v1/embed/frames"), Modality::Visual, video_id);
    }

    Transcript transcribe(const std::string& video_path) {
        const nlohmann::json body = {{"video_path", video_path}};
        const auto r = transport_.post("/v1/transcribe", body.dump());
        if (r.status >= 400) fail(ErrorKind::AsrError, "/v1/transcribe returned " + std::to_string(r.status) + " for " + video_path);
        const auto j = detail::parse_service_json(r, "/v1/transcribe");
        Transcript t;
        try {
            t.text = j.at("text").get<std::string>();
            for (const auto& s : j.at("segments")) {
                t.segments.push_back({s.at("start_s").get<double>(), s.at("end_s").get<double>(), s.at("text").get<std::string>()});
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::ContractViolation, std::string("/v1/transcribe: ") + e.what());
        }
        for (std::size_t i = 0; i < t.segments.size(); ++i) {
            const auto& s = t.segments[i];
            if (!(s.end_s >= s.start_s)) fail(ErrorKind::ContractViolation, "transcript segment ends before it starts");
            if (i > 0 && (s.start_s < t.segments[i - 1].start_s || s.start_s < t.segments[i - 1].end_s)) {
                fail(ErrorKind::ContractViolation, "transcript segments overlap or go backwards");
            }
        }
        return t;
    }

  private:
    HttpTransport& transport_;
};

}  // namespace vrag
