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

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vrag/binary_io.hpp"
#include "vrag/corpus_store.hpp"
#include "vrag/encoder_client.hpp"
#include "vrag/error.hpp"
#include "vrag/frame_reduction.hpp"
#include "vrag/http.hpp"
#include "vrag/prompts.hpp"
#include "vrag/random.hpp"
#include "vrag/retrieval.hpp"
#include "vrag/selector.hpp"

namespace vrag {

enum class ContextMode { VideoOnly, VideoPlusText };

inline std::string_view to_string(ContextMode m) { return m == ContextMode::VideoOnly ? "video_only" : "video_plus_text"; }

inline ContextMode parse_context_mode(std::string_view s) {
    if (s == "video_only") return ContextMode::VideoOnly;
    if (s == "video_plus_text") return ContextMode::VideoPlusText;
    fail(ErrorKind::InvalidConfig, "generation.mode (expected video_only|video_plus_text, got " + std::string(s) + ")");
}

struct FrameRef {
    std::size_t index = 0;
    double timestamp = 0.0;

    bool operator==(const FrameRef&) const = default;
};

struct ContextSegment {
    std::string video_id;
    std::vector<FrameRef> frames;  // ascending timestamp
    std::optional<std::string> transcript_text;
    bool transcript_truncated = false;

    bool operator==(const ContextSegment&) const = default;
};

/// [V1, t1, ..., Vk, tk, q]: segments in retrieval rank order, the question
/// last.
struct GenerationContext {
    std::string query_id;
    std::string question;
    std::vector<ContextSegment> segments;
    ContextMode mode = ContextMode::VideoOnly;

    bool operator==(const GenerationContext&) const = default;
};

struct GenerationResult {
    std::string query_id;
    std::string question;
    std::string answer_text;
    std::string generator_id;
    std::string context_digest;
    bool transcript_truncated = false;
};

struct QAExample {
    std::string question;
    std::string answer;
    std::string source_video_id;
    std::string origin = "synthetic";  // dataset | synthetic
    std::optional<std::string> category;
};

// ---------------------------------------------------------------------------
// Generator client

struct ContentPart {
    enum class Kind { Text, Image } kind = Kind::Text;
    std::string text;  // Text
    std::string data;  // Image: base64
    std::string mime;  // Image

    static ContentPart make_text(std::string t) { return {Kind::Text, std::move(t), {}, {}}; }
    static ContentPart make_image(std::string base64, std::string mime) { return {Kind::Image, {}, std::move(base64), std::move(mime)}; }
};

struct ChatMessage {
    std::string role = "user";
    std::vector<ContentPart> content;
};

inline nlohmann::ordered_json chat_request_json(std::string_view model, const std::vector<ChatMessage>& messages) {
    nlohmann::ordered_json j;
    j["model"] = model;
    j["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        nlohmann::ordered_json parts = nlohmann::ordered_json::array();
        for (const auto& p : m.content) {
            if (p.kind == ContentPart::Kind::Text) {
                parts.push_back({{"type", "text"}, {"text", p.text}});
            } else {
                parts.push_back({{"type", "image"}, {"data", p.data}, {"mime", p.mime}});
            }
        }
        j["messages"].push_back({{"role", m.role}, {"content", std::move(parts)}});
    }
    return j;
}

/// POST <base>/v1/chat {model, messages} -> {answer}. One client serves
/// generation, synthetic QA and judging.
class GeneratorClient {
  public:
    GeneratorClient(HttpTransport& transport, std::string model) : transport_(transport), model_(std::move(model)) {}

    [[nodiscard]] const std::string& model() const { return model_; }

    /// Returns the raw request body alongside the answer so callers can
    /// digest exactly what was sent.
    std::string chat_body(const std::vector<ChatMessage>& messages) const { return chat_request_json(model_, messages).dump(); }

    std::string send(const std::string& body) {
        const auto r = transport_.post("/v1/chat", body);
        if (r.status >= 400) fail(ErrorKind::GeneratorError, "status " + std::to_string(r.status) + ": " + r.body);
        try {
            return nlohmann::json::parse(r.body).at("answer").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::GeneratorError, std::string("malformed generator response: ") + e.what());
        }
    }

    std::string chat(const std::vector<ChatMessage>& messages) { return send(chat_body(messages)); }

  private:
    HttpTransport& transport_;
    std::string model_;
};

// ---------------------------------------------------------------------------
// Frames and payloads

inline std::string base64_encode(std::string_view bytes) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                                static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    if (i + 1 == bytes.size()) {
        const std::uint32_t n = static_cast<unsigned char>(bytes[i]) << 16;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

/// Image bytes for frame `index` of a video.
using FrameSource = std::function<std::string(const std::string& video_id, std::size_t index)>;

/// Reads `<frame_dir>/<video_id>/<index>.jpg`.
inline FrameSource directory_frame_source(fs::path frame_dir) {
    return [dir = std::move(frame_dir)](const std::string& video_id, std::size_t index) {
        const fs::path p = dir / video_id / (std::to_string(index) + ".jpg");
        if (!fs::exists(p)) fail(ErrorKind::MissingFrame, p.string());
        return binary::read_file(p);
    };
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------
// Transcripts

/// Leaves videos with a subtitle or an existing transcript untouched (no
/// network); otherwise stores the ASR text as aux_transcript.
inline VideoRecord ensure_transcript(VideoRecord video, EncoderClient& asr) {
    if (video.subtitle || video.aux_transcript) return video;
    video.aux_transcript = asr.transcribe(video.source_path).text;
    return video;
}

/// Cuts to at most max_chars bytes without splitting a UTF-8 sequence.
inline std::string truncate_utf8(std::string_view s, std::size_t max_chars, bool& truncated) {
    truncated = s.size() > max_chars;
    if (!truncated) return std::string(s);
    std::size_t cut = max_chars;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut));
}

// ---------------------------------------------------------------------------
// Context assembly

struct AssembleConfig {
    std::size_t frames_per_video = 32;
    std::size_t candidates = 64;
    std::size_t n_subsets = 40;
    ContextMode mode = ContextMode::VideoOnly;
    std::size_t max_transcript_chars = 8000;
    std::uint64_t seed = 0;
};

using EmbeddingLoader = std::function<EmbeddingMatrix(const std::string& video_id)>;

struct AssembleInputs {
    const CorpusManifest* manifest = nullptr;
    const SelectorModel* selector = nullptr;        // generation-mode selector, optional
    std::optional<Vector> query_embedding;          // required with a selector
    EmbeddingLoader embeddings;                     // required with a selector
    EncoderClient* asr = nullptr;                   // fills missing transcripts when set
};

inline std::vector<FrameRef> choose_generation_frames(const VideoRecord& video, const AssembleConfig& cfg, const AssembleInputs& in) {
    std::vector<FrameRef> refs;
    if (video.frame_count <= cfg.frames_per_video || !in.selector) {
        // Short videos keep every frame; otherwise uniform stride at 1 fps.
        for (std::size_t i : uniform_stride(video.frame_count, cfg.frames_per_video)) refs.push_back({i, static_cast<double>(i)});
        if (in.selector && in.embeddings && video.frame_count <= cfg.frames_per_video) {
            const auto m = in.embeddings(video.video_id);
            for (auto& r : refs) r.timestamp = r.index < m.count ? m.timestamp(r.index) : r.timestamp;
        }
        return refs;
    }
    if (in.selector->mode != SelectorMode::Generation) fail(ErrorKind::WrongMode, "context assembly needs a generation selector");
    if (!in.query_embedding) fail(ErrorKind::MissingQuery, "adaptive frame selection for generation needs a query embedding");
    if (!in.embeddings) fail(ErrorKind::InvalidConfig, "adaptive frame selection needs an embedding loader");
    const EmbeddingMatrix matrix = in.embeddings(video.video_id);
    const auto candidates = reduce_candidates(matrix, cfg.candidates, derive_seed(cfg.seed, "generate", video.video_id + "/reduce"));
    const auto subset = select_frames(*in.selector, candidates, in.query_embedding, cfg.n_subsets,
                                      derive_seed(cfg.seed, "generate", video.video_id + "/select"));
    for (std::size_t c : subset.frame_indices) {
        const std::size_t row = candidates.source_indices[c];
        refs.push_back({row, matrix.timestamp(row)});
    }
    std::sort(refs.begin(), refs.end(), [](const FrameRef& a, const FrameRef& b) { return a.timestamp < b.timestamp; });
    return refs;
}

inline GenerationContext assemble_context(std::string query_id, std::string question, const RetrievalResult& retrieved,
                                          const AssembleConfig& cfg, const AssembleInputs& in) {
    if (retrieved.ranked.empty()) fail(ErrorKind::EmptyRetrieval, query_id);
    if (!in.manifest) fail(ErrorKind::InvalidConfig, "context assembly needs the corpus manifest");
    GenerationContext ctx;
    ctx.query_id = std::move(query_id);
    ctx.question = std::move(question);
    ctx.mode = cfg.mode;
    for (const auto& hit : retrieved.ranked) {
        const VideoRecord* found = in.manifest->find(hit.video_id);
        if (!found) fail(ErrorKind::SchemaViolation, "retrieved video " + hit.video_id + " is not in the manifest");
        VideoRecord video = *found;
        ContextSegment seg;
        seg.video_id = video.video_id;
        seg.frames = choose_generation_frames(video, cfg, in);
        if (cfg.mode == ContextMode::VideoPlusText) {
            if (!video.text() && in.asr) video = ensure_transcript(std::move(video), *in.asr);
            if (!video.text()) fail(ErrorKind::MissingTranscript, video.video_id);
            seg.transcript_text = truncate_utf8(*video.text(), cfg.max_transcript_chars, seg.transcript_truncated);
        }
        ctx.segments.push_back(std::move(seg));
    }
    return ctx;
}

/// Per segment: every frame as an image part, then the transcript as one text
/// part (when present); the question is the final text part.
inline std::vector<ChatMessage> build_generation_messages(const GenerationContext& ctx, const FrameSource& frames) {
    ChatMessage msg;
    for (const auto& seg : ctx.segments) {
        for (const auto& f : seg.frames) msg.content.push_back(ContentPart::make_image(base64_encode(frames(seg.video_id, f.index)), "image/jpeg"));
        if (seg.transcript_text) msg.content.push_back(ContentPart::make_text(*seg.transcript_text));
    }
    msg.content.push_back(ContentPart::make_text(ctx.question));
    return {std::move(msg)};
}

inline GenerationResult generate_answer(const GenerationContext& ctx, GeneratorClient& client, const FrameSource& frames) {
    const std::string body = client.chat_body(build_generation_messages(ctx, frames));
    GenerationResult result;
    result.query_id = ctx.query_id;
    result.question = ctx.question;
    result.generator_id = client.model();
    result.context_digest = hex64(fnv1a64(body));
    for (const auto& s : ctx.segments) result.transcript_truncated = result.transcript_truncated || s.transcript_truncated;
    result.answer_text = client.send(body);
    if (result.answer_text.empty()) fail(ErrorKind::EmptyAnswer, ctx.query_id);
    return result;
}

inline nlohmann::ordered_json to_json(const GenerationResult& r) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    j["question"] = r.question;
    j["answer"] = r.answer_text;
    j["context_digest"] = r.context_digest;
    j["generator_id"] = r.generator_id;
    if (r.transcript_truncated) j["transcript_truncated"] = true;
    return j;
}

inline GenerationResult generation_result_from_json(const nlohmann::json& j) {
    try {
        GenerationResult r;
        r.query_id = j.at("query_id").get<std::string>();
        r.question = j.value("question", std::string());
        r.answer_text = j.at("answer").get<std::string>();
        r.context_digest = j.value("context_digest", std::string());
        r.generator_id = j.value("generator_id", std::string());
        r.transcript_truncated = j.value("transcript_truncated", false);
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("generation result: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Synthetic QA

namespace detail {

/// Offset one past the bracket that closes the array opening at `open`, or
/// npos. String literals are skipped so brackets inside them do not count.
inline std::size_t matching_bracket(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '[' || c == '{') {
            ++depth;
        } else if (c == ']' || c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

}  // namespace detail

/// First well-formed top-level JSON array in free text (prose, code fences
/// and trailing remarks are ignored).
inline std::optional<nlohmann::json> extract_first_json_array(std::string_view text) {
    for (std::size_t pos = text.find('['); pos != std::string_view::npos; pos = text.find('[', pos + 1)) {
        const std::size_t end = detail::matching_bracket(text, pos);
        if (end == std::string_view::npos) continue;
        auto parsed = nlohmann::json::parse(text.substr(pos, end - pos), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_array()) return parsed;
    }
    return std::nullopt;
}

inline std::vector<QAExample> parse_qa_reply(std::string_view reply, const VideoRecord& video) {
    const auto array = extract_first_json_array(reply);
    if (!array) fail(ErrorKind::MalformedJson, "no JSON array in reply for " + video.video_id);
    std::vector<QAExample> out;
    for (const auto& item : *array) {
        if (!item.is_object() || !item.contains("question") || !item.contains("answer") || !item["question"].is_string() ||
            !item["answer"].is_string()) {
            fail(ErrorKind::MalformedJson, "QA item without string question/answer for " + video.video_id);
        }
        QAExample qa{item["question"].get<std::string>(), item["answer"].get<std::string>(), video.video_id, "synthetic", video.category};
        if (qa.question.empty() || qa.answer.empty()) fail(ErrorKind::MalformedJson, "empty question or answer for " + video.video_id);
        out.push_back(std::move(qa));
    }
    if (out.size() != 3) fail(ErrorKind::WrongCount, std::to_string(out.size()) + " QA pairs for " + video.video_id);
    return out;
}

/// Sends the synthetic-QA prompt followed by the video's frames (and its
/// text, when any) and parses exactly three pairs. A malformed reply is
/// retried once.
inline std::vector<QAExample> synthesize_qa(const VideoRecord& video, std::span<const ContentPart> video_parts, GeneratorClient& client,
                                            std::string_view prompt = prompts::synthetic_qa()) {
    ChatMessage msg;
    msg.content.push_back(ContentPart::make_text(std::string(prompt)));
    msg.content.insert(msg.content.end(), video_parts.begin(), video_parts.end());
    if (video.text()) msg.content.push_back(ContentPart::make_text(*video.text()));
    const std::vector<ChatMessage> messages{std::move(msg)};
    for (int attempt = 0;; ++attempt) {
        try {
            return parse_qa_reply(client.chat(messages), video);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::MalformedJson || attempt >= 1) throw;
        }
    }
}

inline nlohmann::ordered_json to_json(const QAExample& qa) {
    nlohmann::ordered_json j;
    j["question"] = qa.question;
    j["answer"] = qa.answer;
    j["source_video_id"] = qa.source_video_id;
    j["origin"] = qa.origin;
    j["category"] = qa.category ? nlohmann::ordered_json(*qa.category) : nlohmann::ordered_json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// G-Eval

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) s.replace(pos, from.size(), to);
    return s;
}

inline std::string build_geval_prompt(std::string_view question, std::string_view ground_truth, std::string_view generated,
                                      std::string_view tmpl = prompts::geval()) {
    // Substitute the generated text last so braces inside the answers are never re-expanded.
    std::string out(tmpl);
    const auto q = out.find("{{Question}}");
    const auto g = out.find("{{Ground_Truth_Answer}}");
    const auto r = out.find("{{Generated_Response}}");
    if (q == std::string::npos || g == std::string::npos || r == std::string::npos) {
        fail(ErrorKind::InvalidConfig, "G-Eval template is missing a placeholder");
    }
    struct Slot {
        std::size_t pos;
        std::string_view placeholder;
        std::string_view value;
    };
    std::vector<Slot> slots{{q, "{{Question}}", question}, {g, "{{Ground_Truth_Answer}}", ground_truth}, {r, "{{Generated_Response}}", generated}};
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.pos > b.pos; });
    for (const auto& s : slots) out.replace(s.pos, s.placeholder.size(), s.value);
    return out;
}

/// First integer token of the judge's reply, which must lie in [1, 5].
inline int parse_geval_score(std::string_view reply) {
    static const std::regex kInteger(R"([+-]?\d+)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(reply.begin(), reply.end(), m, kInteger)) fail(ErrorKind::UnparseableScore, std::string(reply));
    const std::string token = m.str();
    if (token.size() > 6) fail(ErrorKind::ScoreOutOfRange, token);
    const int score = std::stoi(token);
    if (score < 1 || score > 5) fail(ErrorKind::ScoreOutOfRange, token);
    return score;
}

inline int geval_judge(std::string_view question, std::string_view ground_truth, std::string_view generated, GeneratorClient& client,
                       std::string_view tmpl = prompts::geval()) {
    ChatMessage msg;
    msg.content.push_back(ContentPart::make_text(build_geval_prompt(question, ground_truth, generated, tmpl)));
    return parse_geval_score(client.chat({std::move(msg)}));
}

}  // namespace vrag
