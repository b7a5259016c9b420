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
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrag/binary_io.hpp"
#include "vrag/concurrency.hpp"
#include "vrag/config.hpp"
#include "vrag/corpus_store.hpp"
#include "vrag/encoder_client.hpp"
#include "vrag/error.hpp"
#include "vrag/eval_metrics.hpp"
#include "vrag/generation.hpp"
#include "vrag/http.hpp"
#include "vrag/http_transport.hpp"
#include "vrag/random.hpp"
#include "vrag/retrieval.hpp"
#include "vrag/selector.hpp"

namespace vrag::cli {

/// How the CLI reaches external services. Tests swap in stubs.
struct Services {
    std::function<std::shared_ptr<HttpTransport>(const std::string& base_url, double timeout_s)> connect;
};

inline Services network_services() {
    return {[](const std::string& url, double timeout_s) -> std::shared_ptr<HttpTransport> {
        return std::make_shared<HttplibTransport>(url, std::chrono::seconds(static_cast<long>(std::ceil(timeout_s))));
    }};
}

// ---------------------------------------------------------------------------
// Queries

struct QueryRecord {
    std::string query_id;
    std::string question;
    std::optional<std::string> answer;
    std::optional<std::string> video_id;
    std::optional<std::string> category;
    std::optional<Vector> embedding;
};

namespace detail {

inline std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorKind::MissingFile, path.string());
    std::istringstream in(binary::read_file(path));
    std::vector<nlohmann::json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) fail(ErrorKind::SchemaViolation, path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
        rows.push_back(std::move(j));
    }
    return rows;
}

inline std::optional<std::string> opt_string(const nlohmann::json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(ErrorKind::SchemaViolation, where + ": " + key + " must be a string");
    return it->get<std::string>();
}

}  // namespace detail

inline std::vector<QueryRecord> load_queries(const fs::path& path) {
    std::vector<QueryRecord> out;
    std::set<std::string> seen;
    for (const auto& j : detail::read_jsonl(path)) {
        const std::string where = path.string() + " query " + std::to_string(out.size() + 1);
        QueryRecord q;
        auto id = detail::opt_string(j, "query_id", where);
        auto question = detail::opt_string(j, "question", where);
        if (!id || id->empty()) fail(ErrorKind::SchemaViolation, where + ": query_id");
        if (!question) fail(ErrorKind::SchemaViolation, where + ": question");
        if (!seen.insert(*id).second) fail(ErrorKind::SchemaViolation, where + ": duplicate query_id " + *id);
        q.query_id = *id;
        q.question = *question;
        q.answer = detail::opt_string(j, "answer", where);
        q.video_id = detail::opt_string(j, "video_id", where);
        q.category = detail::opt_string(j, "category", where);
        if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
            if (!it->is_array()) fail(ErrorKind::SchemaViolation, where + ": embedding must be an array");
            Vector v;
            for (const auto& x : *it) {
                if (!x.is_number()) fail(ErrorKind::SchemaViolation, where + ": embedding values must be numbers");
                v.push_back(x.get<double>());
            }
            if (!all_finite(v)) fail(ErrorKind::NonFiniteValue, where + ": embedding");
            q.embedding = std::move(v);
        }
        out.push_back(std::move(q));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Command context

struct Options {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> manifest;
    std::optional<double> alpha;
    std::optional<std::string> encoder_url;
    std::optional<std::string> generator_url;
    std::optional<std::string> generator_model;
    std::optional<std::size_t> max_inflight;
    std::string record_path;
    std::string replay_path;
};

class Context {
  public:
    Context(EngineConfig cfg, std::string out_dir, Services services, std::ostream& out, std::ostream& err)
        : cfg(std::move(cfg)), out_dir(std::move(out_dir)), out(out), err(err), services_(std::move(services)) {}

    EngineConfig cfg;
    fs::path out_dir;
    std::ostream& out;
    std::ostream& err;

    void use_replay(const fs::path& path) { replay_ = std::make_shared<ReplayTransport>(load_interactions(path)); }
    void use_recording(fs::path path) { record_path_ = std::move(path); }

    void finish() {
        if (recorder_ && !record_path_.empty()) recorder_->save(record_path_);
    }

    fs::path output(const std::string& name) {
        if (out_dir.empty()) fail(ErrorKind::InvalidConfig, "--out is required");
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) fail(ErrorKind::IoFailure, out_dir.string() + ": " + ec.message());
        return out_dir / name;
    }

    const CorpusManifest& manifest() {
        if (!manifest_) {
            if (cfg.manifest_path.empty()) fail(ErrorKind::InvalidConfig, "manifest_path: required");
            manifest_ = load_manifest(cfg.manifest_path);
            embedding_root_ = resolve_embedding_dir(*manifest_, cfg.manifest_path);
        }
        return *manifest_;
    }

    const fs::path& embedding_root() {
        manifest();
        return embedding_root_;
    }

    EmbeddingMatrix visual(const std::string& video_id) { return read_embeddings(embedding_path(embedding_root(), video_id, Modality::Visual)); }

    EncoderClient& encoder() {
        if (!encoder_) encoder_ = std::make_unique<EncoderClient>(transport(cfg.endpoints.encoder_url, "endpoints.encoder_url"));
        return *encoder_;
    }

    GeneratorClient& generator() {
        if (!generator_) {
            generator_ = std::make_unique<GeneratorClient>(transport(cfg.endpoints.generator_url, "endpoints.generator_url"), cfg.endpoints.generator_model);
        }
        return *generator_;
    }

    FrameSource frames() {
        if (cfg.frame_dir.empty()) fail(ErrorKind::InvalidConfig, "frame_dir: required");
        return directory_frame_source(cfg.frame_dir);
    }

    /// Query vectors from the queries file, falling back to the text encoder
    /// for queries that carry none.
    std::vector<Vector> query_embeddings(const std::vector<QueryRecord>& queries) {
        std::vector<Vector> out(queries.size());
        std::vector<std::string> texts;
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            if (queries[i].embedding) {
                out[i] = *queries[i].embedding;
            } else {
                texts.push_back(queries[i].question);
                slots.push_back(i);
            }
        }
        if (!texts.empty()) {
            const auto embedded = encoder().embed_texts(texts);
            for (std::size_t j = 0; j < slots.size(); ++j) out[slots[j]] = embedded[j];
        }
        return out;
    }

  private:
    HttpTransport& transport(const std::string& url, const std::string& field) {
        if (replay_) return *replay_;
        if (url.empty()) fail(ErrorKind::InvalidConfig, field + ": required");
        auto it = transports_.find(url);
        if (it == transports_.end()) {
            std::shared_ptr<HttpTransport> t = services_.connect(url, cfg.endpoints.timeout_s);
            if (!record_path_.empty()) {
                if (!recorder_) recorder_ = std::make_shared<SharedRecorder>();
                t = std::make_shared<RecordingTap>(t, recorder_);
            }
            it = transports_.emplace(url, std::move(t)).first;
        }
        return *it->second;
    }

    // One log shared by every endpoint so a single fixture replays a run.
    struct SharedRecorder {
        std::mutex mu;
        std::vector<Interaction> log;
        void save(const fs::path& p) {
            std::lock_guard lock(mu);
            binary::write_file(p, interactions_to_json(log).dump(2) + "\n");
        }
    };

    class RecordingTap : public HttpTransport {
      public:
        RecordingTap(std::shared_ptr<HttpTransport> inner, std::shared_ptr<SharedRecorder> rec) : inner_(std::move(inner)), rec_(std::move(rec)) {}
        HttpResponse post(const std::string& path, const std::string& body) override {
            HttpResponse r = inner_->post(path, body);
            std::lock_guard lock(rec_->mu);
            rec_->log.push_back({"POST", path, body, r.status, r.body});
            return r;
        }
        HttpResponse get(const std::string& path) override {
            HttpResponse r = inner_->get(path);
            std::lock_guard lock(rec_->mu);
            rec_->log.push_back({"GET", path, "", r.status, r.body});
            return r;
        }

      private:
        std::shared_ptr<HttpTransport> inner_;
        std::shared_ptr<SharedRecorder> rec_;
    };

    Services services_;
    std::optional<CorpusManifest> manifest_;
    fs::path embedding_root_;
    std::map<std::string, std::shared_ptr<HttpTransport>> transports_;
    std::shared_ptr<ReplayTransport> replay_;
    std::shared_ptr<SharedRecorder> recorder_;
    fs::path record_path_;
    std::unique_ptr<EncoderClient> encoder_;
    std::unique_ptr<GeneratorClient> generator_;
};

namespace detail {

inline void write_jsonl(const fs::path& path, const std::vector<nlohmann::ordered_json>& rows) {
    std::string text;
    for (const auto& r : rows) text += r.dump() + "\n";
    binary::write_file(path, text);
}

inline std::string pct(double v) { return format_fixed(100.0 * v, 2); }

inline std::map<std::string, std::string> truth_map(const std::vector<QueryRecord>& queries) {
    std::map<std::string, std::string> truth;
    for (const auto& q : queries) {
        if (q.video_id) truth[q.query_id] = *q.video_id;
    }
    return truth;
}

inline VideoIndex build_index_for(Context& ctx, double alpha, const SelectorModel* selector) {
    IndexBuildConfig bc;
    bc.repr.alpha = alpha;
    bc.repr.frames_per_video = ctx.cfg.retrieval.frames_per_video;
    bc.repr.candidates = ctx.cfg.retrieval.candidates;
    bc.repr.n_subsets = ctx.cfg.retrieval.n_subsets;
    bc.repr.seed = ctx.cfg.seed;
    bc.embedding_root = ctx.embedding_root();
    bc.selector = selector;
    return build_index(ctx.manifest(), bc);
}

inline std::optional<SelectorModel> load_optional_selector(const std::string& path, SelectorMode expected) {
    if (path.empty()) return std::nullopt;
    auto model = load_selector(path);
    if (model.mode != expected) fail(ErrorKind::WrongMode, path + " holds a " + std::string(to_string(model.mode)) + " selector");
    return model;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
    std::string precomputed;
    std::string media;
    std::string metadata;
    std::string corpus_id;
    bool transcribe = false;
    double fps = 1.0;
};

inline std::map<std::string, nlohmann::json> load_metadata(const std::string& path) {
    std::map<std::string, nlohmann::json> meta;
    if (path.empty()) return meta;
    for (auto& j : detail::read_jsonl(path)) {
        auto id = detail::opt_string(j, "video_id", path);
        if (!id) fail(ErrorKind::SchemaViolation, path + ": video_id");
        meta[*id] = std::move(j);
    }
    return meta;
}

inline void apply_metadata(VideoRecord& v, const std::map<std::string, nlohmann::json>& meta) {
    auto it = meta.find(v.video_id);
    if (it == meta.end()) return;
    const auto& j = it->second;
    const std::string where = "metadata for " + v.video_id;
    if (auto s = detail::opt_string(j, "source_path", where)) v.source_path = *s;
    if (auto s = detail::opt_string(j, "subtitle", where)) v.subtitle = *s;
    if (auto s = detail::opt_string(j, "aux_transcript", where)) v.aux_transcript = *s;
    if (auto s = detail::opt_string(j, "category", where)) v.category = *s;
    if (auto d = j.find("duration_s"); d != j.end()) {
        if (!d->is_number() || d->get<double>() < 0.0) fail(ErrorKind::SchemaViolation, where + ": duration_s");
        v.duration_s = d->get<double>();
    }
}

inline int cmd_ingest(Context& ctx, const IngestOptions& o) {
    if (o.precomputed.empty() == o.media.empty()) fail(ErrorKind::InvalidConfig, "ingest needs exactly one of --precomputed or --media");
    const auto meta = load_metadata(o.metadata);
    const fs::path source_dir = o.precomputed.empty() ? fs::path(o.media) : fs::path(o.precomputed);
    if (!fs::is_directory(source_dir)) fail(ErrorKind::MissingFile, source_dir.string());

    CorpusManifest manifest;
    manifest.corpus_id = o.corpus_id.empty() ? source_dir.filename().string() : o.corpus_id;
    manifest.embedding_dir = "embeddings";
    const fs::path emb_dir = ctx.output("embeddings");
    fs::create_directories(emb_dir);

    std::vector<std::pair<std::string, Error>> failures;
    std::optional<std::uint32_t> dim;
    auto check_dim = [&](std::uint32_t d) {
        if (!dim) dim = d;
        if (*dim != d) fail(ErrorKind::DimMismatch, "embedding width " + std::to_string(d) + " vs " + std::to_string(*dim));
    };
    // Videos whose text still needs embedding after transcription.
    std::vector<std::size_t> needs_text;

    if (!o.precomputed.empty()) {
        manifest.encoder_id = "precomputed";
        std::vector<std::string> ids;
        const std::string suffix = ".visual.vrem";
        for (const auto& entry : fs::directory_iterator(source_dir)) {
            const std::string name = entry.path().filename().string();
            if (entry.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) ids.push_back(name.substr(0, name.size() - suffix.size()));
        }
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            try {
                auto visual = read_embeddings(embedding_path(source_dir, id, Modality::Visual));
                if (visual.modality != Modality::Visual) fail(ErrorKind::InvalidMatrix, "visual file holds a text embedding");
                check_dim(visual.dim);
                VideoRecord v;
                v.video_id = id;
                v.frame_count = visual.count;
                v.duration_s = visual.timestamps ? static_cast<double>(visual.timestamps->back()) + 1.0 : static_cast<double>(visual.count);
                apply_metadata(v, meta);
                write_embeddings(visual, embedding_path(emb_dir, id, Modality::Visual));
                const auto text_path = embedding_path(source_dir, id, Modality::Text);
                if (fs::exists(text_path)) {
                    auto text = read_embeddings(text_path);
                    if (text.modality != Modality::Text) fail(ErrorKind::InvalidMatrix, "text file holds a visual embedding");
                    check_dim(text.dim);
                    write_embeddings(text, embedding_path(emb_dir, id, Modality::Text));
                } else if (o.transcribe) {
                    if (!v.text()) v = ensure_transcript(std::move(v), ctx.encoder());
                    needs_text.push_back(manifest.videos.size());
                }
                manifest.videos.push_back(std::move(v));
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::TransportFailure) throw;
                failures.emplace_back(id, e);
            }
        }
    } else {
        const auto health = ctx.encoder().health();
        if (health.status != "ok") fail(ErrorKind::ServiceError, "encoder reports status " + health.status);
        manifest.encoder_id = health.encoder_id;
        dim = health.dim;
        std::vector<fs::path> media;
        for (const auto& entry : fs::directory_iterator(source_dir)) {
            const auto ext = entry.path().extension().string();
            if (entry.is_regular_file() && ext != ".txt" && ext != ".json" && ext != ".jsonl") media.push_back(entry.path());
        }
        std::sort(media.begin(), media.end());
        for (const auto& path : media) {
            const std::string id = path.stem().string();
            try {
                const std::string abs = fs::absolute(path).lexically_normal().string();
                auto visual = ctx.encoder().embed_frames(id, abs, o.fps);
                check_dim(visual.dim);
                VideoRecord v;
                v.video_id = id;
                v.source_path = abs;
                v.frame_count = visual.count;
                v.duration_s = static_cast<double>(visual.count) / o.fps;
                const fs::path sidecar = fs::path(path).replace_extension(".txt");
                if (fs::exists(sidecar)) v.subtitle = binary::read_file(sidecar);
                apply_metadata(v, meta);
                if (o.transcribe) v = ensure_transcript(std::move(v), ctx.encoder());
                write_embeddings(visual, embedding_path(emb_dir, id, Modality::Visual));
                if (v.text()) needs_text.push_back(manifest.videos.size());
                manifest.videos.push_back(std::move(v));
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::TransportFailure) throw;
                failures.emplace_back(id, e);
            }
        }
    }

    std::vector<std::string> texts;
    std::vector<std::size_t> text_owner;
    for (std::size_t i : needs_text) {
        if (manifest.videos[i].text()) {
            texts.push_back(*manifest.videos[i].text());
            text_owner.push_back(i);
        }
    }
    if (!texts.empty()) {
        const auto vectors = ctx.encoder().embed_texts(texts);
        for (std::size_t j = 0; j < vectors.size(); ++j) {
            const auto& v = manifest.videos[text_owner[j]];
            check_dim(static_cast<std::uint32_t>(vectors[j].size()));
            EmbeddingMatrix e;
            e.video_id = v.video_id;
            e.modality = Modality::Text;
            e.dim = static_cast<std::uint32_t>(vectors[j].size());
            e.count = 1;
            e.values.assign(vectors[j].begin(), vectors[j].end());
            write_embeddings(e, embedding_path(emb_dir, v.video_id, Modality::Text));
        }
    }

    manifest.embedding_dim = dim.value_or(1);
    save_manifest(manifest, ctx.output("manifest.json"));
    ctx.out << "ingested " << manifest.videos.size() << " videos (dim " << manifest.embedding_dim << ")\n";
    for (const auto& [id, e] : failures) ctx.err << "error: video " << id << ": " << e.what() << "\n";
    return failures.empty() ? 0 : exit_code_for(failures.front().second.kind());
}

// ---------------------------------------------------------------------------
// index / retrieve / sweep-alpha

struct IndexOptions {
    std::string strategy = "uniform";
    std::string selector;
};

inline int cmd_index(Context& ctx, const IndexOptions& o) {
    if (o.strategy != "uniform" && o.strategy != "adaptive") fail(ErrorKind::InvalidConfig, "strategy (expected uniform|adaptive)");
    std::optional<SelectorModel> selector;
    if (o.strategy == "adaptive") {
        const std::string path = o.selector.empty() ? ctx.cfg.selector.retrieval : o.selector;
        if (path.empty()) fail(ErrorKind::InvalidConfig, "selector.retrieval: required for the adaptive strategy");
        selector = detail::load_optional_selector(path, SelectorMode::Retrieval);
    }
    const auto index = detail::build_index_for(ctx, ctx.cfg.alpha, selector ? &*selector : nullptr);
    write_index(index, ctx.output("index.vidx"));
    ctx.out << "indexed " << index.entries.size() << " videos (" << to_string(index.selector_mode) << ", alpha " << format_fixed(index.alpha, 2)
            << ")\n";
    return 0;
}

struct RetrieveOptions {
    std::string index;
    std::string queries;
    std::optional<std::size_t> k;
    std::string source = "ensemble";
};

inline int cmd_retrieve(Context& ctx, const RetrieveOptions& o) {
    if (o.index.empty()) fail(ErrorKind::InvalidConfig, "--index is required");
    if (o.queries.empty()) fail(ErrorKind::InvalidConfig, "--queries is required");
    const std::size_t k = o.k.value_or(ctx.cfg.retrieval.k);
    const auto source = parse_rank_source(o.source);
    const auto index = read_index(o.index);
    const auto queries = load_queries(o.queries);
    const auto vectors = ctx.query_embeddings(queries);
    std::vector<RetrievalResult> results;
    std::vector<nlohmann::ordered_json> rows;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        results.push_back(retrieve_topk(index, vectors[i], k, queries[i].query_id, source));
        rows.push_back(to_json(results.back()));
    }
    detail::write_jsonl(ctx.output("retrieval.jsonl"), rows);
    const auto truth = detail::truth_map(queries);
    if (!queries.empty() && truth.size() == queries.size()) {
        nlohmann::ordered_json summary;
        summary["count"] = queries.size();
        summary["k"] = k;
        summary["recall_at_1"] = recall_at_k(results, truth, 1);
        summary["recall_at_k"] = recall_at_k(results, truth, k);
        binary::write_file(ctx.output("recall.json"), summary.dump(2) + "\n");
        ctx.out << "R@1=" << format_fixed(summary["recall_at_1"].get<double>(), 4);
        if (k > 1) ctx.out << " R@" << k << "=" << format_fixed(summary["recall_at_k"].get<double>(), 4);
        ctx.out << " over " << queries.size() << " queries\n";
    } else {
        ctx.out << "retrieved top-" << k << " for " << queries.size() << " queries\n";
    }
    return 0;
}

struct SweepOptions {
    std::string queries;
    double step = 0.1;
    std::size_t k = 5;
    std::string strategy = "uniform";
    std::string selector;
};

inline int cmd_sweep_alpha(Context& ctx, const SweepOptions& o) {
    if (o.queries.empty()) fail(ErrorKind::InvalidConfig, "--queries is required");
    if (!(o.step > 0.0 && o.step <= 1.0)) fail(ErrorKind::InvalidConfig, "step: must lie in (0, 1]");
    if (o.k == 0) fail(ErrorKind::InvalidConfig, "k: must be positive");
    std::optional<SelectorModel> selector;
    if (o.strategy == "adaptive") {
        selector = detail::load_optional_selector(o.selector.empty() ? ctx.cfg.selector.retrieval : o.selector, SelectorMode::Retrieval);
        if (!selector) fail(ErrorKind::InvalidConfig, "selector.retrieval: required for the adaptive strategy");
    } else if (o.strategy != "uniform") {
        fail(ErrorKind::InvalidConfig, "strategy (expected uniform|adaptive)");
    }
    const auto queries = load_queries(o.queries);
    const auto truth = detail::truth_map(queries);
    if (queries.empty() || truth.size() != queries.size()) fail(ErrorKind::MissingTruth, "every sweep query needs a video_id");
    const auto vectors = ctx.query_embeddings(queries);
    const auto base = detail::build_index_for(ctx, 0.0, selector ? &*selector : nullptr);

    const auto steps = static_cast<std::size_t>(std::llround(1.0 / o.step));
    std::string csv = "alpha,recall_at_1,recall_at_" + std::to_string(o.k) + "\n";
    for (std::size_t s = 0; s <= steps; ++s) {
        const double alpha = std::min(1.0, static_cast<double>(s) * o.step);
        const auto index = reweight_index(base, alpha);
        std::vector<RetrievalResult> results;
        for (std::size_t i = 0; i < queries.size(); ++i) results.push_back(retrieve_topk(index, vectors[i], o.k, queries[i].query_id));
        const double r1 = recall_at_k(results, truth, 1);
        const double rk = recall_at_k(results, truth, o.k);
        csv += format_fixed(alpha, 2) + "," + format_fixed(r1, 6) + "," + format_fixed(rk, 6) + "\n";
        ctx.out << "alpha " << format_fixed(alpha, 2) << "  R@1 " << detail::pct(r1) << "  R@" << o.k << " " << detail::pct(rk) << "\n";
    }
    binary::write_file(ctx.output("sweep_alpha.csv"), csv);
    return 0;
}

// ---------------------------------------------------------------------------
// selector-train / selector-select

struct SelectorTrainOptions {
    std::string mode = "retrieval";
    std::string queries;
    std::optional<std::size_t> epochs;
    std::optional<double> learning_rate;
};

namespace detail {

struct SelectorSetup {
    SelectorMode mode;
    std::size_t m;
    std::size_t candidates;
    std::size_t n_subsets;
};

inline SelectorSetup selector_setup(const EngineConfig& cfg, SelectorMode mode) {
    if (mode == SelectorMode::Retrieval) return {mode, cfg.retrieval.frames_per_video, cfg.retrieval.candidates, cfg.retrieval.n_subsets};
    return {mode, cfg.generation.frames_per_video, cfg.generation.candidates, cfg.generation.n_subsets};
}

inline std::vector<SelectorPair> selector_pairs(Context& ctx, const std::vector<QueryRecord>& queries, const std::vector<Vector>& vectors,
                                                const SelectorSetup& setup, const std::string& command) {
    std::vector<SelectorPair> pairs;
    std::map<std::string, EmbeddingMatrix> cache;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& q = queries[i];
        if (!q.video_id) fail(ErrorKind::MissingTruth, q.query_id + " has no video_id");
        if (!ctx.manifest().find(*q.video_id)) fail(ErrorKind::SchemaViolation, q.query_id + ": unknown video " + *q.video_id);
        auto it = cache.find(*q.video_id);
        if (it == cache.end()) it = cache.emplace(*q.video_id, ctx.visual(*q.video_id)).first;
        SelectorPair p;
        p.query_id = q.query_id;
        p.query = vectors[i];
        p.candidates = reduce_candidates(it->second, setup.candidates, derive_seed(ctx.cfg.seed, command, *q.video_id + "/reduce"));
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace detail

inline int cmd_selector_train(Context& ctx, SelectorTrainOptions o) {
    if (o.queries.empty()) fail(ErrorKind::InvalidConfig, "--queries is required");
    const auto setup = detail::selector_setup(ctx.cfg, parse_selector_mode(o.mode));
    const auto queries = load_queries(o.queries);
    const auto vectors = ctx.query_embeddings(queries);
    const auto pairs = detail::selector_pairs(ctx, queries, vectors, setup, "selector-train");

    SubsetSignal signal;
    std::map<std::string, const QueryRecord*> by_id;
    for (const auto& q : queries) by_id[q.query_id] = &q;
    if (setup.mode == SelectorMode::Retrieval) {
        signal = retrieval_similarity_signal();
    } else {
        // ROUGE-L of the answer generated from the subset's frames alone.
        signal = [&ctx, &by_id, frames = ctx.frames()](const SelectorPair& pair, std::span<const std::size_t> subset) {
            const auto& q = *by_id.at(pair.query_id);
            if (!q.answer) fail(ErrorKind::MissingTruth, q.query_id + " has no reference answer");
            GenerationContext gc;
            gc.query_id = q.query_id;
            gc.question = q.question;
            ContextSegment seg;
            seg.video_id = pair.candidates.video_id;
            for (std::size_t c : subset) seg.frames.push_back({pair.candidates.source_indices[c], pair.candidates.timestamps[c]});
            std::sort(seg.frames.begin(), seg.frames.end(), [](const FrameRef& a, const FrameRef& b) { return a.timestamp < b.timestamp; });
            gc.segments.push_back(std::move(seg));
            return rouge_l(*q.answer, generate_answer(gc, ctx.generator(), frames).answer_text);
        };
    }
    const auto collected = collect_training_data(pairs, setup.m, setup.mode == SelectorMode::Retrieval ? ctx.cfg.training.n_subsets : setup.n_subsets, derive_seed(ctx.cfg.seed, "selector-train", "subsets"), signal);
    for (const auto& s : collected.skipped) ctx.err << "skipped " << s.query_id << "/" << s.video_id << ": " << s.reason << "\n";
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& ex : collected.examples) rows.push_back(to_json(ex));
    detail::write_jsonl(ctx.output("training_data.jsonl"), rows);

    const auto& t = ctx.cfg.training;
    const std::size_t dim = ctx.manifest().embedding_dim;
    const auto init_seed = derive_seed(ctx.cfg.seed, "selector-train", "init");
    SelectorModel model = setup.mode == SelectorMode::Retrieval
                              ? make_retrieval_selector(setup.m, setup.candidates, dim, t.hidden1, t.hidden2, init_seed)
                              : make_generation_selector(setup.m, setup.candidates, dim, t.hidden1, t.hidden2, t.projection, init_seed);
    TrainConfig tc;
    tc.epochs = o.epochs.value_or(t.epochs);
    tc.learning_rate = o.learning_rate.value_or(t.learning_rate);
    tc.batch_size = t.batch_size;
    tc.optimizer = t.optimizer;
    tc.seed = derive_seed(ctx.cfg.seed, "selector-train", "shuffle");
    const auto result = train_selector(std::move(model), pairs, collected.examples, tc);
    save_selector(result.model, ctx.output("selector.json"));

    nlohmann::ordered_json log;
    log["mode"] = to_string(setup.mode);
    log["examples"] = collected.examples.size();
    log["skipped"] = collected.skipped.size();
    log["epochs"] = tc.epochs;
    log["loss_trace"] = result.loss_trace;
    log["train_accuracy"] = result.train_accuracy;
    binary::write_file(ctx.output("train_log.json"), log.dump(2) + "\n");
    ctx.out << "trained " << to_string(setup.mode) << " selector on " << collected.examples.size() << " examples, accuracy "
            << format_fixed(result.train_accuracy, 4) << "\n";
    return 0;
}

struct SelectorSelectOptions {
    std::string selector;
    std::string queries;
    std::vector<std::string> videos;
};

inline int cmd_selector_select(Context& ctx, const SelectorSelectOptions& o) {
    if (o.selector.empty()) fail(ErrorKind::InvalidConfig, "--selector is required");
    const auto model = load_selector(o.selector);
    const auto setup = detail::selector_setup(ctx.cfg, model.mode);
    std::vector<nlohmann::ordered_json> rows;
    auto emit = [&](const std::optional<std::string>& query_id, const FrameCandidates& cands, const SubsetCandidate& pick) {
        nlohmann::ordered_json j;
        if (query_id) j["query_id"] = *query_id;
        j["video_id"] = cands.video_id;
        std::vector<std::size_t> frames;
        std::vector<double> times;
        for (std::size_t c : pick.frame_indices) {
            frames.push_back(cands.source_indices[c]);
            times.push_back(cands.timestamps[c]);
        }
        j["frame_indices"] = frames;
        j["timestamps"] = times;
        j["score"] = pick.score ? nlohmann::ordered_json(*pick.score) : nlohmann::ordered_json(nullptr);
        rows.push_back(std::move(j));
    };
    if (model.mode == SelectorMode::Retrieval) {
        std::vector<std::string> ids = o.videos;
        if (ids.empty()) {
            for (const auto& v : ctx.manifest().videos) ids.push_back(v.video_id);
        }
        for (const auto& id : ids) {
            const auto cands = reduce_candidates(ctx.visual(id), model.candidate_count, derive_seed(ctx.cfg.seed, "index", id + "/reduce"));
            emit(std::nullopt, cands, select_frames(model, cands, std::nullopt, setup.n_subsets, derive_seed(ctx.cfg.seed, "index", id + "/select")));
        }
    } else {
        if (o.queries.empty()) fail(ErrorKind::MissingQuery, "generation selection needs --queries");
        const auto queries = load_queries(o.queries);
        const auto vectors = ctx.query_embeddings(queries);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const auto& q = queries[i];
            if (!q.video_id) fail(ErrorKind::MissingTruth, q.query_id + " has no video_id");
            const auto cands = reduce_candidates(ctx.visual(*q.video_id), model.candidate_count, derive_seed(ctx.cfg.seed, "generate", *q.video_id + "/reduce"));
            emit(q.query_id, cands, select_frames(model, cands, vectors[i], setup.n_subsets, derive_seed(ctx.cfg.seed, "generate", *q.video_id + "/select")));
        }
    }
    detail::write_jsonl(ctx.output("selection.jsonl"), rows);
    ctx.out << "selected frames for " << rows.size() << " items\n";
    return 0;
}

// ---------------------------------------------------------------------------
// generate / synthqa

struct GenerateOptions {
    std::string queries;
    std::string retrieval;
    std::string index;
    std::string selector;
    std::optional<std::string> mode;
    bool transcribe = false;
};

inline int cmd_generate(Context& ctx, const GenerateOptions& o) {
    if (o.queries.empty()) fail(ErrorKind::InvalidConfig, "--queries is required");
    if (o.mode) ctx.cfg.generation.mode = parse_context_mode(*o.mode);
    const auto queries = load_queries(o.queries);
    const auto& manifest = ctx.manifest();
    const auto selector = detail::load_optional_selector(o.selector.empty() ? ctx.cfg.selector.generation : o.selector, SelectorMode::Generation);

    std::optional<std::vector<Vector>> vectors;
    if (selector || o.retrieval.empty()) vectors = ctx.query_embeddings(queries);

    std::map<std::string, RetrievalResult> retrieved;
    if (!o.retrieval.empty()) {
        for (const auto& j : detail::read_jsonl(o.retrieval)) {
            auto r = retrieval_result_from_json(j);
            const auto id = r.query_id;
            retrieved[id] = std::move(r);
        }
    } else {
        if (o.index.empty()) fail(ErrorKind::InvalidConfig, "generate needs --retrieval or --index");
        const auto index = read_index(o.index);
        for (std::size_t i = 0; i < queries.size(); ++i) retrieved[queries[i].query_id] = retrieve_topk(index, (*vectors)[i], ctx.cfg.retrieval.k, queries[i].query_id);
    }

    AssembleConfig ac;
    ac.frames_per_video = ctx.cfg.generation.frames_per_video;
    ac.candidates = ctx.cfg.generation.candidates;
    ac.n_subsets = ctx.cfg.generation.n_subsets;
    ac.mode = ctx.cfg.generation.mode;
    ac.max_transcript_chars = ctx.cfg.generation.max_transcript_chars;
    ac.seed = ctx.cfg.seed;

    // Clients are created up front so worker threads only share them.
    auto& generator = ctx.generator();
    EncoderClient* asr = o.transcribe ? &ctx.encoder() : nullptr;
    const auto frames = ctx.frames();
    const fs::path root = ctx.embedding_root();

    auto results = parallel_map(queries.size(), ctx.cfg.max_inflight, [&](std::size_t i) {
        const auto& q = queries[i];
        auto it = retrieved.find(q.query_id);
        if (it == retrieved.end()) fail(ErrorKind::EmptyRetrieval, q.query_id + " has no retrieval result");
        AssembleInputs in;
        in.manifest = &manifest;
        in.selector = selector ? &*selector : nullptr;
        if (vectors) in.query_embedding = (*vectors)[i];
        in.embeddings = [&root](const std::string& id) { return read_embeddings(embedding_path(root, id, Modality::Visual)); };
        in.asr = asr;
        const auto gc = assemble_context(q.query_id, q.question, it->second, ac, in);
        return generate_answer(gc, generator, frames);
    });
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& r : results) rows.push_back(to_json(r));
    detail::write_jsonl(ctx.output("answers.jsonl"), rows);
    ctx.out << "generated " << results.size() << " answers (" << to_string(ac.mode) << ")\n";
    return 0;
}

struct SynthQaOptions {
    std::vector<std::string> videos;
};

inline int cmd_synthqa(Context& ctx, const SynthQaOptions& o) {
    const auto& manifest = ctx.manifest();
    std::vector<const VideoRecord*> videos;
    if (o.videos.empty()) {
        for (const auto& v : manifest.videos) videos.push_back(&v);
    } else {
        for (const auto& id : o.videos) {
            const auto* v = manifest.find(id);
            if (!v) fail(ErrorKind::SchemaViolation, "unknown video " + id);
            videos.push_back(v);
        }
    }
    auto& generator = ctx.generator();
    const auto frames = ctx.frames();
    const std::size_t per_video = ctx.cfg.generation.frames_per_video;
    auto batches = parallel_map(videos.size(), ctx.cfg.max_inflight, [&](std::size_t i) {
        const auto& v = *videos[i];
        std::vector<ContentPart> parts;
        for (std::size_t f : uniform_stride(v.frame_count, per_video)) parts.push_back(ContentPart::make_image(base64_encode(frames(v.video_id, f)), "image/jpeg"));
        return synthesize_qa(v, parts, generator);
    });
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& batch : batches) {
        for (std::size_t j = 0; j < batch.size(); ++j) {
            const auto& qa = batch[j];
            nlohmann::ordered_json row;
            row["query_id"] = qa.source_video_id + "-q" + std::to_string(j + 1);
            row["question"] = qa.question;
            row["answer"] = qa.answer;
            row["video_id"] = qa.source_video_id;
            row["category"] = qa.category ? nlohmann::ordered_json(*qa.category) : nlohmann::ordered_json(nullptr);
            row["origin"] = qa.origin;
            rows.push_back(std::move(row));
        }
    }
    detail::write_jsonl(ctx.output("synthetic_qa.jsonl"), rows);
    ctx.out << "synthesized " << rows.size() << " QA pairs from " << videos.size() << " videos\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
    std::vector<std::string> answers;
    std::string queries;
    std::string compare;
    std::string group_by;
    bool geval = false;
};

inline std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

inline int cmd_eval(Context& ctx, const EvalOptions& o) {
    if (o.answers.empty()) fail(ErrorKind::InvalidConfig, "--answers is required");
    if (o.queries.empty()) fail(ErrorKind::InvalidConfig, "--queries is required");
    if (!o.group_by.empty() && o.group_by != "category") fail(ErrorKind::InvalidConfig, "group-by (only category is supported)");
    const auto labels = o.compare.empty() ? std::vector<std::string>{} : split_commas(o.compare);
    if (!labels.empty() && labels.size() != o.answers.size()) {
        fail(ErrorKind::InvalidConfig, "--compare names " + std::to_string(labels.size()) + " runs but " + std::to_string(o.answers.size()) + " --answers files were given");
    }
    if (labels.empty() && o.answers.size() > 1) fail(ErrorKind::InvalidConfig, "several --answers files need --compare labels");
    const auto queries = load_queries(o.queries);
    std::map<std::string, const QueryRecord*> refs;
    for (const auto& q : queries) refs[q.query_id] = &q;

    GeneratorClient* judge = o.geval ? &ctx.generator() : nullptr;
    std::string comparison = judge ? "strategy,rouge_l,bleu_4,geval\n" : "strategy,rouge_l,bleu_4\n";
    for (std::size_t run = 0; run < o.answers.size(); ++run) {
        std::vector<GenerationResult> answers;
        for (const auto& j : detail::read_jsonl(o.answers[run])) answers.push_back(generation_result_from_json(j));
        auto rows = parallel_map(answers.size(), ctx.cfg.max_inflight, [&](std::size_t i) {
            const auto& a = answers[i];
            auto it = refs.find(a.query_id);
            if (it == refs.end() || !it->second->answer) fail(ErrorKind::MissingTruth, a.query_id + " has no reference answer");
            const auto& q = *it->second;
            MetricRow row;
            row.query_id = a.query_id;
            row.rouge_l = rouge_l(*q.answer, a.answer_text);
            row.bleu_4 = bleu_4(*q.answer, a.answer_text);
            row.category = q.category;
            if (judge) row.geval = geval_judge(q.question, *q.answer, a.answer_text, *judge);
            return row;
        });
        const auto report = aggregate_report(std::move(rows), !o.group_by.empty());
        const std::string suffix = labels.empty() ? "" : "_" + labels[run];
        binary::write_file(ctx.output("report" + suffix + ".json"), to_json(report).dump(2) + "\n");
        binary::write_file(ctx.output("report" + suffix + ".csv"), to_csv(report));
        const auto& agg = report.aggregates;
        ctx.out << (labels.empty() ? std::string() : labels[run] + ": ") << "ROUGE-L " << detail::pct(agg.rouge_l) << "  BLEU-4 " << detail::pct(agg.bleu_4);
        if (agg.geval) ctx.out << "  G-Eval " << format_fixed(*agg.geval, 2);
        ctx.out << "  (" << agg.count << " answers)\n";
        if (report.group_by) {
            for (const auto& [cat, a] : *report.group_by) {
                ctx.out << "  " << cat << ": ROUGE-L " << detail::pct(a.rouge_l) << "  BLEU-4 " << detail::pct(a.bleu_4) << "  (" << a.count << ")\n";
            }
        }
        comparison += csv_field(labels.empty() ? "run" : labels[run]) + "," + detail::pct(agg.rouge_l) + "," + detail::pct(agg.bleu_4);
        if (judge) comparison += "," + (agg.geval ? format_fixed(*agg.geval, 2) : std::string());
        comparison += "\n";
    }
    if (!labels.empty()) binary::write_file(ctx.output("comparison.csv"), comparison);
    return 0;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(const std::vector<std::string>& args, const Services& services = network_services(), std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"vrag: retrieval-augmented generation over video corpora"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opts;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::size_t max_inflight = 0;
    std::string manifest, encoder_url, generator_url, generator_model, frame_dir;
    app.add_option("--config", opts.config_path, "JSON config file (default: $VRAG_CONFIG)");
    app.add_option("--out", opts.out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "root seed");
    auto* manifest_opt = app.add_option("--manifest", manifest, "corpus manifest");
    auto* alpha_opt = app.add_option("--alpha", alpha, "text weight in the ensemble representation");
    auto* encoder_opt = app.add_option("--encoder-url", encoder_url, "encoder service base URL");
    auto* generator_opt = app.add_option("--generator-url", generator_url, "generator base URL");
    auto* model_opt = app.add_option("--generator-model", generator_model, "generator model name");
    auto* inflight_opt = app.add_option("--max-inflight", max_inflight, "concurrent generator calls");
    auto* frame_dir_opt = app.add_option("--frame-dir", frame_dir, "directory of <video_id>/<index>.jpg frames");
    app.add_option("--record", opts.record_path, "save every HTTP exchange to this fixture file");
    app.add_option("--replay", opts.replay_path, "answer HTTP calls from a recorded fixture file");

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "build a manifest and embedding files");
    c_ingest->add_option("--precomputed", ingest.precomputed, "directory of <id>.visual.vrem / <id>.text.vrem files");
    c_ingest->add_option("--media", ingest.media, "directory of media files sent to the encoder service");
    c_ingest->add_option("--metadata", ingest.metadata, "JSONL of per-video fields (video_id, subtitle, category, ...)");
    c_ingest->add_option("--corpus-id", ingest.corpus_id, "corpus id (default: source directory name)");
    c_ingest->add_option("--fps", ingest.fps, "frame sampling rate");
    c_ingest->add_flag("--transcribe", ingest.transcribe, "transcribe videos without subtitles");

    IndexOptions index;
    auto* c_index = app.add_subcommand("index", "build the retrieval index");
    c_index->add_option("--strategy", index.strategy, "uniform|adaptive");
    c_index->add_option("--selector", index.selector, "retrieval selector (adaptive strategy)");

    RetrieveOptions retrieve;
    std::size_t retrieve_k = 0;
    auto* c_retrieve = app.add_subcommand("retrieve", "rank videos for each query");
    c_retrieve->add_option("--index", retrieve.index, "index file");
    c_retrieve->add_option("--queries", retrieve.queries, "queries JSONL");
    auto* k_opt = c_retrieve->add_option("--k", retrieve_k, "result depth");
    c_retrieve->add_option("--source", retrieve.source, "ensemble|visual|text");

    SelectorTrainOptions strain;
    std::size_t epochs = 0;
    double lr = 0.0;
    auto* c_strain = app.add_subcommand("selector-train", "collect labeled subsets and train a frame selector");
    c_strain->add_option("--mode", strain.mode, "retrieval|generation");
    c_strain->add_option("--queries", strain.queries, "queries JSONL with video_id (and answer for generation)");
    auto* epochs_opt = c_strain->add_option("--epochs", epochs, "training epochs");
    auto* lr_opt = c_strain->add_option("--lr", lr, "learning rate");

    SelectorSelectOptions sselect;
    auto* c_sselect = app.add_subcommand("selector-select", "pick frames with a trained selector");
    c_sselect->add_option("--selector", sselect.selector, "selector file");
    c_sselect->add_option("--queries", sselect.queries, "queries JSONL (generation selectors)");
    c_sselect->add_option("--video", sselect.videos, "video id (repeatable; default all)");

    GenerateOptions generate;
    std::string gen_mode;
    auto* c_generate = app.add_subcommand("generate", "answer queries from retrieved videos");
    c_generate->add_option("--queries", generate.queries, "queries JSONL");
    c_generate->add_option("--retrieval", generate.retrieval, "retrieval.jsonl from the retrieve command");
    c_generate->add_option("--index", generate.index, "index file (retrieve on the fly)");
    c_generate->add_option("--selector", generate.selector, "generation selector");
    auto* mode_opt = c_generate->add_option("--mode", gen_mode, "video_only|video_plus_text");
    c_generate->add_flag("--transcribe", generate.transcribe, "transcribe retrieved videos that lack text");

    SynthQaOptions synth;
    auto* c_synth = app.add_subcommand("synthqa", "generate three QA pairs per video");
    c_synth->add_option("--video", synth.videos, "video id (repeatable; default all)");

    EvalOptions eval;
    auto* c_eval = app.add_subcommand("eval", "score answers against references");
    c_eval->add_option("--answers", eval.answers, "answers JSONL (repeatable with --compare)");
    c_eval->add_option("--queries", eval.queries, "queries JSONL with reference answers");
    c_eval->add_option("--compare", eval.compare, "comma-separated labels, one per --answers file");
    c_eval->add_option("--group-by", eval.group_by, "category");
    c_eval->add_flag("--geval", eval.geval, "also ask the generator for G-Eval scores");

    SweepOptions sweep;
    auto* c_sweep = app.add_subcommand("sweep-alpha", "recall across ensemble weights");
    c_sweep->add_option("--queries", sweep.queries, "queries JSONL with video_id");
    c_sweep->add_option("--step", sweep.step, "alpha step");
    c_sweep->add_option("--k", sweep.k, "second recall depth");
    c_sweep->add_option("--strategy", sweep.strategy, "uniform|adaptive");
    c_sweep->add_option("--selector", sweep.selector, "retrieval selector (adaptive strategy)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        EngineConfig cfg = resolve_config(opts.config_path);
        if (*seed_opt) cfg.seed = seed;
        if (*manifest_opt) cfg.manifest_path = manifest;
        if (*alpha_opt) cfg.alpha = alpha;
        if (*encoder_opt) cfg.endpoints.encoder_url = encoder_url;
        if (*generator_opt) cfg.endpoints.generator_url = generator_url;
        if (*model_opt) cfg.endpoints.generator_model = generator_model;
        if (*inflight_opt) cfg.max_inflight = max_inflight;
        if (*frame_dir_opt) cfg.frame_dir = frame_dir;
        validate(cfg);

        Context ctx(std::move(cfg), opts.out_dir, services, out, err);
        if (!opts.replay_path.empty()) ctx.use_replay(opts.replay_path);
        if (!opts.record_path.empty()) ctx.use_recording(opts.record_path);

        int code = 0;
        if (*c_ingest) {
            code = cmd_ingest(ctx, ingest);
        } else if (*c_index) {
            code = cmd_index(ctx, index);
        } else if (*c_retrieve) {
            if (*k_opt) retrieve.k = retrieve_k;
            code = cmd_retrieve(ctx, retrieve);
        } else if (*c_strain) {
            if (*epochs_opt) strain.epochs = epochs;
            if (*lr_opt) strain.learning_rate = lr;
            code = cmd_selector_train(ctx, strain);
        } else if (*c_sselect) {
            code = cmd_selector_select(ctx, sselect);
        } else if (*c_generate) {
            if (*mode_opt) generate.mode = gen_mode;
            code = cmd_generate(ctx, generate);
        } else if (*c_synth) {
            code = cmd_synthqa(ctx, synth);
        } else if (*c_eval) {
            code = cmd_eval(ctx, eval);
        } else if (*c_sweep) {
            code = cmd_sweep_alpha(ctx, sweep);
        }
        ctx.finish();
        return code;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run(int argc, const char* const* argv, const Services& services = network_services()) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, services);
}

}  // namespace vrag::cli
