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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrag/cli.hpp"
#include "vrag/corpus_store.hpp"
#include "vrag/http.hpp"
#include "vrag/prompts.hpp"
#include "vrag/random.hpp"
#include "vrag/vector_math.hpp"

// A small planted corpus plus in-process encoder and generator stand-ins,
// shared by the CLI tests and the acceptance runner.
namespace vrag::testing {

struct PipelineFixture {
    std::filesystem::path root;
    std::filesystem::path manifest;
    std::filesystem::path precomputed;  // <id>.visual.vrem / <id>.text.vrem
    std::filesystem::path frame_dir;
    std::filesystem::path queries;
    std::filesystem::path metadata;
    std::vector<std::string> video_ids;
    std::size_t dim = 16;
};

inline std::string video_name(std::size_t i) {
    std::string n = std::to_string(i);
    return "vid" + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
}

/// Video i has a hidden direction u_i. Its text vector is u_i plus noise, a
/// handful of its frames are 3 u_i plus noise and the rest are noise. Query i
/// carries u_i plus a little noise and names video i as its truth.
inline PipelineFixture write_pipeline_fixture(const std::filesystem::path& root, std::size_t videos = 10, std::size_t frames = 40,
                                              std::size_t dim = 16, std::uint64_t seed = 7) {
    namespace fs = std::filesystem;
    PipelineFixture fx;
    fx.root = root;
    fx.dim = dim;
    fx.precomputed = root / "precomputed";
    fx.frame_dir = root / "frames";
    fx.queries = root / "queries.jsonl";
    fx.metadata = root / "metadata.jsonl";
    fx.manifest = root / "corpus" / "manifest.json";
    fs::create_directories(fx.precomputed);
    fs::create_directories(root / "corpus" / "embeddings");

    Rng rng(seed);
    auto noise = [&](double scale) {
        Vector v(dim);
        for (double& x : v) x = scale * rng.normal();
        return v;
    };
    CorpusManifest m{"pipeline", "test-encoder", static_cast<std::uint32_t>(dim), "embeddings", {}};
    std::string queries, metadata;
    const char* categories[] = {"Food and Entertaining", "Home and Garden", "Hobbies and Crafts"};
    for (std::size_t i = 0; i < videos; ++i) {
        const std::string id = video_name(i);
        fx.video_ids.push_back(id);
        Vector u = noise(1.0);
        u = l2_normalize(u);

        EmbeddingMatrix visual;
        visual.video_id = id;
        visual.modality = Modality::Visual;
        visual.dim = static_cast<std::uint32_t>(dim);
        visual.count = static_cast<std::uint32_t>(frames);
        std::vector<float> ts;
        for (std::size_t f = 0; f < frames; ++f) {
            Vector row = noise(0.3);
            if (f % 7 == 3) {
                for (std::size_t d = 0; d < dim; ++d) row[d] += 3.0 * u[d];
            }
            for (double x : row) visual.values.push_back(static_cast<float>(x));
            ts.push_back(static_cast<float>(f));
            fs::create_directories(fx.frame_dir / id);
            binary::write_file(fx.frame_dir / id / (std::to_string(f) + ".jpg"), "frame " + id + " " + std::to_string(f));
        }
        visual.timestamps = ts;

        EmbeddingMatrix text;
        text.video_id = id;
        text.modality = Modality::Text;
        text.dim = static_cast<std::uint32_t>(dim);
        text.count = 1;
        Vector t = noise(0.15);
        for (std::size_t d = 0; d < dim; ++d) text.values.push_back(static_cast<float>(t[d] + u[d]));

        for (const auto& dir : {fx.precomputed, root / "corpus" / "embeddings"}) {
            write_embeddings(visual, embedding_path(dir, id, Modality::Visual));
            write_embeddings(text, embedding_path(dir, id, Modality::Text));
        }
        const std::string subtitle = "In " + id + " we show step " + std::to_string(i) + " of the recipe.";
        const std::string category = categories[i % 3];
        m.videos.push_back({id, "/media/" + id + ".mp4", static_cast<double>(frames), static_cast<std::uint32_t>(frames), subtitle, std::nullopt, category});

        Vector q = noise(0.1);
        for (std::size_t d = 0; d < dim; ++d) q[d] += u[d];
        nlohmann::ordered_json qj;
        qj["query_id"] = "q" + std::to_string(i);
        qj["question"] = "What happens in step " + std::to_string(i) + "?";
        qj["answer"] = "Step " + std::to_string(i) + " of the recipe is shown in " + id + ".";
        qj["video_id"] = id;
        qj["category"] = category;
        qj["embedding"] = q;
        queries += qj.dump() + "\n";
        metadata += nlohmann::ordered_json{{"video_id", id}, {"subtitle", subtitle}, {"category", category}}.dump() + "\n";
    }
    save_manifest(m, fx.manifest);
    binary::write_file(fx.queries, queries);
    binary::write_file(fx.metadata, metadata);
    return fx;
}

/// Encoder stand-in: text vectors seeded by the text hash, ten frames per
/// video, a fixed transcript.
inline void install_fake_encoder_service(StubTransport& stub, std::size_t dim) {
    auto unit_for = [dim](const std::string& key) {
        Rng rng(fnv1a64(key));
        Vector v(dim);
        for (double& x : v) x = rng.normal();
        return l2_normalize(v);
    };
    stub.on_get("/healthz", [dim](const std::string&) {
        return HttpResponse{200, nlohmann::json{{"status", "ok"}, {"encoder_id", "fake"}, {"dim", dim}}.dump()};
    });
    stub.on_post("/v1/embed/text", [dim, unit_for](const std::string& body) {
        const auto texts = nlohmann::json::parse(body).at("texts").get<std::vector<std::string>>();
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& t : texts) rows.push_back(unit_for(t));
        return HttpResponse{200, nlohmann::json{{"dim", dim}, {"count", texts.size()}, {"embeddings", rows}}.dump()};
    });
    stub.on_post("/v1/embed/frames", [dim, unit_for](const std::string& body) {
        const auto path = nlohmann::json::parse(body).at("video_path").get<std::string>();
        nlohmann::json rows = nlohmann::json::array(), ts = nlohmann::json::array();
        for (int i = 0; i < 10; ++i) {
            rows.push_back(unit_for(path + "#" + std::to_string(i)));
            ts.push_back(i);
        }
        return HttpResponse{200, nlohmann::json{{"dim", dim}, {"count", 10}, {"embeddings", rows}, {"timestamps", ts}}.dump()};
    });
    stub.on_post("/v1/transcribe", [](const std::string&) {
        return HttpResponse{200, R"({"text":"we stir the pot","segments":[{"start_s":0.0,"end_s":2.0,"text":"we stir the pot"}]})"};
    });
}

/// Generator stand-in. Synthetic-QA prompts get three pairs built from the
/// attached transcript, G-Eval prompts get "4", anything else is answered
/// with the image count and the final text part.
inline void install_fake_generator(StubTransport& stub) {
    stub.on_post("/v1/chat", [](const std::string& body) {
        const auto parts = nlohmann::json::parse(body).at("messages").at(0).at("content");
        std::size_t images = 0;
        std::string first_text, last_text;
        for (const auto& p : parts) {
            if (p.at("type") == "image") {
                ++images;
            } else {
                if (first_text.empty()) first_text = p.at("text").get<std::string>();
                last_text = p.at("text").get<std::string>();
            }
        }
        std::string answer;
        if (first_text == prompts::synthetic_qa()) {
            nlohmann::json pairs = nlohmann::json::array();
            for (int k = 1; k <= 3; ++k) {
                pairs.push_back({{"question", "Question " + std::to_string(k) + " about: " + last_text}, {"answer", "Answer " + std::to_string(k)}});
            }
            answer = "Here you go:\n" + pairs.dump();
        } else if (first_text.find("Ground Truth Answer:") != std::string::npos) {
            answer = "4";
        } else {
            answer = "Seen " + std::to_string(images) + " frames. " + last_text;
        }
        return HttpResponse{200, nlohmann::json{{"answer", answer}}.dump()};
    });
}

/// Both stand-ins behind one Services value, reachable under any base URL.
struct FakeServices {
    std::shared_ptr<StubTransport> encoder = std::make_shared<StubTransport>();
    std::shared_ptr<StubTransport> generator = std::make_shared<StubTransport>();

    explicit FakeServices(std::size_t dim) {
        install_fake_encoder_service(*encoder, dim);
        install_fake_generator(*generator);
    }

    [[nodiscard]] cli::Services services() const {
        auto enc = encoder;
        auto gen = generator;
        return {[enc, gen](const std::string& url, double) -> std::shared_ptr<HttpTransport> {
            if (url.find("encoder") != std::string::npos) return enc;
            return gen;
        }};
    }
};

inline std::vector<std::string> args_with(std::vector<std::string> base, const std::vector<std::string>& more) {
    base.insert(base.end(), more.begin(), more.end());
    return base;
}

}  // namespace vrag::testing
