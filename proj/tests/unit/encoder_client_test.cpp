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

#include "test_support.hpp"
#include "vrag/encoder_client.hpp"

namespace vrag {
namespace {

using nlohmann::json;

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::InvalidConfig;
}

Vector unit_for(const std::string& text, std::size_t dim) {
    Rng rng(fnv1a64(text));
    return testing::random_unit(rng, dim);
}

// Deterministic fake encoder: text vectors seeded by the text, frames seeded
// by the path, one frame per second of the duration encoded in the path.
void install_fake_encoder(StubTransport& stub, std::size_t dim) {
    stub.on_get("/healthz", [dim](const std::string&) {
        return HttpResponse{200, json{{"status", "ok"}, {"encoder_id", "fake"}, {"dim", dim}}.dump()};
    });
    stub.on_post("/v1/embed/text", [dim](const std::string& body) {
        const auto texts = json::parse(body).at("texts").get<std::vector<std::string>>();
        if (texts.empty()) return HttpResponse{400, R"({"error":"empty"})"};
        json rows = json::array();
        for (const auto& t : texts) rows.push_back(unit_for(t, dim));
        return HttpResponse{200, json{{"dim", dim}, {"count", texts.size()}, {"embeddings", rows}}.dump()};
    });
    stub.on_post("/v1/embed/frames", [dim](const std::string& body) {
        const auto path = json::parse(body).at("video_path").get<std::string>();
        if (path.find("missing") != std::string::npos) return HttpResponse{404, R"({"error":"not found"})"};
        json rows = json::array(), ts = json::array();
        for (int i = 0; i < 10; ++i) {
            rows.push_back(unit_for(path + "#" + std::to_string(i), dim));
            ts.push_back(i);
        }
        return HttpResponse{200, json{{"dim", dim}, {"count", 10}, {"embeddings", rows}, {"timestamps", ts}}.dump()};
    });
    stub.on_post("/v1/transcribe", [](const std::string& body) {
        const auto path = json::parse(body).at("video_path").get<std::string>();
        if (path.find("silent") != std::string::npos) return HttpResponse{200, R"({"text":"","segments":[]})"};
        return HttpResponse{200, R"({"text":"hello there","segments":[{"start_s":0.0,"end_s":1.5,"text":"hello"},{"start_s":1.5,"end_s":2.0,"text":"there"}]})"};
    });
}

TEST(EncoderClient, HealthAndTexts) {
    StubTransport stub;
    install_fake_encoder(stub, 8);
    EncoderClient client(stub);
    const auto h = client.health();
    EXPECT_EQ(h.status, "ok");
    EXPECT_EQ(h.dim, 8u);
    const auto v = client.embed_texts({"a", "b", "a"});
    ASSERT_EQ(v.size(), 3u);
    EXPECT_NEAR(norm(v[0]), 1.0, 1e-6);
    EXPECT_EQ(v[0], v[2]);
    EXPECT_NE(v[0], v[1]);
}

TEST(EncoderClient, BatchesOfSixtyFour) {
    StubTransport stub;
    install_fake_encoder(stub, 4);
    EncoderClient client(stub);
    std::vector<std::string> texts;
    for (int i = 0; i < 130; ++i) texts.push_back("t" + std::to_string(i));
    const auto v = client.embed_texts(texts);
    EXPECT_EQ(v.size(), 130u);
    EXPECT_EQ(stub.calls(), 3u);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto expected = unit_for(texts[i], 4);
        for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(v[i][d], expected[d], 1e-6);
    }
    EXPECT_TRUE(client.embed_texts({}).empty());
}

TEST(EncoderClient, Frames) {
    StubTransport stub;
    install_fake_encoder(stub, 6);
    EncoderClient client(stub);
    const auto m = client.embed_frames("clip", "/media/clip.mp4");
    EXPECT_EQ(m.video_id, "clip");
    EXPECT_EQ(m.count, 10u);
    EXPECT_EQ(m.dim, 6u);
    ASSERT_TRUE(m.timestamps);
    EXPECT_EQ(m.timestamps->back(), 9.0f);
    EXPECT_EQ(client.embed_frames("clip", "/media/clip.mp4"), m);
    EXPECT_EQ(kind_of([&] { client.embed_frames("x", "/media/missing.mp4"); }), ErrorKind::ServiceError);
}

TEST(EncoderClient, Transcribe) {
    StubTransport stub;
    install_fake_encoder(stub, 6);
    EncoderClient client(stub);
    const auto t = client.transcribe("/media/talk.mp4");
    EXPECT_EQ(t.text, "hello there");
    ASSERT_EQ(t.segments.size(), 2u);
    EXPECT_EQ(t.segments[1].start_s, 1.5);
    const auto silent = client.transcribe("/media/silent.mp4");
    EXPECT_EQ(silent.text, "");
    EXPECT_TRUE(silent.segments.empty());
}

struct BadResponse {
    std::string name;
    std::string body;
};

TEST(EncoderClient, EmbeddingContractViolations) {
    const std::vector<BadResponse> cases{
        {"not json", "<html>"},
        {"missing dim", R"({"count":1,"embeddings":[[1,0]]})"},
        {"count mismatch", R"({"dim":2,"count":2,"embeddings":[[1,0]]})"},
        {"row width", R"({"dim":2,"count":1,"embeddings":[[1,0,0]]})"},
        {"not unit", R"({"dim":2,"count":1,"embeddings":[[0.5,0.5]]})"},
        {"non-finite", R"({"dim":2,"count":1,"embeddings":[[1e400,0]]})"},
        {"zero dim", R"({"dim":0,"count":1,"embeddings":[[]]})"},
        {"timestamps length", R"({"dim":2,"count":1,"embeddings":[[1,0]],"timestamps":[0,1]})"},
        {"timestamps order", R"({"dim":2,"count":2,"embeddings":[[1,0],[0,1]],"timestamps":[1,1]})"},
        {"wrong type", R"({"dim":"two","count":1,"embeddings":[[1,0]]})"},
    };
    for (const auto& c : cases) {
        StubTransport stub;
        stub.on_post("/v1/embed/frames", [&](const std::string&) { return HttpResponse{200, c.body}; });
        EncoderClient client(stub);
        EXPECT_EQ(kind_of([&] { client.embed_frames("v", "/v.mp4"); }), ErrorKind::ContractViolation) << c.name;
    }
}

TEST(EncoderClient, TextCountMismatch) {
    StubTransport stub;
    stub.on_post("/v1/embed/text", [](const std::string&) { return HttpResponse{200, R"({"dim":2,"count":1,"embeddings":[[1,0]]})"}; });
    EncoderClient client(stub);
    EXPECT_EQ(kind_of([&] { client.embed_texts({"a", "b"}); }), ErrorKind::ContractViolation);
}

TEST(EncoderClient, TranscriptContractViolations) {
    const std::vector<BadResponse> cases{
        {"missing segments", R"({"text":"x"})"},
        {"backwards", R"({"text":"x","segments":[{"start_s":2,"end_s":1,"text":"x"}]})"},
        {"overlap", R"({"text":"x","segments":[{"start_s":0,"end_s":2,"text":"a"},{"start_s":1,"end_s":3,"text":"b"}]})"},
    };
    for (const auto& c : cases) {
        StubTransport stub;
        stub.on_post("/v1/transcribe", [&](const std::string&) { return HttpResponse{200, c.body}; });
        EncoderClient client(stub);
        EXPECT_EQ(kind_of([&] { client.transcribe("/v.mp4"); }), ErrorKind::ContractViolation) << c.name;
    }
    StubTransport stub;
    stub.on_post("/v1/transcribe", [](const std::string&) { return HttpResponse{422, R"({"error":"no audio"})"}; });
    EncoderClient client(stub);
    EXPECT_EQ(kind_of([&] { client.transcribe("/v.mp4"); }), ErrorKind::AsrError);
}

TEST(EncoderClient, ServiceErrors) {
    StubTransport stub;
    stub.on_get("/healthz", [](const std::string&) { return HttpResponse{500, "{}"}; });
    stub.on_post("/v1/embed/text", [](const std::string&) { return HttpResponse{413, R"({"error":"too big"})"}; });
    EncoderClient client(stub);
    EXPECT_EQ(kind_of([&] { client.health(); }), ErrorKind::ServiceError);
    EXPECT_EQ(kind_of([&] { client.embed_texts({"x"}); }), ErrorKind::ServiceError);
    EXPECT_EQ(exit_code_for(ErrorKind::ServiceError), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::ContractViolation), 3);
}

TEST(EncoderClient, RequestBodies) {
    StubTransport stub;
    install_fake_encoder(stub, 4);
    EncoderClient client(stub);
    client.embed_texts({"x"});
    client.embed_frames("v", "/m/v.mp4", 2.0);
    client.transcribe("/m/v.mp4");
    const auto log = stub.interactions();
    EXPECT_EQ(json::parse(log[0].request), json::parse(R"({"texts":["x"]})"));
    EXPECT_EQ(json::parse(log[1].request), json::parse(R"({"video_path":"/m/v.mp4","fps":2.0})"));
    EXPECT_EQ(json::parse(log[2].request), json::parse(R"({"video_path":"/m/v.mp4"})"));
}

}  // namespace
}  // namespace vrag
