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
#include "vrag/generation.hpp"

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

HttpResponse answer(const std::string& text) { return {200, json{{"answer", text}}.dump()}; }

// Generator stub that answers with the last text part of the request.
void install_echo(StubTransport& stub) {
    stub.on_post("/v1/chat", [](const std::string& body) {
        const auto parts = json::parse(body)["messages"][0]["content"];
        std::string last;
        for (const auto& p : parts) {
            if (p["type"] == "text") last = p["text"];
        }
        return answer(last);
    });
}

std::string fake_jpeg(const std::string& video_id, std::size_t index) { return "JPEG:" + video_id + ":" + std::to_string(index); }

CorpusManifest manifest_with(std::vector<VideoRecord> videos) { return {"c", "e", 8, "emb", std::move(videos)}; }

VideoRecord video(const std::string& id, std::uint32_t frames, std::optional<std::string> subtitle = std::nullopt) {
    return {id, "/media/" + id + ".mp4", static_cast<double>(frames), frames, std::move(subtitle), std::nullopt, std::string("Food")};
}

RetrievalResult ranked(std::initializer_list<std::string> ids) {
    RetrievalResult r;
    r.query_id = "q";
    double s = 1.0;
    for (const auto& id : ids) r.ranked.push_back({id, s -= 0.1});
    r.k = r.ranked.size();
    return r;
}

TEST(Base64, KnownVectors) {
    EXPECT_EQ(base64_encode(""), "");
    EXPECT_EQ(base64_encode("f"), "Zg==");
    EXPECT_EQ(base64_encode("fo"), "Zm8=");
    EXPECT_EQ(base64_encode("foo"), "Zm9v");
    EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
    EXPECT_EQ(base64_encode(std::string("\xff\x00\x10", 3)), "/wAQ");
}

TEST(TruncateUtf8, KeepsWholeCodePoints) {
    bool cut = false;
    EXPECT_EQ(truncate_utf8("short", 10, cut), "short");
    EXPECT_FALSE(cut);
    EXPECT_EQ(truncate_utf8("héllo", 2, cut), "h");  // é is two bytes
    EXPECT_TRUE(cut);
    EXPECT_EQ(truncate_utf8("héllo", 3, cut), "hé");
}

TEST(AssembleContext, ShortVideoKeepsEveryFrame) {
    const auto m = manifest_with({video("v1", 10)});
    AssembleInputs in;
    in.manifest = &m;
    const auto ctx = assemble_context("q", "How?", ranked({"v1"}), AssembleConfig{}, in);
    ASSERT_EQ(ctx.segments.size(), 1u);
    ASSERT_EQ(ctx.segments[0].frames.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(ctx.segments[0].frames[i].index, i);
    EXPECT_FALSE(ctx.segments[0].transcript_text);
}

TEST(AssembleContext, RankOrderAndQuestionLast) {
    const auto m = manifest_with({video("a", 100, "text a"), video("b", 5, "text b")});
    AssembleInputs in;
    in.manifest = &m;
    AssembleConfig cfg;
    cfg.mode = ContextMode::VideoPlusText;
    const auto ctx = assemble_context("q", "What now?", ranked({"b", "a"}), cfg, in);
    ASSERT_EQ(ctx.segments.size(), 2u);
    EXPECT_EQ(ctx.segments[0].video_id, "b");
    EXPECT_EQ(ctx.segments[1].video_id, "a");
    EXPECT_EQ(ctx.segments[1].frames.size(), 32u);
    EXPECT_EQ(ctx.segments[1].frames[1].index, 3u);  // floor(100 / 32)
    const auto msgs = build_generation_messages(ctx, fake_jpeg);
    ASSERT_EQ(msgs.size(), 1u);
    const auto& parts = msgs[0].content;
    ASSERT_EQ(parts.size(), 5u + 1 + 32 + 1 + 1);
    EXPECT_EQ(parts[0].kind, ContentPart::Kind::Image);
    EXPECT_EQ(parts[0].data, base64_encode("JPEG:b:0"));
    EXPECT_EQ(parts[5].text, "text b");
    EXPECT_EQ(parts[6].data, base64_encode("JPEG:a:0"));
    EXPECT_EQ(parts[38].text, "text a");
    EXPECT_EQ(parts.back().text, "What now?");
    int questions = 0;
    for (const auto& p : parts) questions += p.kind == ContentPart::Kind::Text && p.text == "What now?" ? 1 : 0;
    EXPECT_EQ(questions, 1);
}

TEST(AssembleContext, Errors) {
    const auto m = manifest_with({video("a", 10)});
    AssembleInputs in;
    in.manifest = &m;
    EXPECT_EQ(kind_of([&] { assemble_context("q", "?", RetrievalResult{}, AssembleConfig{}, in); }), ErrorKind::EmptyRetrieval);
    AssembleConfig cfg;
    cfg.mode = ContextMode::VideoPlusText;
    EXPECT_EQ(kind_of([&] { assemble_context("q", "?", ranked({"a"}), cfg, in); }), ErrorKind::MissingTranscript);
    EXPECT_EQ(kind_of([&] { assemble_context("q", "?", ranked({"zzz"}), AssembleConfig{}, in); }), ErrorKind::SchemaViolation);
}

TEST(AssembleContext, FillsTranscriptsThroughAsr) {
    StubTransport stub;
    stub.on_post("/v1/transcribe", [](const std::string&) { return HttpResponse{200, R"({"text":"hello world","segments":[]})"}; });
    EncoderClient asr(stub);
    const auto m = manifest_with({video("a", 10), video("b", 10, "subtitled")});
    AssembleInputs in;
    in.manifest = &m;
    in.asr = &asr;
    AssembleConfig cfg;
    cfg.mode = ContextMode::VideoPlusText;
    cfg.max_transcript_chars = 5;
    const auto ctx = assemble_context("q", "?", ranked({"a", "b"}), cfg, in);
    EXPECT_EQ(*ctx.segments[0].transcript_text, "hello");
    EXPECT_TRUE(ctx.segments[0].transcript_truncated);
    EXPECT_EQ(*ctx.segments[1].transcript_text, "subti");
    EXPECT_EQ(stub.calls(), 1u);
}

TEST(AssembleContext, DeterministicAndSeedIndependentWithoutSelector) {
    const auto m = manifest_with({video("a", 90), video("b", 300)});
    AssembleInputs in;
    in.manifest = &m;
    AssembleConfig c1, c2;
    c2.seed = 999;
    EXPECT_EQ(assemble_context("q", "?", ranked({"a", "b"}), c1, in), assemble_context("q", "?", ranked({"a", "b"}), c2, in));
}

TEST(AssembleContext, TrainedGenerationSelectorFindsPlantedFrames) {
    const std::size_t dim = 16;
    Vector query(dim, 0.0);
    query[0] = 1.0;
    const auto stride = uniform_stride(100, 32);
    const std::set<std::size_t> on_stride(stride.begin(), stride.end());
    Rng rng(31);
    // 20 query-aligned frames, all off the uniform stride
    auto make_video = [&](const std::string& id) {
        std::set<std::size_t> planted;
        while (planted.size() < 20) {
            const std::size_t i = rng.index(100);
            if (!on_stride.count(i)) planted.insert(i);
        }
        std::vector<Vector> rows;
        for (std::size_t i = 0; i < 100; ++i) {
            Vector r = testing::random_vector(rng, dim);
            r[0] = planted.count(i) ? 4.0 + 0.5 * rng.normal() : 0.0;
            rows.push_back(r);
        }
        auto m = testing::matrix_from_rows(id, rows);
        std::vector<float> ts;
        for (int i = 0; i < 100; ++i) ts.push_back(static_cast<float>(i));
        m.timestamps = ts;
        return std::make_pair(m, planted);
    };

    std::vector<SelectorPair> pairs;
    for (int p = 0; p < 12; ++p) {
        const auto [m, planted] = make_video("train" + std::to_string(p));
        pairs.push_back({"q" + std::to_string(p), query, reduce_candidates(m, 64, static_cast<std::uint64_t>(p))});
    }
    // injected signal in place of generator ROUGE-L
    const auto data = collect_training_data(pairs, 32, 40, 5, retrieval_similarity_signal());
    TrainConfig tc;
    tc.epochs = 80;
    tc.learning_rate = 3e-3;
    tc.batch_size = 8;
    const auto selector = train_selector(make_generation_selector(32, 64, dim, 32, 32, 8, 3), pairs, data.examples, tc).model;

    const auto [test_matrix, planted] = make_video("test");
    const auto m = manifest_with({video("test", 100)});
    AssembleInputs in;
    in.manifest = &m;
    in.selector = &selector;
    in.query_embedding = query;
    in.embeddings = [&](const std::string&) { return test_matrix; };
    const auto adaptive = choose_generation_frames(m.videos[0], AssembleConfig{}, in);
    AssembleInputs plain;
    plain.manifest = &m;
    const auto uniform = choose_generation_frames(m.videos[0], AssembleConfig{}, plain);
    ASSERT_EQ(adaptive.size(), 32u);
    ASSERT_EQ(uniform.size(), 32u);
    auto count = [&](const std::vector<FrameRef>& refs) {
        std::size_t n = 0;
        for (const auto& r : refs) n += planted.count(r.index);
        return n;
    };
    EXPECT_GT(count(adaptive), count(uniform));
    EXPECT_TRUE(std::is_sorted(adaptive.begin(), adaptive.end(), [](const FrameRef& a, const FrameRef& b) { return a.timestamp < b.timestamp; }));

    in.query_embedding.reset();
    EXPECT_EQ(kind_of([&] { choose_generation_frames(m.videos[0], AssembleConfig{}, in); }), ErrorKind::MissingQuery);
}

TEST(GenerateAnswer, EchoStub) {
    StubTransport stub;
    install_echo(stub);
    GeneratorClient client(stub, "stub-model");
    const auto m = manifest_with({video("a", 3)});
    AssembleInputs in;
    in.manifest = &m;
    const auto ctx = assemble_context("q7", "Which tool?", ranked({"a"}), AssembleConfig{}, in);
    const auto r = generate_answer(ctx, client, fake_jpeg);
    EXPECT_EQ(r.answer_text, "Which tool?");
    EXPECT_EQ(r.query_id, "q7");
    EXPECT_EQ(r.generator_id, "stub-model");
    EXPECT_EQ(r.context_digest.size(), 16u);
    EXPECT_EQ(generate_answer(ctx, client, fake_jpeg).context_digest, r.context_digest);
    const auto req = json::parse(stub.interactions()[0].request);
    EXPECT_EQ(req["model"], "stub-model");
    EXPECT_EQ(req["messages"][0]["role"], "user");
    EXPECT_EQ(req["messages"][0]["content"][0]["type"], "image");
    EXPECT_EQ(req["messages"][0]["content"][0]["mime"], "image/jpeg");
    const auto j = to_json(r);
    EXPECT_EQ(j.dump(), R"({"query_id":"q7","question":"Which tool?","answer":"Which tool?","context_digest":")" + r.context_digest +
                            R"(","generator_id":"stub-model"})");
    EXPECT_EQ(generation_result_from_json(json::parse(j.dump())).answer_text, "Which tool?");
}

TEST(GenerateAnswer, DigestChangesWithContext) {
    StubTransport stub;
    install_echo(stub);
    GeneratorClient client(stub, "m");
    const auto m = manifest_with({video("a", 3), video("b", 3)});
    AssembleInputs in;
    in.manifest = &m;
    const auto r1 = generate_answer(assemble_context("q", "?", ranked({"a"}), AssembleConfig{}, in), client, fake_jpeg);
    const auto r2 = generate_answer(assemble_context("q", "?", ranked({"b"}), AssembleConfig{}, in), client, fake_jpeg);
    EXPECT_NE(r1.context_digest, r2.context_digest);
}

TEST(GenerateAnswer, Failures) {
    const auto m = manifest_with({video("a", 3)});
    AssembleInputs in;
    in.manifest = &m;
    const auto ctx = assemble_context("q", "?", ranked({"a"}), AssembleConfig{}, in);
    StubTransport empty;
    empty.on_post("/v1/chat", [](const std::string&) { return answer(""); });
    GeneratorClient c1(empty, "m");
    EXPECT_EQ(kind_of([&] { generate_answer(ctx, c1, fake_jpeg); }), ErrorKind::EmptyAnswer);
    StubTransport down;
    down.on_post("/v1/chat", [](const std::string&) { return HttpResponse{503, "overloaded"}; });
    GeneratorClient c2(down, "m");
    EXPECT_EQ(kind_of([&] { generate_answer(ctx, c2, fake_jpeg); }), ErrorKind::GeneratorError);
    StubTransport garbled;
    garbled.on_post("/v1/chat", [](const std::string&) { return HttpResponse{200, "{\"text\":1}"}; });
    GeneratorClient c3(garbled, "m");
    EXPECT_EQ(kind_of([&] { generate_answer(ctx, c3, fake_jpeg); }), ErrorKind::GeneratorError);
}

TEST(GenerateAnswer, RecordThenReplayIsByteIdentical) {
    testing::TempDir dir;
    const auto m = manifest_with({video("a", 3)});
    AssembleInputs in;
    in.manifest = &m;
    const auto ctx = assemble_context("q", "Why stir?", ranked({"a"}), AssembleConfig{}, in);
    StubTransport live;
    live.on_post("/v1/chat", [](const std::string&) { return answer("To keep it from sticking. ✓"); });
    GenerationResult recorded;
    {
        RecordingTransport rec(live);
        GeneratorClient client(rec, "m");
        recorded = generate_answer(ctx, client, fake_jpeg);
        rec.save(dir / "chat.json");
    }
    auto replay = ReplayTransport::from_file(dir / "chat.json");
    GeneratorClient client(replay, "m");
    const auto replayed = generate_answer(ctx, client, fake_jpeg);
    EXPECT_EQ(replayed.answer_text, recorded.answer_text);
    EXPECT_EQ(to_json(replayed).dump(), to_json(recorded).dump());
}

TEST(DirectoryFrameSource, ReadsAndReportsMissing) {
    testing::TempDir dir;
    fs::create_directories(dir / "v1");
    binary::write_file(dir / "v1" / "3.jpg", "bytes");
    const auto src = directory_frame_source(dir.path());
    EXPECT_EQ(src("v1", 3), "bytes");
    EXPECT_EQ(kind_of([&] { src("v1", 4); }), ErrorKind::MissingFrame);
}

TEST(EnsureTranscript, ShortCircuitsAndCallsOnce) {
    StubTransport stub;
    stub.on_post("/v1/transcribe", [](const std::string&) { return HttpResponse{200, R"({"text":"hello world","segments":[]})"}; });
    EncoderClient asr(stub);
    const auto with_sub = video("a", 5, "already here");
    EXPECT_EQ(ensure_transcript(with_sub, asr), with_sub);
    EXPECT_EQ(stub.calls(), 0u);
    const auto first = ensure_transcript(video("b", 5), asr);
    EXPECT_EQ(*first.aux_transcript, "hello world");
    EXPECT_EQ(stub.calls(), 1u);
    const auto second = ensure_transcript(first, asr);
    EXPECT_EQ(second, first);
    EXPECT_EQ(stub.calls(), 1u);
    StubTransport failing;
    failing.on_post("/v1/transcribe", [](const std::string&) { return HttpResponse{500, "{}"}; });
    EncoderClient bad(failing);
    EXPECT_EQ(kind_of([&] { ensure_transcript(video("c", 5), bad); }), ErrorKind::AsrError);
}

const char* kThreePairs = R"([{"question":"Q1?","answer":"A1"},{"question":"Q2?","answer":"A2"},{"question":"Q3?","answer":"A3"}])";

TEST(SynthesizeQa, ValidReply) {
    StubTransport stub;
    stub.on_post("/v1/chat", [](const std::string&) { return answer(kThreePairs); });
    GeneratorClient client(stub, "m");
    const std::vector<ContentPart> parts{ContentPart::make_image("AAAA", "image/jpeg")};
    const auto qa = synthesize_qa(video("v", 5, "sub"), parts, client);
    ASSERT_EQ(qa.size(), 3u);
    EXPECT_EQ(qa[2].question, "Q3?");
    EXPECT_EQ(qa[0].source_video_id, "v");
    EXPECT_EQ(qa[0].origin, "synthetic");
    EXPECT_EQ(*qa[0].category, "Food");
    const auto req = json::parse(stub.interactions()[0].request);
    EXPECT_EQ(req["messages"][0]["content"][0]["text"], std::string(prompts::synthetic_qa()));
    EXPECT_EQ(req["messages"][0]["content"][1]["type"], "image");
    EXPECT_EQ(req["messages"][0]["content"][2]["text"], "sub");
}

TEST(SynthesizeQa, ProseAroundTheArray) {
    const std::string reply = std::string("Sure! Here are [three] pairs:\n```json\n") + kThreePairs + "\n```\nLet me know [if] you need more.";
    const auto qa = parse_qa_reply(reply, video("v", 5));
    EXPECT_EQ(qa.size(), 3u);
    EXPECT_EQ(qa[1].answer, "A2");
    const auto tricky = parse_qa_reply(
        R"(x [{"question":"What does ] mean?","answer":"a \"bracket\" ["},{"question":"b","answer":"c"},{"question":"d","answer":"e"}] y)",
        video("v", 5));
    EXPECT_EQ(tricky[0].question, "What does ] mean?");
}

TEST(SynthesizeQa, WrongCountAndMalformed) {
    EXPECT_EQ(kind_of([&] { parse_qa_reply(R"([{"question":"a","answer":"b"},{"question":"c","answer":"d"}])", video("v", 5)); }),
              ErrorKind::WrongCount);
    EXPECT_EQ(kind_of([&] { parse_qa_reply("no json here", video("v", 5)); }), ErrorKind::MalformedJson);
    EXPECT_EQ(kind_of([&] { parse_qa_reply(R"([{"q":"a"},{"q":"b"},{"q":"c"}])", video("v", 5)); }), ErrorKind::MalformedJson);
}

TEST(SynthesizeQa, RetriesOnceOnMalformed) {
    StubTransport stub;
    int calls = 0;
    stub.on_post("/v1/chat", [&](const std::string&) { return answer(++calls == 1 ? "oops" : kThreePairs); });
    GeneratorClient client(stub, "m");
    EXPECT_EQ(synthesize_qa(video("v", 5), {}, client).size(), 3u);
    EXPECT_EQ(calls, 2);

    StubTransport always_bad;
    always_bad.on_post("/v1/chat", [](const std::string&) { return answer("still prose"); });
    GeneratorClient bad(always_bad, "m");
    EXPECT_EQ(kind_of([&] { synthesize_qa(video("v", 5), {}, bad); }), ErrorKind::MalformedJson);
    EXPECT_EQ(always_bad.calls(), 2u);

    StubTransport two;
    two.on_post("/v1/chat", [](const std::string&) { return answer(R"([{"question":"a","answer":"b"}])"); });
    GeneratorClient short_client(two, "m");
    EXPECT_EQ(kind_of([&] { synthesize_qa(video("v", 5), {}, short_client); }), ErrorKind::WrongCount);
    EXPECT_EQ(two.calls(), 1u);
}

TEST(Geval, ParsesScores) {
    EXPECT_EQ(parse_geval_score("4"), 4);
    EXPECT_EQ(parse_geval_score(" 3\n"), 3);
    EXPECT_EQ(parse_geval_score("Rating: 5/5"), 5);
    EXPECT_EQ(kind_of([&] { parse_geval_score("Score: 7"); }), ErrorKind::ScoreOutOfRange);
    EXPECT_EQ(kind_of([&] { parse_geval_score("0"); }), ErrorKind::ScoreOutOfRange);
    EXPECT_EQ(kind_of([&] { parse_geval_score("99999999999"); }), ErrorKind::ScoreOutOfRange);
    EXPECT_EQ(kind_of([&] { parse_geval_score("excellent"); }), ErrorKind::UnparseableScore);
}

TEST(Geval, PromptSubstitution) {
    const auto p = build_geval_prompt("Q {{Generated_Response}}", "GT", "GEN");
    EXPECT_NE(p.find("Question: Q {{Generated_Response}}\n"), std::string::npos);
    EXPECT_NE(p.find("Ground Truth Answer: GT\n"), std::string::npos);
    EXPECT_NE(p.find("Generated Response: GEN\n"), std::string::npos);
    // the placeholder text inside the question is not expanded again
    EXPECT_EQ(p.find("{{Generated_Response}}"), p.find("Question: Q ") + 12);
    EXPECT_EQ(p.find("{{Question}}"), std::string::npos);
    EXPECT_EQ(p.find("{{Ground_Truth_Answer}}"), std::string::npos);
    EXPECT_EQ(kind_of([&] { build_geval_prompt("a", "b", "c", "no placeholders"); }), ErrorKind::InvalidConfig);
}

TEST(Geval, JudgeThroughStub) {
    StubTransport stub;
    stub.on_post("/v1/chat", [](const std::string&) { return answer("4"); });
    GeneratorClient client(stub, "judge");
    EXPECT_EQ(geval_judge("q", "gt", "gen", client), 4);
    const auto req = json::parse(stub.interactions()[0].request);
    EXPECT_EQ(req["messages"][0]["content"][0]["text"], build_geval_prompt("q", "gt", "gen"));
}

TEST(Prompts, EmbeddedCopiesMatchFiles) {
    const fs::path dir = fs::path(VRAG_SOURCE_DIR) / "prompts";
    EXPECT_EQ(binary::read_file(dir / "synthetic_qa.txt"), prompts::synthetic_qa());
    EXPECT_EQ(binary::read_file(dir / "geval.txt"), prompts::geval());
}

TEST(ContextMode, Parse) {
    EXPECT_EQ(parse_context_mode("video_only"), ContextMode::VideoOnly);
    EXPECT_EQ(parse_context_mode("video_plus_text"), ContextMode::VideoPlusText);
    EXPECT_EQ(kind_of([&] { parse_context_mode("text_only"); }), ErrorKind::InvalidConfig);
}

}  // namespace
}  // namespace vrag
