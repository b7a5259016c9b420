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

#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "vrag/binary_io.hpp"
#include "vrag/corpus_store.hpp"
#include "vrag/error.hpp"
#include "vrag/generation.hpp"
#include "vrag/neural_core.hpp"

namespace vrag {

struct RetrievalSettings {
    std::size_t k = 1;
    std::size_t frames_per_video = 4;
    std::size_t candidates = 8;
    std::size_t n_subsets = 70;
};

struct GenerationSettings {
    std::size_t frames_per_video = 32;
    std::size_t candidates = 64;
    std::size_t n_subsets = 40;
    ContextMode mode = ContextMode::VideoOnly;
    std::size_t max_transcript_chars = 8000;
};

struct SelectorPaths {
    std::string retrieval;
    std::string generation;
};

struct Endpoints {
    std::string encoder_url;
    std::string generator_url;
    std::string generator_model = "default";
    double timeout_s = 60.0;
};

struct TrainingSettings {
    std::size_t epochs = 10;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::size_t n_subsets = 10;  // subsets labeled per pair in retrieval mode; generation uses generation.n_subsets
    std::size_t hidden1 = 512;
    std::size_t hidden2 = 256;
    std::size_t projection = 256;
};

struct EngineConfig {
    std::string manifest_path;
    std::string frame_dir;
    double alpha = 0.6;
    RetrievalSettings retrieval;
    GenerationSettings generation;
    SelectorPaths selector;
    Endpoints endpoints;
    TrainingSettings training;
    std::uint64_t seed = 0;
    std::size_t max_inflight = 4;
};

inline void validate(const EngineConfig& c) {
    auto bad = [](const std::string& field, const std::string& why) { fail(ErrorKind::InvalidConfig, field + ": " + why); };
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) bad("alpha", "must lie in [0, 1]");
    if (c.retrieval.k == 0) bad("retrieval.k", "must be positive");
    if (c.retrieval.frames_per_video == 0) bad("retrieval.frames_per_video", "must be positive");
    if (c.retrieval.frames_per_video > c.retrieval.candidates) bad("retrieval.frames_per_video", "must not exceed retrieval.candidates");
    if (c.retrieval.n_subsets == 0) bad("retrieval.n_subsets", "must be positive");
    if (c.generation.frames_per_video == 0) bad("generation.frames_per_video", "must be positive");
    if (c.generation.frames_per_video > c.generation.candidates) bad("generation.frames_per_video", "must not exceed generation.candidates");
    if (c.generation.n_subsets == 0) bad("generation.n_subsets", "must be positive");
    if (c.generation.max_transcript_chars == 0) bad("generation.max_transcript_chars", "must be positive");
    if (c.max_inflight == 0) bad("max_inflight", "must be positive");
    if (c.training.epochs == 0) bad("training.epochs", "must be positive");
    if (c.training.batch_size == 0) bad("training.batch_size", "must be positive");
    if (!(c.training.learning_rate > 0.0) || !std::isfinite(c.training.learning_rate)) bad("training.learning_rate", "must be positive");
    if (c.training.n_subsets < 6) bad("training.n_subsets", "must be at least 6");
    if (c.training.hidden1 == 0 || c.training.hidden2 == 0 || c.training.projection == 0) bad("training.hidden", "layer sizes must be positive");
    if (!(c.endpoints.timeout_s > 0.0)) bad("endpoints.timeout_s", "must be positive");
}

namespace detail {

class ConfigReader {
  public:
    ConfigReader(const nlohmann::json& obj, std::string prefix, std::set<std::string> allowed) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) fail(ErrorKind::InvalidConfig, name("") + ": expected an object");
        for (const auto& [key, value] : obj_.items()) {
            if (!allowed.count(key)) fail(ErrorKind::InvalidConfig, name(key) + ": unknown field");
        }
    }

    [[nodiscard]] std::string name(const std::string& key) const {
        if (prefix_.empty()) return key.empty() ? "config" : key;
        return key.empty() ? prefix_ : prefix_ + "." + key;
    }

    [[nodiscard]] const nlohmann::json* get(const std::string& key) const {
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void read(const std::string& key, std::string& out) const {
        if (const auto* v = get(key)) {
            if (!v->is_string()) fail(ErrorKind::InvalidConfig, name(key) + ": expected a string");
            out = v->get<std::string>();
        }
    }

    void read(const std::string& key, double& out) const {
        if (const auto* v = get(key)) {
            if (!v->is_number()) fail(ErrorKind::InvalidConfig, name(key) + ": expected a number");
            out = v->get<double>();
        }
    }

    template <typename T>
        requires std::is_unsigned_v<T>
    void read(const std::string& key, T& out) const {
        if (const auto* v = get(key)) {
            if (!v->is_number_unsigned()) fail(ErrorKind::InvalidConfig, name(key) + ": expected a non-negative integer");
            out = v->get<T>();
        }
    }

  private:
    const nlohmann::json& obj_;
    std::string prefix_;
};

}  // namespace detail

inline OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "sgd") return OptimizerKind::Sgd;
    fail(ErrorKind::InvalidConfig, "training.optimizer (expected adam|sgd, got " + std::string(s) + ")");
}

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

/// Missing keys keep their defaults; unknown keys and wrong types are
/// rejected with the dotted field name.
inline EngineConfig config_from_json(const nlohmann::json& j) {
    using detail::ConfigReader;
    EngineConfig c;
    const ConfigReader top(j, "", {"manifest_path", "frame_dir", "alpha", "retrieval", "generation", "selector", "endpoints", "training", "seed",
                                   "max_inflight"});
    top.read("manifest_path", c.manifest_path);
    top.read("frame_dir", c.frame_dir);
    top.read("alpha", c.alpha);
    top.read("seed", c.seed);
    top.read("max_inflight", c.max_inflight);
    if (const auto* r = top.get("retrieval")) {
        const ConfigReader rd(*r, "retrieval", {"k", "frames_per_video", "candidates", "n_subsets"});
        rd.read("k", c.retrieval.k);
        rd.read("frames_per_video", c.retrieval.frames_per_video);
        rd.read("candidates", c.retrieval.candidates);
        rd.read("n_subsets", c.retrieval.n_subsets);
    }
    if (const auto* g = top.get("generation")) {
        const ConfigReader rd(*g, "generation", {"frames_per_video", "candidates", "n_subsets", "mode", "max_transcript_chars"});
        rd.read("frames_per_video", c.generation.frames_per_video);
        rd.read("candidates", c.generation.candidates);
        rd.read("n_subsets", c.generation.n_subsets);
        rd.read("max_transcript_chars", c.generation.max_transcript_chars);
        std::string mode(to_string(c.generation.mode));
        rd.read("mode", mode);
        c.generation.mode = parse_context_mode(mode);
    }
    if (const auto* s = top.get("selector")) {
        const ConfigReader rd(*s, "selector", {"retrieval", "generation"});
        rd.read("retrieval", c.selector.retrieval);
        rd.read("generation", c.selector.generation);
    }
    if (const auto* e = top.get("endpoints")) {
        const ConfigReader rd(*e, "endpoints", {"encoder_url", "generator_url", "generator_model", "timeout_s"});
        rd.read("encoder_url", c.endpoints.encoder_url);
        rd.read("generator_url", c.endpoints.generator_url);
        rd.read("generator_model", c.endpoints.generator_model);
        rd.read("timeout_s", c.endpoints.timeout_s);
    }
    if (const auto* t = top.get("training")) {
        const ConfigReader rd(*t, "training", {"epochs", "learning_rate", "batch_size", "optimizer", "n_subsets", "hidden1", "hidden2", "projection"});
        rd.read("epochs", c.training.epochs);
        rd.read("learning_rate", c.training.learning_rate);
        rd.read("batch_size", c.training.batch_size);
        rd.read("n_subsets", c.training.n_subsets);
        rd.read("hidden1", c.training.hidden1);
        rd.read("hidden2", c.training.hidden2);
        rd.read("projection", c.training.projection);
        std::string opt(to_string(c.training.optimizer));
        rd.read("optimizer", opt);
        c.training.optimizer = parse_optimizer(opt);
    }
    return c;
}

inline nlohmann::ordered_json config_to_json(const EngineConfig& c) {
    nlohmann::ordered_json j;
    j["manifest_path"] = c.manifest_path;
    j["frame_dir"] = c.frame_dir;
    j["alpha"] = c.alpha;
    j["retrieval"] = {{"k", c.retrieval.k},
                      {"frames_per_video", c.retrieval.frames_per_video},
                      {"candidates", c.retrieval.candidates},
                      {"n_subsets", c.retrieval.n_subsets}};
    j["generation"] = {{"frames_per_video", c.generation.frames_per_video},
                       {"candidates", c.generation.candidates},
                       {"n_subsets", c.generation.n_subsets},
                       {"mode", to_string(c.generation.mode)},
                       {"max_transcript_chars", c.generation.max_transcript_chars}};
    j["selector"] = {{"retrieval", c.selector.retrieval}, {"generation", c.selector.generation}};
    j["endpoints"] = {{"encoder_url", c.endpoints.encoder_url},
                      {"generator_url", c.endpoints.generator_url},
                      {"generator_model", c.endpoints.generator_model},
                      {"timeout_s", c.endpoints.timeout_s}};
    j["training"] = {{"epochs", c.training.epochs},
                     {"learning_rate", c.training.learning_rate},
                     {"batch_size", c.training.batch_size},
                     {"optimizer", to_string(c.training.optimizer)},
                     {"n_subsets", c.training.n_subsets},
                     {"hidden1", c.training.hidden1},
                     {"hidden2", c.training.hidden2},
                     {"projection", c.training.projection}};
    j["seed"] = c.seed;
    j["max_inflight"] = c.max_inflight;
    return j;
}

/// Relative paths inside a config file resolve against the file's directory.
inline EngineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorKind::MissingFile, path.string());
    const auto doc = nlohmann::json::parse(binary::read_file(path), nullptr, false);
    if (doc.is_discarded()) fail(ErrorKind::InvalidConfig, path.string() + ": not valid JSON");
    EngineConfig c = config_from_json(doc);
    const fs::path base = path.parent_path();
    for (std::string* p : {&c.manifest_path, &c.frame_dir, &c.selector.retrieval, &c.selector.generation}) {
        if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    }
    return c;
}

/// Explicit path, else $VRAG_CONFIG, else built-in defaults.
inline EngineConfig resolve_config(const std::string& explicit_path) {
    if (!explicit_path.empty()) return load_config(explicit_path);
    if (const char* env = std::getenv("VRAG_CONFIG"); env && *env) return load_config(env);
    return EngineConfig{};
}

}  // namespace vrag
