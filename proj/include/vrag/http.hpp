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

#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vrag/binary_io.hpp"
#include "vrag/error.hpp"

namespace vrag {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Minimal JSON-over-HTTP surface every external client goes through.
/// Implementations must be safe to call from several threads.
class HttpTransport {
  public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& path, const std::string& body) = 0;
    virtual HttpResponse get(const std::string& path) = 0;
};

struct Interaction {
    std::string method;
    std::string path;
    std::string request;
    int status = 0;
    std::string response;
};

inline nlohmann::ordered_json interactions_to_json(const std::vector<Interaction>& log) {
    nlohmann::ordered_json j;
    j["interactions"] = nlohmann::ordered_json::array();
    for (const auto& i : log) {
        j["interactions"].push_back(
            {{"method", i.method}, {"path", i.path}, {"request", i.request}, {"status", i.status}, {"response", i.response}});
    }
    return j;
}

inline std::vector<Interaction> interactions_from_json(const nlohmann::json& j) {
    std::vector<Interaction> log;
    try {
        for (const auto& i : j.at("interactions")) {
            log.push_back({i.at("method").get<std::string>(), i.at("path").get<std::string>(), i.at("request").get<std::string>(),
                           i.at("status").get<int>(), i.at("response").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("fixture: ") + e.what());
    }
    return log;
}

inline std::vector<Interaction> load_interactions(const std::filesystem::path& path) {
    try {
        return interactions_from_json(nlohmann::json::parse(binary::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("fixture is not JSON: ") + e.what());
    }
}

/// Forwards to another transport and keeps every exchange for later replay.
class RecordingTransport : public HttpTransport {
  public:
    explicit RecordingTransport(HttpTransport& inner) : inner_(inner) {}

    HttpResponse post(const std::string& path, const std::string& body) override {
        HttpResponse r = inner_.post(path, body);
        std::lock_guard lock(mu_);
        log_.push_back({"POST", path, body, r.status, r.body});
        return r;
    }

    HttpResponse get(const std::string& path) override {
        HttpResponse r = inner_.get(path);
        std::lock_guard lock(mu_);
        log_.push_back({"GET", path, "", r.status, r.body});
        return r;
    }

    [[nodiscard]] std::vector<Interaction> interactions() const {
        std::lock_guard lock(mu_);
        return log_;
    }

    void save(const std::filesystem::path& path) const { binary::write_file(path, interactions_to_json(interactions()).dump(2) + "\n"); }

  private:
    HttpTransport& inner_;
    mutable std::mutex mu_;
    std::vector<Interaction> log_;
};

/// Serves recorded exchanges. A request matches the first unconsumed
/// interaction with the same method, path and body; anything else is a
/// TransportFailure, so unexpected calls surface in tests.
class ReplayTransport : public HttpTransport {
  public:
    explicit ReplayTransport(std::vector<Interaction> log) : log_(std::move(log)), used_(log_.size(), false) {}

    static ReplayTransport from_file(const std::filesystem::path& path) { return ReplayTransport(load_interactions(path)); }

    HttpResponse post(const std::string& path, const std::string& body) override { return serve("POST", path, body); }
    HttpResponse get(const std::string& path) override { return serve("GET", path, ""); }

    [[nodiscard]] std::size_t calls() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

  private:
    HttpResponse serve(std::string_view method, const std::string& path, const std::string& body) {
        std::lock_guard lock(mu_);
        ++calls_;
        for (std::size_t i = 0; i < log_.size(); ++i) {
            if (used_[i] || log_[i].method != method || log_[i].path != path || log_[i].request != body) continue;
            used_[i] = true;
            return {log_[i].status, log_[i].response};
        }
        fail(ErrorKind::TransportFailure, "no recorded interaction for " + std::string(method) + " " + path);
    }

    std::vector<Interaction> log_;
    std::vector<bool> used_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

/// In-process stand-in for a service: a handler per (method, path) and a
/// call log. Used by tests and by offline CLI runs.
class StubTransport : public HttpTransport {
  public:
    using Handler = std::function<HttpResponse(const std::string& body)>;

    void on_post(const std::string& path, Handler h) { post_handlers_.emplace_back(path, std::move(h)); }
    void on_get(const std::string& path, Handler h) { get_handlers_.emplace_back(path, std::move(h)); }

    HttpResponse post(const std::string& path, const std::string& body) override { return dispatch(post_handlers_, "POST", path, body); }
    HttpResponse get(const std::string& path) override { return dispatch(get_handlers_, "GET", path, ""); }

    [[nodiscard]] std::size_t calls() const {
        std::lock_guard lock(mu_);
        return log_.size();
    }
    [[nodiscard]] std::vector<Interaction> interactions() const {
        std::lock_guard lock(mu_);
        return log_;
    }

  private:
    HttpResponse dispatch(const std::vector<std::pair<std::string, Handler>>& handlers, const char* method, const std::string& path,
                          const std::string& body) {
        for (const auto& [p, h] : handlers) {
            if (p != path) continue;
            HttpResponse r = h(body);
            std::lock_guard lock(mu_);
            log_.push_back({method, path, body, r.status, r.body});
            return r;
        }
        fail(ErrorKind::TransportFailure, std::string("no stub for ") + method + " " + path);
    }

    std::vector<std::pair<std::string, Handler>> post_handlers_;
    std::vector<std::pair<std::string, Handler>> get_handlers_;
    mutable std::mutex mu_;
    std::vector<Interaction> log_;
};

}  // namespace vrag
