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

#include <chrono>
#include <string>

#include <httplib.h>

#include "vrag/error.hpp"
#include "vrag/http.hpp"

namespace vrag {

/// Real network transport over cpp-httplib. `base_url` is
/// scheme://host[:port][/prefix]; the prefix is prepended to every path.
/// A fresh client per request keeps the transport thread-safe.
class HttplibTransport : public HttpTransport {
  public:
    explicit HttplibTransport(const std::string& base_url, std::chrono::seconds timeout = std::chrono::seconds(60)) : timeout_(timeout) {
        const auto scheme_end = base_url.find("://");
        const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_start = base_url.find('/', host_start);
        origin_ = path_start == std::string::npos ? base_url : base_url.substr(0, path_start);
        prefix_ = path_start == std::string::npos ? "" : base_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        if (origin_.empty()) fail(ErrorKind::InvalidConfig, "empty endpoint URL");
    }

    HttpResponse post(const std::string& path, const std::string& body) override {
        auto client = make_client();
        auto res = client.Post(prefix_ + path, body, "application/json");
        if (!res) fail(ErrorKind::TransportFailure, "POST " + origin_ + prefix_ + path + ": " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }

    HttpResponse get(const std::string& path) override {
        auto client = make_client();
        auto res = client.Get(prefix_ + path);
        if (!res) fail(ErrorKind::TransportFailure, "GET " + origin_ + prefix_ + path + ": " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }

  private:
    httplib::Client make_client() const {
        httplib::Client client(origin_);
        client.set_connection_timeout(std::chrono::seconds(5));
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        return client;
    }

    std::string origin_;
    std::string prefix_;
    std::chrono::seconds timeout_;
};

}  // namespace vrag
