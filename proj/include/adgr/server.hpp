// Copyright 2026 The adgr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON-over-HTTP front end for an Engine.
//
//   POST /retrieve  {"query": string, "top_k": int?}  -> RetrievalResult
//   GET  /healthz                                      -> readiness + versions
//   GET  /stats                                        -> cache stats + latency percentiles

#pragma once

#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "adgr/engine.hpp"
#include "adgr/error.hpp"

namespace adgr {

class Server {
 public:
  explicit Server(Engine& engine) : engine_(engine) { routes(); }

  // Blocks until stop().
  bool listen(const std::string& host, int port) { return http_.listen(host, port); }

  // Binds to an ephemeral port and returns it; pair with listen_after_bind().
  int bind_any_port(const std::string& host) { return http_.bind_to_any_port(host); }
  bool listen_after_bind() { return http_.listen_after_bind(); }

  void stop() { http_.stop(); }
  bool running() const { return http_.is_running(); }
  void wait_until_ready() const { http_.wait_until_ready(); }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void routes() {
    http_.Post("/retrieve", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception&) {
        return reply(res, 400, {{"error", "request body is not valid JSON"}});
      }
      if (!body.is_object() || !body.contains("query") || !body.at("query").is_string()) {
        return reply(res, 400, {{"error", "body must be an object with a string 'query'"}});
      }
      std::optional<std::size_t> top_k;
      if (body.contains("top_k") && !body.at("top_k").is_null()) {
        const auto& k = body.at("top_k");
        if (!k.is_number_integer() || k.get<long long>() < 1) {
          return reply(res, 400, {{"error", "'top_k' must be a positive integer"}});
        }
        top_k = k.get<std::size_t>();
      }
      try {
        reply(res, 200, to_json(engine_.retrieve(body.at("query").get<std::string>(), top_k)));
      } catch (const InvalidInput& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const RetrievalError& e) {
        reply(res, 500, {{"error", e.what()}, {"stage", e.stage()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}, {"stage", "internal"}});
      }
    });

    http_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      const auto snap = engine_.snapshot();
      reply(res, 200,
            {{"status", "ready"},
             {"trie_version", snap->trie->version()},
             {"index_version", snap->index->version()},
             {"ci_count", snap->trie->ci_count()},
             {"ad_count", snap->index->ad_count()},
             {"cache_entries", snap->cache->entries.size()},
             {"cache_profile", snap->cache->profile}});
    });

    http_.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
      const auto c = engine_.cache_stats();
      const auto l = engine_.latency_summary();
      reply(res, 200,
            {{"cache", {{"lookups", c.lookups}, {"hits", c.hits}, {"misses", c.misses()}, {"hit_rate", c.hit_rate()}}},
             {"latency_ms",
              {{"count", l.count},
               {"p50", l.p50},
               {"p95", l.p95},
               {"p99", l.p99},
               {"max", l.max},
               {"budget", engine_.config().latency_budget_ms}}}});
    });
  }

  Engine& engine_;
  httplib::Server http_;
};

}  // namespace adgr
