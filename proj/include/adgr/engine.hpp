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

// Retrieval pipeline: query cache, then online constrained decoding on a
// miss, then inverted-index lookup. All state a request touches lives in
// one immutable EngineSnapshot pinned at the start of the request.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adgr/ad_index.hpp"
#include "adgr/ci_trie.hpp"
#include "adgr/decoder.hpp"
#include "adgr/error.hpp"
#include "adgr/io.hpp"
#include "adgr/ngram_scorer.hpp"
#include "adgr/query_cache.hpp"
#include "adgr/scorer.hpp"
#include "adgr/snapshot.hpp"
#include "adgr/vocab.hpp"

namespace adgr {

namespace fs = std::filesystem;

struct EnginePaths {
  fs::path ci_source = "cis.jsonl";
  fs::path vocab = "vocab.txt";
  fs::path ci_set = "ci_set.jsonl";
  fs::path ci_aliases = "ci_aliases.jsonl";
  fs::path pairs = "pairs.jsonl";
  fs::path scorer = "scorer.ngram";
  // Optional separate scorer for ad-side assignment; empty means `scorer`.
  fs::path ad_scorer;
  fs::path ads = "ads.jsonl";
  fs::path assignments = "assignments.jsonl";
  fs::path index = "index";
  fs::path head_queries = "head_queries.jsonl";
  fs::path cache = "cache";
  fs::path eval_dataset = "eval.jsonl";
  fs::path report_dir = "report";
};

struct EngineConfig {
  // Relative paths resolve against this directory.
  fs::path base_dir = ".";
  EnginePaths paths;
  TokenizationScheme scheme = TokenizationScheme::kUnicodeWord;
  int ngram_order = 1;
  double smoothing_alpha = NgramScorer::kDefaultAlpha;
  DecodeParams online = DecodeParams::online();
  DecodeParams offline = DecodeParams::offline();
  std::size_t top_k = 100;
  Aggregation aggregation = Aggregation::kMax;
  // Observability target; only enforced when enforce_latency_budget is set.
  double latency_budget_ms = 60.0;
  bool enforce_latency_budget = false;
  std::size_t ci_cap = 30;
  std::size_t min_ci_support = 1;
  std::uint64_t cache_min_freq = 0;
  std::size_t eval_depth = 500;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

  void validate() const {
    online.validate();
    offline.validate();
    if (!(latency_budget_ms > 0.0)) throw ConfigError("config: latency_budget_ms must be > 0");
    if (top_k < 1) throw ConfigError("config: top_k must be >= 1");
    if (ci_cap < 1) throw ConfigError("config: ci_cap must be >= 1");
    if (eval_depth < 1) throw ConfigError("config: eval depth must be >= 1");
    if (ngram_order < 1) throw ConfigError("config: scorer order must be >= 1");
    if (!(smoothing_alpha > 0.0)) throw ConfigError("config: scorer alpha must be > 0");
  }

  static DecodeParams params_from_json(const nlohmann::json& j, DecodeParams p) {
    p.beam_size = j.value("beam_size", p.beam_size);
    p.max_len = j.value("max_len", p.max_len);
    p.temperature = j.value("temperature", p.temperature);
    if (j.contains("truncation_margin")) {
      const auto& m = j.at("truncation_margin");
      p.truncation_margin = m.is_null() ? std::nullopt : std::optional<double>(m.get<double>());
    }
    p.length_normalize = j.value("length_normalize", p.length_normalize);
    return p;
  }

  static nlohmann::json params_to_json(const DecodeParams& p) {
    nlohmann::json j{{"beam_size", p.beam_size},
                     {"max_len", p.max_len},
                     {"temperature", p.temperature},
                     {"length_normalize", p.length_normalize}};
    j["truncation_margin"] = p.truncation_margin ? nlohmann::json(*p.truncation_margin) : nlohmann::json(nullptr);
    return j;
  }

  static EngineConfig from_json(const nlohmann::json& j, fs::path base_dir) {
    EngineConfig c;
    c.base_dir = std::move(base_dir);
    if (j.contains("tokenization")) c.scheme = parse_scheme(j.at("tokenization").get<std::string>());
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      auto set = [&](const char* key, fs::path& dst) {
        if (p.contains(key)) dst = p.at(key).get<std::string>();
      };
      set("ci_source", c.paths.ci_source);
      set("vocab", c.paths.vocab);
      set("ci_set", c.paths.ci_set);
      set("ci_aliases", c.paths.ci_aliases);
      set("pairs", c.paths.pairs);
      set("scorer", c.paths.scorer);
      set("ad_scorer", c.paths.ad_scorer);
      set("ads", c.paths.ads);
      set("assignments", c.paths.assignments);
      set("index", c.paths.index);
      set("head_queries", c.paths.head_queries);
      set("cache", c.paths.cache);
      set("eval_dataset", c.paths.eval_dataset);
      set("report_dir", c.paths.report_dir);
    }
    if (j.contains("scorer")) {
      c.ngram_order = j.at("scorer").value("order", c.ngram_order);
      c.smoothing_alpha = j.at("scorer").value("alpha", c.smoothing_alpha);
    }
    if (j.contains("profiles")) {
      const auto& p = j.at("profiles");
      if (p.contains("online")) c.online = params_from_json(p.at("online"), c.online);
      if (p.contains("offline")) c.offline = params_from_json(p.at("offline"), c.offline);
    }
    if (j.contains("retrieval")) {
      const auto& r = j.at("retrieval");
      c.top_k = r.value("top_k", c.top_k);
      if (r.contains("aggregation")) c.aggregation = parse_aggregation(r.at("aggregation").get<std::string>());
      c.latency_budget_ms = r.value("latency_budget_ms", c.latency_budget_ms);
      c.enforce_latency_budget = r.value("enforce_latency_budget", c.enforce_latency_budget);
    }
    if (j.contains("indexing")) {
      c.ci_cap = j.at("indexing").value("ci_cap", c.ci_cap);
      c.min_ci_support = j.at("indexing").value("min_ci_support", c.min_ci_support);
    }
    if (j.contains("cache")) c.cache_min_freq = j.at("cache").value("min_freq", c.cache_min_freq);
    if (j.contains("eval")) c.eval_depth = j.at("eval").value("depth", c.eval_depth);
    c.validate();
    return c;
  }

  static EngineConfig load(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' not found");
    try {
      return from_json(io::read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
};

struct EngineSnapshot {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const CiTrie> trie;
  std::shared_ptr<const Scorer> query_scorer;
  std::shared_ptr<const Scorer> ad_scorer;
  std::shared_ptr<const IndexSnapshot> index;
  std::shared_ptr<const CacheSnapshot> cache;
};

struct RetrievedCi {
  std::string text;
  CiId ci;
  double score = 0.0;
  friend bool operator==(const RetrievedCi&, const RetrievedCi&) = default;
};

struct StageLatency {
  double cache_ms = 0.0;
  double decode_ms = 0.0;
  double lookup_ms = 0.0;
  double total() const { return cache_ms + decode_ms + lookup_ms; }
};

struct RetrievalResult {
  std::string query;
  std::vector<RetrievedCi> cis;
  std::vector<AdHit> ads;
  bool cache_hit = false;
  // The decode hit the latency deadline and returned what had finished.
  bool degraded = false;
  double latency_ms = 0.0;
  StageLatency stages;
  std::uint64_t index_version = 0;
  std::uint64_t trie_version = 0;
};

// `include_timing` = false drops the wall-clock fields, leaving a form
// that is a pure function of the snapshot and the request.
inline nlohmann::json to_json(const RetrievalResult& r, bool include_timing = true) {
  nlohmann::json cis = nlohmann::json::array();
  for (const auto& c : r.cis) cis.push_back({{"text", c.text}, {"ci_id", c.ci.value}, {"score", c.score}});
  nlohmann::json ads = nlohmann::json::array();
  for (const auto& a : r.ads) {
    ads.push_back({{"ad_id", a.ad_id}, {"score", a.score}, {"matched_ci_count", a.matched_ci_count}});
  }
  nlohmann::json j{{"query", r.query},
                   {"cis", std::move(cis)},
                   {"ads", std::move(ads)},
                   {"cache_hit", r.cache_hit},
                   {"degraded", r.degraded},
                   {"index_version", r.index_version},
                   {"trie_version", r.trie_version}};
  if (include_timing) {
    j["latency_ms"] = r.latency_ms;
    j["stage_latency_ms"] = {
        {"cache", r.stages.cache_ms}, {"decode", r.stages.decode_ms}, {"lookup", r.stages.lookup_ms}};
  }
  return j;
}

struct LatencySummary {
  std::uint64_t count = 0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

// Nearest-rank percentile of an unsorted sample.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

// Keeps the most recent `capacity` request latencies.
class LatencyRecorder {
 public:
  explicit LatencyRecorder(std::size_t capacity = 8192) : capacity_(capacity) { ring_.reserve(capacity); }

  void record(double ms) {
    std::lock_guard lock(mu_);
    ++count_;
    if (ring_.size() < capacity_) {
      ring_.push_back(ms);
    } else {
      ring_[next_] = ms;
      next_ = (next_ + 1) % capacity_;
    }
  }

  LatencySummary summary() const {
    std::vector<double> sample;
    LatencySummary s;
    {
      std::lock_guard lock(mu_);
      sample = ring_;
      s.count = count_;
    }
    s.p50 = percentile(sample, 50);
    s.p95 = percentile(sample, 95);
    s.p99 = percentile(sample, 99);
    s.max = sample.empty() ? 0.0 : *std::max_element(sample.begin(), sample.end());
    return s;
  }

 private:
  mutable std::mutex mu_;
  std::size_t capacity_;
  std::vector<double> ring_;
  std::size_t next_ = 0;
  std::uint64_t count_ = 0;
};

class Engine {
 public:
  Engine(EngineConfig config, EngineSnapshot snapshot) : config_(std::move(config)) {
    config_.validate();
    check_coherent(snapshot);
    cell_.store(std::make_shared<const EngineSnapshot>(std::move(snapshot)));
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Loads vocab, CI set, scorer(s), index and (when present) cache from
  // the configured paths.
  static std::unique_ptr<Engine> load(const EngineConfig& config) {
    EngineSnapshot s;
    s.vocab = std::make_shared<const Vocabulary>(io::load_vocab(config.resolve(config.paths.vocab), config.scheme));
    s.trie = std::make_shared<const CiTrie>(io::load_trie(config.resolve(config.paths.ci_set), *s.vocab));
    auto scorer = std::make_shared<const NgramScorer>(io::load_scorer(config.resolve(config.paths.scorer)));
    if (scorer->vocab_size() != s.vocab->size()) throw ConfigError("scorer vocabulary size does not match vocab");
    s.query_scorer = scorer;
    s.ad_scorer = scorer;
    if (!config.paths.ad_scorer.empty()) {
      s.ad_scorer = std::make_shared<const NgramScorer>(io::load_scorer(config.resolve(config.paths.ad_scorer)));
      if (s.ad_scorer->vocab_size() != s.vocab->size()) {
        throw ConfigError("ad scorer vocabulary size does not match vocab");
      }
    }
    s.index = std::make_shared<const IndexSnapshot>(io::load_index(config.resolve(config.paths.index)));
    const auto cache_dir = config.resolve(config.paths.cache);
    if (fs::exists(cache_dir / "manifest.json")) {
      s.cache = std::make_shared<const CacheSnapshot>(io::load_cache(cache_dir));
    } else {
      auto empty = std::make_shared<CacheSnapshot>();
      empty->trie_version = s.trie->version();
      s.cache = std::move(empty);
    }
    return std::make_unique<Engine>(config, std::move(s));
  }

  const EngineConfig& config() const { return config_; }
  std::shared_ptr<const EngineSnapshot> snapshot() const { return cell_.load(); }
  CacheStats cache_stats() const { return cache_.stats(); }
  LatencySummary latency_summary() const { return latency_.summary(); }
  void reset_stats() { cache_.reset_stats(); }

  RetrievalResult retrieve(std::string_view query, std::optional<std::size_t> top_k = std::nullopt) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto ms_since = [](clock::time_point a) {
      return std::chrono::duration<double, std::milli>(clock::now() - a).count();
    };
    const std::size_t k = top_k.value_or(config_.top_k);
    if (k < 1) throw InvalidInput("retrieve: top_k must be >= 1");
    std::string q = normalize_query(query);
    if (q.empty()) throw InvalidInput("retrieve: empty query");

    const auto snap = snapshot();
    RetrievalResult r;
    r.query = q;
    r.index_version = snap->index->version();
    r.trie_version = snap->trie->version();

    auto t = clock::now();
    const std::vector<ScoredCi>* cached = cache_.lookup(*snap->cache, q);
    r.stages.cache_ms = ms_since(t);

    std::vector<ScoredCi> decoded;
    if (cached) {
      r.cache_hit = true;
    } else {
      t = clock::now();
      try {
        std::optional<clock::time_point> deadline;
        if (config_.enforce_latency_budget) {
          deadline = t0 + std::chrono::duration_cast<clock::duration>(
                              std::chrono::duration<double, std::milli>(config_.latency_budget_ms));
        }
        auto outcome = constrained_beam_search_until<clock>(*snap->query_scorer, *snap->trie, q, config_.online,
                                                            deadline);
        decoded = std::move(outcome.cis);
        r.degraded = outcome.deadline_hit;
      } catch (const std::exception& e) {
        throw RetrievalError("decode", e.what());
      }
      r.stages.decode_ms = ms_since(t);
    }
    const auto& cis = cached ? *cached : decoded;

    t = clock::now();
    try {
      r.ads = lookup(*snap->index, cis, k, config_.aggregation);
    } catch (const std::exception& e) {
      throw RetrievalError("lookup", e.what());
    }
    r.cis.reserve(cis.size());
    for (const auto& c : cis) r.cis.push_back({snap->trie->text(c.ci), c.ci, c.score});
    r.stages.lookup_ms = ms_since(t);

    r.latency_ms = ms_since(t0);
    latency_.record(r.latency_ms);
    return r;
  }

  // Assigns CIs with the ad-side scorer (offline profile) and indexes the
  // ad. Returns the new index version.
  std::uint64_t add_ad(const Ad& ad) {
    const auto snap = snapshot();
    const auto cis = assign_cis_to_ad(ad, *snap->ad_scorer, *snap->trie, config_.offline, config_.ci_cap);
    return add_ad(ad.ad_id, cis);
  }

  std::uint64_t add_ad(const std::string& ad_id, std::span<const CiId> cis) {
    std::lock_guard lock(writer_);
    auto next = *snapshot();
    next.index = std::make_shared<const IndexSnapshot>(next.index->with_ad(ad_id, cis));
    const auto v = next.index->version();
    cell_.store(std::make_shared<const EngineSnapshot>(std::move(next)));
    return v;
  }

  std::uint64_t remove_ad(std::string_view ad_id) {
    std::lock_guard lock(writer_);
    auto next = *snapshot();
    next.index = std::make_shared<const IndexSnapshot>(next.index->without_ad(ad_id));
    const auto v = next.index->version();
    cell_.store(std::make_shared<const EngineSnapshot>(std::move(next)));
    return v;
  }

  void install_cache(std::shared_ptr<const CacheSnapshot> cache) {
    std::lock_guard lock(writer_);
    auto next = *snapshot();
    next.cache = std::move(cache);
    check_coherent(next);
    cell_.store(std::make_shared<const EngineSnapshot>(std::move(next)));
  }

  void install_index(std::shared_ptr<const IndexSnapshot> index) {
    std::lock_guard lock(writer_);
    auto next = *snapshot();
    next.index = std::move(index);
    check_coherent(next);
    cell_.store(std::make_shared<const EngineSnapshot>(std::move(next)));
  }

 private:
  static void check_coherent(const EngineSnapshot& s) {
    if (!s.vocab || !s.trie || !s.query_scorer || !s.ad_scorer || !s.index || !s.cache) {
      throw ConfigError("engine snapshot is incomplete");
    }
    if (s.trie->empty()) throw ConfigError("engine snapshot has an empty CI trie");
    if (s.index->trie_version() != s.trie->version() || s.index->ci_count() != s.trie->ci_count()) {
      throw ConfigError("index was built for a different CI set (trie_version " +
                        std::to_string(s.index->trie_version()) + " vs " + std::to_string(s.trie->version()) + ")");
    }
    if (!s.cache->entries.empty() && s.cache->trie_version != s.trie->version()) {
      throw ConfigError("cache was warmed for a different CI set");
    }
  }

  EngineConfig config_;
  std::mutex writer_;
  SnapshotCell<EngineSnapshot> cell_;
  QueryCache cache_;
  LatencyRecorder latency_;
};

}  // namespace adgr
