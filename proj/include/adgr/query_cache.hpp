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

// Exact-match cache of decoded CIs for head queries. A snapshot is warmed
// offline and then served read-only until the next warm replaces it.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adgr/ci_trie.hpp"
#include "adgr/decoder.hpp"
#include "adgr/error.hpp"
#include "adgr/snapshot.hpp"
#include "adgr/text.hpp"

namespace adgr {

// Lowercase, trim, collapse internal whitespace. Idempotent.
inline std::string normalize_query(std::string_view q) { return text::normalize_whitespace(q); }

struct HeadQuery {
  std::string query;
  std::uint64_t freq = 0;
};

struct CacheSnapshot {
  std::unordered_map<std::string, std::vector<ScoredCi>> entries;
  std::string profile = "offline";
  std::uint64_t trie_version = 0;
  std::int64_t built_at = 0;  // unix seconds

  const std::vector<ScoredCi>* find(std::string_view normalized) const {
    auto it = entries.find(std::string(normalized));
    return it == entries.end() ? nullptr : &it->second;
  }
};

struct WarmReport {
  std::size_t requested = 0;
  std::size_t stored = 0;
  std::size_t duplicates = 0;
  std::size_t below_min_freq = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // query, reason
};

struct WarmResult {
  CacheSnapshot snapshot;
  WarmReport report;
};

inline std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Decodes every head query with frequency >= min_freq. A query that fails
// to decode is reported and skipped.
inline WarmResult warm_cache(std::span<const HeadQuery> head_queries, const Scorer& scorer, const CiTrie& trie,
                             const DecodeParams& params = DecodeParams::offline(), std::uint64_t min_freq = 0,
                             std::string profile = "offline", std::int64_t built_at = unix_now()) {
  if (head_queries.empty()) throw ConfigError("warm_cache: no head queries");
  params.validate();
  WarmResult r;
  r.snapshot.profile = std::move(profile);
  r.snapshot.trie_version = trie.version();
  r.snapshot.built_at = built_at;
  r.report.requested = head_queries.size();
  for (const auto& hq : head_queries) {
    if (hq.freq < min_freq) {
      ++r.report.below_min_freq;
      continue;
    }
    auto q = normalize_query(hq.query);
    if (q.empty()) {
      r.report.failures.emplace_back(hq.query, "empty query");
      continue;
    }
    if (r.snapshot.entries.count(q)) {
      ++r.report.duplicates;
      continue;
    }
    try {
      r.snapshot.entries.emplace(q, constrained_beam_search(scorer, trie, q, params));
    } catch (const Error& e) {
      r.report.failures.emplace_back(hq.query, e.what());
    }
  }
  r.report.stored = r.snapshot.entries.size();
  return r;
}

struct CacheStats {
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses() const { return lookups - hits; }
  double hit_rate() const { return lookups == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(lookups); }
};

class QueryCache {
 public:
  QueryCache() : cell_(std::make_shared<const CacheSnapshot>()) {}
  explicit QueryCache(std::shared_ptr<const CacheSnapshot> snap) : cell_(std::move(snap)) {}

  std::shared_ptr<const CacheSnapshot> snapshot() const { return cell_.load(); }
  void install(std::shared_ptr<const CacheSnapshot> snap) { cell_.store(std::move(snap)); }

  // Looks up `query` (normalized here) in the current snapshot.
  std::optional<std::vector<ScoredCi>> get(std::string_view query) {
    const auto snap = snapshot();
    if (const auto* hit = lookup(*snap, normalize_query(query))) return *hit;
    return std::nullopt;
  }

  // Lookup against a snapshot the caller has pinned; `normalized` must
  // already be normalized.
  const std::vector<ScoredCi>* lookup(const CacheSnapshot& snap, std::string_view normalized) {
    lookups_.fetch_add(1);
    const auto* hit = snap.find(normalized);
    if (hit) hits_.fetch_add(1);
    return hit;
  }

  CacheStats stats() const {
    CacheStats s;
    // hits before lookups: lookups is always bumped first, so hits <= lookups.
    s.hits = hits_.load();
    s.lookups = lookups_.load();
    return s;
  }

  void reset_stats() {
    hits_.store(0);
    lookups_.store(0);
  }

 private:
  SnapshotCell<CacheSnapshot> cell_;
  std::atomic<std::uint64_t> lookups_{0};
  std::atomic<std::uint64_t> hits_{0};
};

}  // namespace adgr
