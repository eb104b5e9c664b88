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

// CiId -> ads inverted index. Every version is an immutable snapshot;
// updates produce a new snapshot that shares all untouched posting lists
// and ad records with its predecessor.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adgr/ci_trie.hpp"
#include "adgr/decoder.hpp"
#include "adgr/error.hpp"
#include "adgr/scorer.hpp"
#include "adgr/snapshot.hpp"

namespace adgr {

struct Ad {
  std::string ad_id;
  std::string title;
  std::string landing_page;
  std::string materials;

  // Text the scorer conditions on when assigning CIs.
  std::string context() const { return materials.empty() ? title : title + " " + materials; }
};

struct Assignment {
  std::string ad_id;
  std::vector<CiId> cis;
};

struct AdHit {
  std::string ad_id;
  double score = 0.0;
  std::size_t matched_ci_count = 0;
  friend bool operator==(const AdHit&, const AdHit&) = default;
};

enum class Aggregation { kMax, kSum };

inline Aggregation parse_aggregation(std::string_view s) {
  if (s == "max") return Aggregation::kMax;
  if (s == "sum") return Aggregation::kSum;
  throw ConfigError("unknown aggregation mode '" + std::string(s) + "'");
}

inline std::string_view aggregation_name(Aggregation a) { return a == Aggregation::kMax ? "max" : "sum"; }

class IndexSnapshot {
 public:
  using PostingList = std::vector<std::string>;  // sorted ad ids
  static constexpr std::size_t kChunk = 64;
  static constexpr std::size_t kAdBuckets = 4096;

  IndexSnapshot() : IndexSnapshot(0, 0) {}

  IndexSnapshot(std::size_t ci_count, std::uint64_t trie_version)
      : ci_count_(ci_count),
        trie_version_(trie_version),
        chunks_((ci_count + kChunk - 1) / kChunk),
        ad_buckets_(kAdBuckets) {}

  static IndexSnapshot build(std::span<const Assignment> assignments, std::size_t ci_count,
                             std::uint64_t trie_version) {
    IndexSnapshot s(ci_count, trie_version);
    std::vector<std::vector<std::string>> postings(ci_count);
    std::vector<std::vector<std::pair<std::string, std::vector<CiId>>>> buckets(kAdBuckets);
    for (const auto& a : assignments) {
      if (a.ad_id.empty()) throw IndexBuildError("build_index: empty ad_id");
      auto cis = normalized_cis(a.cis, ci_count, a.ad_id);
      auto& bucket = buckets[bucket_of(a.ad_id)];
      for (const auto& [id, _] : bucket) {
        if (id == a.ad_id) throw IndexBuildError("build_index: duplicate ad '" + a.ad_id + "'");
      }
      for (CiId c : cis) postings[c.value].push_back(a.ad_id);
      bucket.emplace_back(a.ad_id, std::move(cis));
      ++s.ad_count_;
    }
    for (std::size_t c = 0; c < ci_count; ++c) {
      auto& p = postings[c];
      if (p.empty()) continue;
      std::sort(p.begin(), p.end());
      auto& chunk = s.chunks_[c / kChunk];
      if (!chunk) chunk = std::make_shared<Chunk>(kChunk);
      (*chunk)[c % kChunk] = std::make_shared<const PostingList>(std::move(p));
    }
    for (std::size_t b = 0; b < kAdBuckets; ++b) {
      if (buckets[b].empty()) continue;
      std::sort(buckets[b].begin(), buckets[b].end());
      s.ad_buckets_[b] = std::make_shared<const AdBucket>(std::move(buckets[b]));
    }
    s.version_ = 1;
    return s;
  }

  std::uint64_t version() const { return version_; }
  std::uint64_t trie_version() const { return trie_version_; }
  std::size_t ci_count() const { return ci_count_; }
  std::size_t ad_count() const { return ad_count_; }

  std::span<const std::string> postings(CiId ci) const {
    if (ci.value >= ci_count_) return {};
    const auto& chunk = chunks_[ci.value / kChunk];
    if (!chunk) return {};
    const auto& list = (*chunk)[ci.value % kChunk];
    if (!list) return {};
    return *list;
  }

  // Sorted CIs of an ad, or nullptr when the ad is not indexed.
  const std::vector<CiId>* cis_of(std::string_view ad_id) const {
    const auto& bucket = ad_buckets_[bucket_of(ad_id)];
    if (!bucket) return nullptr;
    auto it = std::lower_bound(bucket->begin(), bucket->end(), ad_id,
                               [](const auto& e, std::string_view v) { return e.first < v; });
    if (it == bucket->end() || it->first != ad_id) return nullptr;
    return &it->second;
  }

  bool contains_ad(std::string_view ad_id) const { return cis_of(ad_id) != nullptr; }

  // New snapshot with `ad_id` posted under every CI in `cis`.
  IndexSnapshot with_ad(const std::string& ad_id, std::span<const CiId> cis) const {
    if (ad_id.empty()) throw InvalidInput("add_ad: empty ad_id");
    if (contains_ad(ad_id)) throw IdempotencyError("add_ad: ad '" + ad_id + "' already indexed");
    auto sorted = normalized_cis(cis, ci_count_, ad_id);
    IndexSnapshot next = *this;
    for (CiId c : sorted) {
      auto& slot = next.mutable_chunk(c.value)[c.value % kChunk];
      auto list = slot ? std::make_shared<PostingList>(*slot) : std::make_shared<PostingList>();
      list->insert(std::upper_bound(list->begin(), list->end(), ad_id), ad_id);
      slot = std::move(list);
    }
    auto& bslot = next.ad_buckets_[bucket_of(ad_id)];
    auto bucket = bslot ? std::make_shared<AdBucket>(*bslot) : std::make_shared<AdBucket>();
    auto pos = std::lower_bound(bucket->begin(), bucket->end(), ad_id,
                                [](const auto& e, const std::string& v) { return e.first < v; });
    bucket->emplace(pos, ad_id, std::move(sorted));
    bslot = std::move(bucket);
    ++next.ad_count_;
    ++next.version_;
    return next;
  }

  IndexSnapshot without_ad(std::string_view ad_id) const {
    const auto* cis = cis_of(ad_id);
    if (!cis) throw IdempotencyError("remove_ad: ad '" + std::string(ad_id) + "' is not indexed");
    IndexSnapshot next = *this;
    for (CiId c : *cis) {
      auto& slot = next.mutable_chunk(c.value)[c.value % kChunk];
      auto list = std::make_shared<PostingList>(*slot);
      list->erase(std::lower_bound(list->begin(), list->end(), ad_id));
      slot = list->empty() ? nullptr : std::shared_ptr<const PostingList>(std::move(list));
    }
    auto& bslot = next.ad_buckets_[bucket_of(ad_id)];
    auto bucket = std::make_shared<AdBucket>(*bslot);
    bucket->erase(std::lower_bound(bucket->begin(), bucket->end(), ad_id,
                                   [](const auto& e, std::string_view v) { return e.first < v; }));
    bslot = bucket->empty() ? nullptr : std::shared_ptr<const AdBucket>(std::move(bucket));
    --next.ad_count_;
    ++next.version_;
    return next;
  }

  // Visits non-empty posting lists in CiId order.
  template <class F>
  void for_each_posting(F&& f) const {
    for (std::size_t c = 0; c < ci_count_; ++c) {
      auto p = postings(CiId{static_cast<std::uint32_t>(c)});
      if (!p.empty()) f(CiId{static_cast<std::uint32_t>(c)}, p);
    }
  }

  // Visits every indexed ad (bucket order, then ad_id order).
  template <class F>
  void for_each_ad(F&& f) const {
    for (const auto& b : ad_buckets_) {
      if (!b) continue;
      for (const auto& [id, cis] : *b) f(id, std::span<const CiId>(cis));
    }
  }

  void set_version(std::uint64_t v) { version_ = v; }

 private:
  using Chunk = std::vector<std::shared_ptr<const PostingList>>;
  using AdBucket = std::vector<std::pair<std::string, std::vector<CiId>>>;

  static std::size_t bucket_of(std::string_view ad_id) { return std::hash<std::string_view>{}(ad_id) % kAdBuckets; }

  static std::vector<CiId> normalized_cis(std::span<const CiId> cis, std::size_t ci_count, const std::string& ad_id) {
    std::vector<CiId> out(cis.begin(), cis.end());
    for (CiId c : out) {
      if (c.value >= ci_count) {
        throw IndexBuildError("ad '" + ad_id + "' references invalid ci_id " + std::to_string(c.value));
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Copy-on-write access to the chunk holding `ci`.
  Chunk& mutable_chunk(std::size_t ci) {
    auto& slot = chunks_[ci / kChunk];
    auto copy = slot ? std::make_shared<Chunk>(*slot) : std::make_shared<Chunk>(kChunk);
    Chunk& ref = *copy;
    slot = std::move(copy);
    return ref;
  }

  std::size_t ci_count_ = 0;
  std::uint64_t trie_version_ = 0;
  std::uint64_t version_ = 0;
  std::size_t ad_count_ = 0;
  std::vector<std::shared_ptr<Chunk>> chunks_;
  std::vector<std::shared_ptr<const AdBucket>> ad_buckets_;
};

// Serialized writer over a sequence of index snapshots. Readers take
// snapshot() and are unaffected by later writes.
class AdIndex {
 public:
  explicit AdIndex(IndexSnapshot initial)
      : cell_(std::make_shared<const IndexSnapshot>(std::move(initial))) {}

  std::shared_ptr<const IndexSnapshot> snapshot() const { return cell_.load(); }

  std::uint64_t add_ad(const std::string& ad_id, std::span<const CiId> cis) {
    std::lock_guard lock(writer_);
    auto next = std::make_shared<const IndexSnapshot>(cell_.load()->with_ad(ad_id, cis));
    const auto v = next->version();
    cell_.store(std::move(next));
    return v;
  }

  std::uint64_t remove_ad(std::string_view ad_id) {
    std::lock_guard lock(writer_);
    auto next = std::make_shared<const IndexSnapshot>(cell_.load()->without_ad(ad_id));
    const auto v = next->version();
    cell_.store(std::move(next));
    return v;
  }

 private:
  std::mutex writer_;
  SnapshotCell<IndexSnapshot> cell_;
};

// Top CIs for an ad under its title+materials context, at most `cap`.
inline std::vector<CiId> assign_cis_to_ad(const Ad& ad, const Scorer& scorer, const CiTrie& trie,
                                          const DecodeParams& params, std::size_t cap) {
  if (cap < 1) throw ConfigError("assign_cis_to_ad: cap must be >= 1");
  std::vector<ScoredCi> decoded;
  try {
    decoded = constrained_beam_search(scorer, trie, ad.context(), params);
  } catch (const Error& e) {
    throw AssignmentError(ad.ad_id, e.what());
  }
  if (decoded.empty()) throw AssignmentError(ad.ad_id, "no CI reachable within max_len");
  std::vector<CiId> out;
  out.reserve(std::min(cap, decoded.size()));
  for (std::size_t i = 0; i < decoded.size() && i < cap; ++i) out.push_back(decoded[i].ci);
  return out;
}

// Ranks every ad posted under the decoded CIs. Ties: more matched CIs
// first, then ad_id ascending.
inline std::vector<AdHit> lookup(const IndexSnapshot& index, std::span<const ScoredCi> decoded, std::size_t top_k,
                                 Aggregation aggregation = Aggregation::kMax) {
  if (top_k < 1) throw InvalidInput("lookup: top_k must be >= 1");
  struct Acc {
    double score;
    std::size_t matched;
  };
  std::unordered_map<std::string_view, Acc> acc;
  for (const auto& d : decoded) {
    if (d.ci.value >= index.ci_count()) {
      throw InvalidInput("lookup: ci_id " + std::to_string(d.ci.value) + " is not valid for this index");
    }
    for (const auto& ad : index.postings(d.ci)) {
      auto [it, fresh] = acc.try_emplace(ad, Acc{d.score, 1});
      if (fresh) continue;
      it->second.score =
          aggregation == Aggregation::kMax ? std::max(it->second.score, d.score) : it->second.score + d.score;
      ++it->second.matched;
    }
  }
  std::vector<AdHit> hits;
  hits.reserve(acc.size());
  for (const auto& [id, a] : acc) hits.push_back({std::string(id), a.score, a.matched});
  auto better = [](const AdHit& a, const AdHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.matched_ci_count != b.matched_ci_count) return a.matched_ci_count > b.matched_ci_count;
    return a.ad_id < b.ad_id;
  };
  if (hits.size() > top_k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top_k), hits.end(), better);
    hits.resize(top_k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  return hits;
}

}  // namespace adgr
