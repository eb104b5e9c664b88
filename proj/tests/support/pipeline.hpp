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

// Builds an in-memory engine from a synthetic corpus through the same
// steps the CLI runs, without touching the filesystem.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "adgr/adgr.hpp"
#include "adgr/synthetic.hpp"

namespace adgr::testing {

struct Pipeline {
  EngineConfig config;
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const CiTrie> trie;
  std::shared_ptr<const NgramScorer> scorer;
  std::shared_ptr<const IndexSnapshot> index;
  std::shared_ptr<const CacheSnapshot> cache;
  std::vector<Assignment> assignments;

  EngineSnapshot snapshot() const { return {vocab, trie, scorer, scorer, index, cache}; }
  std::unique_ptr<Engine> engine() const { return std::make_unique<Engine>(config, snapshot()); }
};

inline std::vector<TrainingPair> tokenize_pairs(const std::vector<io::RawPair>& raw, const Vocabulary& vocab) {
  std::vector<TrainingPair> out;
  out.reserve(raw.size());
  for (const auto& p : raw) {
    auto ci = vocab.tokenize(p.ci);
    if (std::find(ci.begin(), ci.end(), vocab.unk_id()) != ci.end()) continue;
    out.push_back({p.context, std::move(ci)});
  }
  return out;
}

inline Pipeline build_pipeline(const synthetic::Corpus& corpus, EngineConfig config = {}, bool warm = true) {
  Pipeline p;
  p.config = config;
  p.vocab = std::make_shared<const Vocabulary>(Vocabulary::build(corpus.ci_texts, config.scheme));
  std::vector<io::CiRecord> records;
  for (const auto& t : corpus.ci_texts) records.push_back({std::nullopt, t});
  p.trie = std::make_shared<const CiTrie>(io::build_trie_from_records(records, *p.vocab));
  p.scorer = std::make_shared<const NgramScorer>(
      NgramScorer::fit(tokenize_pairs(corpus.pairs, *p.vocab), config.ngram_order, config.smoothing_alpha, *p.vocab));
  for (const auto& ad : corpus.ads) {
    p.assignments.push_back({ad.ad_id, assign_cis_to_ad(ad, *p.scorer, *p.trie, config.offline, config.ci_cap)});
  }
  p.index = std::make_shared<const IndexSnapshot>(
      IndexSnapshot::build(p.assignments, p.trie->ci_count(), p.trie->version()));
  if (warm && !corpus.head_queries.empty()) {
    auto w = warm_cache(corpus.head_queries, *p.scorer, *p.trie, config.offline, config.cache_min_freq, "offline", 0);
    p.cache = std::make_shared<const CacheSnapshot>(std::move(w.snapshot));
  } else {
    auto empty = std::make_shared<CacheSnapshot>();
    empty->trie_version = p.trie->version();
    p.cache = std::move(empty);
  }
  return p;
}

}  // namespace adgr::testing
