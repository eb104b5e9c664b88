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

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "adgr/io.hpp"
#include "adgr/query_cache.hpp"
#include "adgr/synthetic.hpp"
#include "support/pipeline.hpp"

namespace adgr {
namespace {

const testing::Pipeline& fixture() {
  static const auto p = testing::build_pipeline(synthetic::make_fixture_corpus(), {}, false);
  return p;
}

TEST(NormalizeQueryTest, Examples) {
  EXPECT_EQ(normalize_query("  Buy  Flowers "), "buy flowers");
  EXPECT_EQ(normalize_query("buy flowers"), "buy flowers");
  EXPECT_EQ(normalize_query("\tBUY\n\nflowers\r"), "buy flowers");
  EXPECT_EQ(normalize_query("   "), "");
  EXPECT_EQ(normalize_query("Mother's  Day"), "mother's day");
}

TEST(NormalizeQueryTest, IdempotentOnRandomStrings) {
  std::mt19937_64 rng(307);
  const std::vector<std::string> pieces = {"a", "B", " ", "  ", "\t", "\n", "é", "É", "鲜", "'", "-", "Z9", "\xC3",
                                           "\xFF", "　", "Ω"};
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    const std::size_t n = rng() % 20;
    for (std::size_t k = 0; k < n; ++k) s += pieces[rng() % pieces.size()];
    const auto once = normalize_query(s);
    EXPECT_EQ(normalize_query(once), once);
    EXPECT_EQ(once.find("  "), std::string::npos);
    if (!once.empty()) {
      EXPECT_NE(once.front(), ' ');
      EXPECT_NE(once.back(), ' ');
    }
  }
}

TEST(WarmCacheTest, SingleQueryMatchesDirectDecode) {
  const auto& p = fixture();
  const std::vector<HeadQuery> head = {{"Buy Flowers", 10}};
  const auto w = warm_cache(head, *p.scorer, *p.trie);
  ASSERT_EQ(w.snapshot.entries.size(), 1u);
  EXPECT_EQ(*w.snapshot.find("buy flowers"),
            constrained_beam_search(*p.scorer, *p.trie, "buy flowers", DecodeParams::offline()));
  EXPECT_EQ(w.snapshot.profile, "offline");
  EXPECT_EQ(w.snapshot.trie_version, p.trie->version());
}

TEST(WarmCacheTest, DuplicatesCollapse) {
  const auto& p = fixture();
  const std::vector<HeadQuery> head = {{"buy flowers", 10}, {"  BUY flowers", 5}, {"cheap flights", 3}};
  const auto w = warm_cache(head, *p.scorer, *p.trie);
  EXPECT_EQ(w.snapshot.entries.size(), 2u);
  EXPECT_EQ(w.report.duplicates, 1u);
  EXPECT_EQ(w.report.stored, 2u);
}

TEST(WarmCacheTest, EntriesEqualFreshDecodes) {
  const auto& p = fixture();
  const auto corpus = synthetic::make_fixture_corpus();
  std::mt19937_64 rng(311);
  std::vector<HeadQuery> head;
  for (int i = 0; i < 100; ++i) head.push_back({corpus.pairs[rng() % corpus.pairs.size()].context, 1});
  const auto w = warm_cache(head, *p.scorer, *p.trie);
  for (const auto& [q, cis] : w.snapshot.entries) {
    const auto fresh = constrained_beam_search(*p.scorer, *p.trie, q, DecodeParams::offline());
    EXPECT_EQ(io::cis_to_json(cis).dump(), io::cis_to_json(fresh).dump()) << q;
  }
  EXPECT_EQ(warm_cache(head, *p.scorer, *p.trie, DecodeParams::offline(), 0, "offline", 5).snapshot.entries,
            warm_cache(head, *p.scorer, *p.trie, DecodeParams::offline(), 0, "offline", 5).snapshot.entries);
}

TEST(WarmCacheTest, FailuresAreReportedAndSkipped) {
  const auto& p = fixture();
  DecodeParams tiny = DecodeParams::offline();
  tiny.max_len = 1;  // every fixture CI has at least two tokens
  const std::vector<HeadQuery> head = {{"buy flowers", 10}, {"  ", 4}};
  const auto w = warm_cache(head, *p.scorer, *p.trie, tiny);
  EXPECT_EQ(w.report.failures.size(), 1u);
  EXPECT_EQ(w.snapshot.entries.size(), 1u);
  EXPECT_TRUE(w.snapshot.find("buy flowers")->empty());
  EXPECT_THROW(warm_cache(std::vector<HeadQuery>{}, *p.scorer, *p.trie), ConfigError);

  const auto thresholded = warm_cache(std::vector<HeadQuery>{{"buy flowers", 10}, {"cheap flights", 2}}, *p.scorer,
                                      *p.trie, DecodeParams::offline(), 5);
  EXPECT_EQ(thresholded.snapshot.entries.size(), 1u);
  EXPECT_EQ(thresholded.report.below_min_freq, 1u);
}

TEST(QueryCacheTest, HitsAndMissesAreCounted) {
  const auto& p = fixture();
  auto w = warm_cache(std::vector<HeadQuery>{{"buy flowers", 10}}, *p.scorer, *p.trie);
  const auto stored = *w.snapshot.find("buy flowers");
  QueryCache cache(std::make_shared<const CacheSnapshot>(std::move(w.snapshot)));
  const auto hit = cache.get(" Buy FLOWERS ");
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(*hit, stored);
  EXPECT_FALSE(cache.get("unseen query").has_value());
  const auto st = cache.stats();
  EXPECT_EQ(st.lookups, 2u);
  EXPECT_EQ(st.hits, 1u);
  EXPECT_EQ(st.misses(), 1u);
  EXPECT_DOUBLE_EQ(st.hit_rate(), 0.5);
  cache.reset_stats();
  EXPECT_EQ(cache.stats().lookups, 0u);
  EXPECT_DOUBLE_EQ(cache.stats().hit_rate(), 0.0);
}

TEST(QueryCacheTest, CountersStayConsistentUnderConcurrency) {
  auto snap = std::make_shared<CacheSnapshot>();
  snap->entries["hot"] = {{CiId{0}, -1.0}};
  QueryCache cache(snap);
  std::atomic<bool> stop{false};
  std::atomic<int> bad{0};
  std::thread watcher([&] {
    std::uint64_t last_l = 0, last_h = 0;
    while (!stop.load()) {
      const auto s = cache.stats();
      if (s.hits > s.lookups || s.lookups < last_l || s.hits < last_h) ++bad;
      last_l = s.lookups;
      last_h = s.hits;
    }
  });
  std::vector<std::thread> workers;
  for (int t = 0; t < 8; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < 20000; ++i) cache.get((i + t) % 3 ? "hot" : "cold");
    });
  }
  for (auto& w : workers) w.join();
  stop = true;
  watcher.join();
  EXPECT_EQ(bad.load(), 0);
  const auto s = cache.stats();
  EXPECT_EQ(s.lookups, 160000u);
  EXPECT_EQ(s.hits + s.misses(), s.lookups);
}

TEST(QueryCacheTest, SaveLoadRoundTripIsByteExact) {
  const auto& p = fixture();
  const auto corpus = synthetic::make_fixture_corpus();
  const auto w = warm_cache(corpus.head_queries, *p.scorer, *p.trie, DecodeParams::offline(), 0, "offline", 1234);
  const auto dir = fs::temp_directory_path() / "adgr-cache-io-test";
  fs::remove_all(dir);
  io::save_cache(dir, w.snapshot);
  const auto back = io::load_cache(dir);
  EXPECT_EQ(back.entries, w.snapshot.entries);
  EXPECT_EQ(back.profile, "offline");
  EXPECT_EQ(back.trie_version, p.trie->version());
  EXPECT_EQ(back.built_at, 1234);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace adgr
