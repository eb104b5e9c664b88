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

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "adgr/decoder.hpp"
#include "support/oracles.hpp"

namespace adgr {
namespace {

DecodeParams exhaustive(const CiTrie& trie, double temperature) {
  DecodeParams p;
  p.beam_size = static_cast<int>(trie.ci_count());
  p.max_len = trie.max_depth();
  p.temperature = temperature;
  p.truncation_margin.reset();
  return p;
}

TableScorer random_table(std::mt19937_64& rng, std::size_t v, const std::vector<oracle::Seq>& cis,
                         const std::string& ctx) {
  TableScorer s(v, oracle::random_distribution(rng, v));
  for (const auto& c : cis) {
    for (std::size_t k = 0; k <= c.size(); ++k) s.set(ctx, oracle::Seq(c.begin(), c.begin() + k),
                                                    oracle::random_distribution(rng, v));
  }
  return s;
}

TEST(DecodeParamsTest, ProfilesAndValidation) {
  EXPECT_EQ(DecodeParams::offline().beam_size, 256);
  EXPECT_EQ(DecodeParams::offline().max_len, 6);
  EXPECT_DOUBLE_EQ(DecodeParams::offline().temperature, 0.8);
  EXPECT_EQ(DecodeParams::online().beam_size, 50);
  EXPECT_EQ(DecodeParams::online().max_len, 4);
  EXPECT_DOUBLE_EQ(DecodeParams::online().temperature, 0.7);
  EXPECT_DOUBLE_EQ(*DecodeParams::online().truncation_margin, 2.0);
  DecodeParams p;
  p.beam_size = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.max_len = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.temperature = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.truncation_margin = -0.5;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(TemperTest, IdentityAtOneAndUniformStaysUniform) {
  std::mt19937_64 rng(61);
  const auto v = oracle::random_distribution(rng, 20);
  const auto t = temper(v, 1.0);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(t[i], v[i], 1e-12);
  const std::vector<double> u(7, -std::log(7.0));
  for (double tau : {0.1, 0.7, 0.8, 2.0, 10.0}) {
    for (double x : temper(u, tau)) EXPECT_NEAR(x, -std::log(7.0), 1e-12);
  }
  EXPECT_THROW(temper(v, 0.0), ConfigError);
  EXPECT_THROW(temper(v, -1.0), ConfigError);
}

TEST(TemperTest, PreservesArgmaxAndNormalization) {
  std::mt19937_64 rng(67);
  for (int i = 0; i < 1000; ++i) {
    const auto v = oracle::random_distribution(rng, 2 + rng() % 50, 0.5 + (rng() % 10));
    const auto want = std::max_element(v.begin(), v.end()) - v.begin();
    for (double tau : {0.1, 0.7, 0.8, 2.0}) {
      const auto t = temper(v, tau);
      EXPECT_EQ(std::max_element(t.begin(), t.end()) - t.begin(), want);
      EXPECT_NO_THROW(check_normalized(t, 1e-9));
    }
  }
}

TEST(TruncationTest, ThresholdArithmetic) {
  const std::vector<Candidate> c = {{2, -0.1}, {3, -0.5}, {4, -2.0}};
  EXPECT_EQ(apply_truncation(c, 1.0), (std::vector<Candidate>{{2, -0.1}, {3, -0.5}}));
  EXPECT_EQ(apply_truncation(c, 0.0), (std::vector<Candidate>{{2, -0.1}}));
  EXPECT_EQ(apply_truncation(c, std::numeric_limits<double>::infinity()), c);
  const std::vector<Candidate> tie = {{2, -0.3}, {3, -0.3}, {4, -0.4}};
  EXPECT_EQ(apply_truncation(tie, 0.0), (std::vector<Candidate>{{2, -0.3}, {3, -0.3}}));
  EXPECT_TRUE(apply_truncation(std::vector<Candidate>{}, 1.0).empty());
}

TEST(TruncationTest, ArgmaxAlwaysSurvives) {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 1000; ++i) {
    std::vector<Candidate> c;
    const auto v = oracle::random_distribution(rng, 1 + rng() % 30);
    for (std::size_t k = 0; k < v.size(); ++k) c.push_back({static_cast<TokenId>(k), v[k]});
    const double margin = static_cast<double>(rng() % 50) / 10.0;
    const auto kept = apply_truncation(c, margin);
    const double best = *std::max_element(v.begin(), v.end());
    ASSERT_FALSE(kept.empty());
    for (const auto& k : kept) EXPECT_GE(k.logprob, best - margin);
    EXPECT_EQ(kept.size(), std::count_if(c.begin(), c.end(), [&](const Candidate& x) {
                return x.logprob >= best - margin;
              }));
  }
}

TEST(DecoderTest, SingleCiTrie) {
  const oracle::Seq ci = {2, 3};
  const auto trie = CiTrie::build(oracle::as_inputs({ci}));
  std::mt19937_64 rng(73);
  const auto scorer = random_table(rng, 5, {ci}, "q");
  DecodeParams p;
  p.beam_size = 1;
  p.temperature = 1.0;
  const auto out = constrained_beam_search(scorer, trie, "q", p);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ci, CiId{0});
  EXPECT_NEAR(out[0].score, sequence_logprob(scorer, "q", ci), 1e-12);
}

TEST(DecoderTest, UniformTiesOrderByCiId) {
  const auto trie = CiTrie::build(oracle::as_inputs({{4}, {2}, {3}}));
  const auto scorer = TableScorer::uniform(5);
  DecodeParams p;
  p.beam_size = 3;
  p.temperature = 1.0;
  const auto out = constrained_beam_search(scorer, trie, "q", p);
  ASSERT_EQ(out.size(), 3u);
  for (std::uint32_t i = 0; i < 3; ++i) EXPECT_EQ(out[i].ci, CiId{i});
  EXPECT_EQ(out[0].score, out[1].score);
  EXPECT_EQ(out[1].score, out[2].score);
  EXPECT_NEAR(out[0].score, 2 * std::log(0.2), 1e-12);
}

TEST(DecoderTest, MatchesEnumerationOnSmallSets) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = 5 + rng() % 6;
    const auto cis = oracle::dedup_sorted(oracle::random_ci_set(rng, 20, 4, v));
    const auto trie = CiTrie::build(oracle::as_inputs(cis));
    const auto scorer = random_table(rng, v, cis, "q");
    for (double tau : {0.7, 1.0}) {
      for (bool norm : {false, true}) {
        auto p = exhaustive(trie, tau);
        p.length_normalize = norm;
        EXPECT_EQ(constrained_beam_search(scorer, trie, "q", p),
                  oracle::enumerate_and_sort(scorer, cis, "q", tau, p.max_len, cis.size(), norm));
      }
    }
  }
}

TEST(DecoderTest, MaxLenMakesLongerCisUnreachable) {
  std::mt19937_64 rng(83);
  const auto cis = oracle::dedup_sorted(oracle::random_ci_set(rng, 40, 5, 8));
  const auto trie = CiTrie::build(oracle::as_inputs(cis));
  const auto scorer = random_table(rng, 8, cis, "q");
  for (int t = 1; t <= 5; ++t) {
    auto p = exhaustive(trie, 0.8);
    p.max_len = t;
    const auto out = constrained_beam_search(scorer, trie, "q", p);
    EXPECT_EQ(out, oracle::enumerate_and_sort(scorer, cis, "q", 0.8, t, cis.size()));
    for (const auto& sc : out) EXPECT_LE(static_cast<int>(cis[sc.ci.value].size()), t);
  }
}

TEST(DecoderTest, AdversarialScorerStaysInSet) {
  // The scorer strongly prefers token 9 and END everywhere, but 9 never
  // occurs in a CI and END is legal only at terminal nodes.
  const std::vector<oracle::Seq> cis = {{2, 3, 4}, {5, 6}, {7}};
  const auto trie = CiTrie::build(oracle::as_inputs(cis));
  std::vector<double> lp(10, std::log(1e-4));
  lp[9] = std::log(0.5);
  lp[0] = std::log(0.5 - 8e-4);
  TableScorer scorer(10, log_softmax(lp));
  for (int b : {1, 2, 5}) {
    DecodeParams p;
    p.beam_size = b;
    const auto out = constrained_beam_search(scorer, trie, "q", p);
    ASSERT_FALSE(out.empty());
    for (const auto& sc : out) EXPECT_TRUE(trie.valid(sc.ci));
  }
}

TEST(DecoderTest, OutputIsSortedBoundedAndDeterministic) {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t v = 6 + rng() % 10;
    const auto cis = oracle::dedup_sorted(oracle::random_ci_set(rng, 80, 6, v));
    const auto trie = CiTrie::build(oracle::as_inputs(cis));
    const auto scorer = random_table(rng, v, cis, "q");
    DecodeParams p;
    p.beam_size = 1 + static_cast<int>(rng() % 16);
    p.max_len = 1 + static_cast<int>(rng() % 6);
    p.temperature = 0.5 + static_cast<double>(rng() % 10) / 10.0;
    p.truncation_margin = static_cast<double>(rng() % 30) / 10.0;
    const auto out = constrained_beam_search(scorer, trie, "q", p);
    EXPECT_LE(out.size(), static_cast<std::size_t>(p.beam_size));
    for (std::size_t i = 1; i < out.size(); ++i) {
      EXPECT_TRUE(out[i - 1].score > out[i].score ||
                  (out[i - 1].score == out[i].score && out[i - 1].ci < out[i].ci));
    }
    std::set<CiId> unique;
    for (const auto& sc : out) {
      EXPECT_LE(sc.score, 0.0);
      EXPECT_TRUE(unique.insert(sc.ci).second);
    }
    EXPECT_EQ(constrained_beam_search(scorer, trie, "q", p), out);
  }
}

TEST(DecoderTest, ScoresAreTemperedSequenceLogprobs) {
  std::mt19937_64 rng(97);
  const auto cis = oracle::dedup_sorted(oracle::random_ci_set(rng, 60, 4, 10));
  const auto trie = CiTrie::build(oracle::as_inputs(cis));
  const auto scorer = random_table(rng, 10, cis, "q");
  DecodeParams p;
  p.beam_size = 8;
  p.temperature = 0.7;
  for (const auto& sc : constrained_beam_search(scorer, trie, "q", p)) {
    EXPECT_EQ(sc.score, oracle::tempered_sequence_score(scorer, "q", cis[sc.ci.value], 0.7));
  }
}

// Wider beams keep every CI of a narrower beam when the narrower beam can
// hold the whole set; for smaller beams the property does not hold in
// general (see the counterexample below).
TEST(DecoderTest, BeamMonotonicityOnceBeamCoversTheSet) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto cis = oracle::dedup_sorted(oracle::random_ci_set(rng, 15, 3, 7));
    const auto trie = CiTrie::build(oracle::as_inputs(cis));
    const auto scorer = random_table(rng, 7, cis, "q");
    auto p = exhaustive(trie, 0.8);
    std::set<CiId> prev;
    for (int b = static_cast<int>(cis.size()); b <= static_cast<int>(cis.size()) + 4; ++b) {
      p.beam_size = b;
      std::set<CiId> now;
      for (const auto& sc : constrained_beam_search(scorer, trie, "q", p)) now.insert(sc.ci);
      EXPECT_TRUE(std::includes(now.begin(), now.end(), prev.begin(), prev.end()));
      prev = std::move(now);
    }
  }
}

TEST(DecoderTest, NarrowBeamCanFindCisAWiderBeamDrops) {
  // CIs AX, BX, BY. Greedy (b=1) commits to A at step one and finishes AX;
  // b=2 keeps both first tokens, and at step two BX and BY outrank AX.
  const TokenId A = 2, B = 3, X = 4, Y = 5;
  const auto trie = CiTrie::build(oracle::as_inputs({{A, X}, {B, X}, {B, Y}}));
  auto dist = [](std::vector<std::pair<TokenId, double>> ps) {
    std::vector<double> p(6, 1e-9);
    for (auto [t, q] : ps) p[static_cast<std::size_t>(t)] = q;
    std::vector<double> lp;
    for (double q : p) lp.push_back(std::log(q));
    return log_softmax(lp);
  };
  TableScorer s = TableScorer::uniform(6);
  s.set("q", oracle::Seq{}, dist({{A, 0.6}, {B, 0.4}}));
  s.set("q", oracle::Seq{A}, dist({{X, 0.01}, {Y, 0.99}}));  // AY is not a CI
  s.set("q", oracle::Seq{B}, dist({{X, 0.5}, {Y, 0.5}}));
  s.set("q", oracle::Seq{A, X}, dist({{Vocabulary::kEndId, 1.0}}));
  s.set("q", oracle::Seq{B, X}, dist({{Vocabulary::kEndId, 1.0}}));
  s.set("q", oracle::Seq{B, Y}, dist({{Vocabulary::kEndId, 1.0}}));
  DecodeParams p;
  p.temperature = 1.0;
  p.truncation_margin.reset();
  p.beam_size = 1;
  const auto narrow = constrained_beam_search(s, trie, "q", p);
  p.beam_size = 2;
  const auto wide = constrained_beam_search(s, trie, "q", p);
  ASSERT_EQ(narrow.size(), 1u);
  EXPECT_EQ(trie.tokens(narrow[0].ci), (oracle::Seq{A, X}));
  ASSERT_EQ(wide.size(), 2u);
  EXPECT_EQ(trie.tokens(wide[0].ci), (oracle::Seq{B, X}));
  EXPECT_EQ(trie.tokens(wide[1].ci), (oracle::Seq{B, Y}));
}

TEST(DecoderTest, EmptyTrieAndFailingScorer) {
  const CiTrie empty;
  EXPECT_THROW(constrained_beam_search(TableScorer::uniform(4), empty, "q", DecodeParams{}), ConfigError);

  struct Failing final : Scorer {
    std::size_t vocab_size() const override { return 4; }
    ScoringContext prepare(std::string_view) const override { return {}; }
    void distribution(const ScoringContext&, std::span<const TokenId>, LogDistribution&) const override {
      throw std::runtime_error("backend unavailable");
    }
  };
  const auto trie = CiTrie::build(oracle::as_inputs({{2}}));
  EXPECT_THROW(constrained_beam_search(Failing{}, trie, "q", DecodeParams{}), DecodeError);
}

TEST(DecoderTest, DeadlineReturnsFinishedSoFar) {
  std::mt19937_64 rng(103);
  const auto cis = oracle::dedup_sorted(oracle::random_ci_set(rng, 50, 4, 8));
  const auto trie = CiTrie::build(oracle::as_inputs(cis));
  const auto scorer = random_table(rng, 8, cis, "q");
  const auto past = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  const auto out = constrained_beam_search_until<>(scorer, trie, "q", DecodeParams{}, past);
  EXPECT_TRUE(out.deadline_hit);
  EXPECT_TRUE(out.cis.empty());
  const auto later = std::chrono::steady_clock::now() + std::chrono::hours(1);
  const auto full = constrained_beam_search_until<>(scorer, trie, "q", DecodeParams{}, later);
  EXPECT_FALSE(full.deadline_hit);
  EXPECT_EQ(full.cis, constrained_beam_search(scorer, trie, "q", DecodeParams{}));
}

}  // namespace
}  // namespace adgr
