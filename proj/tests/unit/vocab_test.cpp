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

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "adgr/synthetic.hpp"
#include "adgr/vocab.hpp"

namespace adgr {
namespace {

TEST(VocabTest, BuildsSortedIdsAfterReserved) {
  const std::vector<std::string> corpus = {"buy flowers", "flower shop"};
  const auto v = Vocabulary::build(corpus);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(0), "<END>");
  EXPECT_EQ(v.token(1), "<UNK>");
  EXPECT_EQ(v.token(2), "buy");
  EXPECT_EQ(v.token(3), "flower");
  EXPECT_EQ(v.token(4), "flowers");
  EXPECT_EQ(v.token(5), "shop");
  EXPECT_NE(v.end_id(), v.unk_id());
  EXPECT_FALSE(v.find("<END>").has_value());
  EXPECT_FALSE(v.find("<UNK>").has_value());
}

TEST(VocabTest, EmptyCorpusIsRejected) {
  EXPECT_THROW(Vocabulary::build(std::vector<std::string>{}), ConfigError);
  EXPECT_THROW(Vocabulary::build(std::vector<std::string>{"   ", "\t"}), ConfigError);
}

TEST(VocabTest, TokenizeKnownAndUnknown) {
  const std::vector<std::string> corpus = {"buy flowers", "flower shop"};
  const auto v = Vocabulary::build(corpus);
  EXPECT_EQ(v.tokenize("buy flowers"), (TokenSeq{*v.find("buy"), *v.find("flowers")}));
  EXPECT_EQ(v.tokenize("buy roses"), (TokenSeq{*v.find("buy"), v.unk_id()}));
  EXPECT_EQ(v.tokenize("  BUY   Flowers "), v.tokenize("buy flowers"));
  EXPECT_THROW(v.tokenize(""), InvalidInput);
  EXPECT_THROW(v.tokenize(" \t\n "), InvalidInput);
}

TEST(VocabTest, DetokenizeRejectsReservedIds) {
  const std::vector<std::string> corpus = {"buy flowers"};
  const auto v = Vocabulary::build(corpus);
  EXPECT_EQ(v.detokenize(TokenSeq{*v.find("buy"), *v.find("flowers")}), "buy flowers");
  EXPECT_THROW(v.detokenize(TokenSeq{v.unk_id()}), InvalidInput);
  EXPECT_THROW(v.detokenize(TokenSeq{*v.find("buy"), v.end_id()}), InvalidInput);
  EXPECT_THROW(v.detokenize(TokenSeq{99}), InvalidInput);
}

TEST(VocabTest, UnicodeWordSegmentation) {
  const std::vector<std::string> corpus = {"Mother's Day flowers!", "鲜花 配送", "e-mail"};
  const auto v = Vocabulary::build(corpus);
  EXPECT_TRUE(v.find("mother's").has_value());
  EXPECT_TRUE(v.find("鲜").has_value());
  EXPECT_TRUE(v.find("花").has_value());
  EXPECT_TRUE(v.find("e").has_value());
  EXPECT_TRUE(v.find("mail").has_value());
  EXPECT_FALSE(v.find("flowers!").has_value());
  EXPECT_EQ(v.normalize("  MOTHER'S   day, Flowers "), "mother's day flowers");
  EXPECT_EQ(v.normalize("鲜花配送"), "鲜 花 配 送");
}

TEST(VocabTest, WhitespaceSchemeKeepsPunctuation) {
  const std::vector<std::string> corpus = {"Buy flowers!", "e-mail"};
  const auto v = Vocabulary::build(corpus, TokenizationScheme::kWhitespace);
  EXPECT_TRUE(v.find("flowers!").has_value());
  EXPECT_TRUE(v.find("e-mail").has_value());
  EXPECT_EQ(v.size(), 5u);
}

TEST(VocabTest, OrderInsensitive) {
  std::vector<std::string> corpus = {"buy flowers", "flower shop", "cheap flights", "buy flowers", "shop"};
  const auto a = Vocabulary::build(corpus);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(corpus.begin(), corpus.end(), rng);
    EXPECT_EQ(Vocabulary::build(corpus), a);
  }
}

TEST(VocabTest, SizeMatchesHashSetDedupOnLargeCorpus) {
  std::mt19937_64 rng(11);
  const auto words = synthetic::make_words(60000, rng);
  std::vector<std::string> corpus;
  corpus.reserve(2000000);
  std::unordered_set<std::string> oracle;
  std::size_t token_count = 0;
  while (corpus.size() < 2000000) {
    const std::size_t len = 2 + rng() % 3;
    std::string text;
    for (std::size_t k = 0; k < len; ++k) {
      const auto& w = words[rng() % words.size()];
      if (k) text += ' ';
      text += w;
      oracle.insert(w);
    }
    token_count += len;
    corpus.push_back(std::move(text));
  }
  EXPECT_NEAR(static_cast<double>(token_count) / corpus.size(), 3.0, 0.01);
  const auto v = Vocabulary::build(corpus);
  EXPECT_EQ(v.size(), oracle.size() + 2);
}

TEST(VocabTest, RoundTripOnRandomInVocabTexts) {
  const auto fixture = synthetic::make_fixture_corpus();
  const auto v = Vocabulary::build(fixture.ci_texts);
  for (const auto& ci : fixture.ci_texts) EXPECT_EQ(v.detokenize(v.tokenize(ci)), v.normalize(ci));

  std::mt19937_64 rng(5);
  std::vector<std::string> tokens;
  for (TokenId id = 2; id < static_cast<TokenId>(v.size()); ++id) tokens.push_back(v.token(id));
  const char* seps[] = {" ", "  ", "\t", " , ", "; "};
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    const std::size_t len = 1 + rng() % 6;
    for (std::size_t k = 0; k < len; ++k) {
      std::string t = tokens[rng() % tokens.size()];
      if (rng() % 2) std::transform(t.begin(), t.end(), t.begin(), [](char c) { return std::toupper(c); });
      text += (k ? seps[rng() % std::size(seps)] : "") + t;
    }
    const auto seq = v.tokenize(text);
    EXPECT_EQ(std::count(seq.begin(), seq.end(), v.unk_id()), 0) << text;
    EXPECT_EQ(v.detokenize(seq), v.normalize(text)) << text;
  }
}

TEST(VocabTest, SaveLoadRoundTrip) {
  const std::vector<std::string> corpus = {"buy flowers", "mother's day flowers", "鲜花"};
  const auto v = Vocabulary::build(corpus);
  std::stringstream ss;
  v.save(ss);
  EXPECT_EQ(ss.str().substr(0, 12), "<END>\n<UNK>\n");
  const auto back = Vocabulary::load(ss);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.tokenize("buy flowers"), v.tokenize("buy flowers"));
}

TEST(VocabTest, LoadRejectsMalformedFiles) {
  std::stringstream missing("buy\nflowers\n");
  EXPECT_THROW(Vocabulary::load(missing), ConfigError);
  std::stringstream dup("<END>\n<UNK>\nbuy\nbuy\n");
  EXPECT_THROW(Vocabulary::load(dup), ConfigError);
  std::stringstream empty("");
  EXPECT_THROW(Vocabulary::load(empty), ConfigError);
}

TEST(TextTest, Utf8DecodeHandlesMalformedInput) {
  EXPECT_EQ(text::decode_utf8("a\xC3\xA9"), std::u32string(U"aé"));
  EXPECT_EQ(text::decode_utf8("\xC3"), std::u32string(1, text::kReplacementChar));
  EXPECT_EQ(text::decode_utf8("\xE2\x82"), std::u32string(2, text::kReplacementChar));
  EXPECT_EQ(text::decode_utf8("\xC0\xAF"), std::u32string(2, text::kReplacementChar));
  EXPECT_EQ(text::encode_utf8(text::decode_utf8("鲜花 ünïcödé")), "鲜花 ünïcödé");
}

}  // namespace
}  // namespace adgr
