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

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adgr/error.hpp"
#include "adgr/text.hpp"

namespace adgr {

using TokenId = std::int32_t;

// Token ids of one CI or query, END excluded.
using TokenSeq = std::vector<TokenId>;

enum class TokenizationScheme { kWhitespace, kUnicodeWord };

inline std::string_view scheme_name(TokenizationScheme s) {
  return s == TokenizationScheme::kWhitespace ? "whitespace" : "unicode-word";
}

inline TokenizationScheme parse_scheme(std::string_view name) {
  if (name == "whitespace") return TokenizationScheme::kWhitespace;
  if (name == "unicode-word") return TokenizationScheme::kUnicodeWord;
  throw ConfigError("unknown tokenization scheme '" + std::string(name) + "'");
}

// Bijection between surface tokens and dense ids. Ids 0 and 1 are reserved
// for END and UNK; surface tokens take ids 2.. in byte-wise sorted order,
// so the mapping depends only on the set of tokens in the corpus.
//
// Immutable once built.
class Vocabulary {
 public:
  static constexpr TokenId kEndId = 0;
  static constexpr TokenId kUnkId = 1;
  static constexpr std::string_view kEndToken = "<END>";
  static constexpr std::string_view kUnkToken = "<UNK>";

  explicit Vocabulary(TokenizationScheme scheme = TokenizationScheme::kUnicodeWord)
      : scheme_(scheme), id_to_token_{std::string(kEndToken), std::string(kUnkToken)} {}

  static Vocabulary build(std::span<const std::string> corpus,
                          TokenizationScheme scheme = TokenizationScheme::kUnicodeWord) {
    if (corpus.empty()) throw ConfigError("build_vocab: empty corpus");
    Vocabulary v(scheme);
    std::vector<std::string> tokens;
    for (const auto& text : corpus) {
      auto words = v.segment(text);
      tokens.insert(tokens.end(), std::make_move_iterator(words.begin()),
                    std::make_move_iterator(words.end()));
    }
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    if (tokens.empty()) throw ConfigError("build_vocab: corpus contains no tokens");
    v.id_to_token_.reserve(tokens.size() + 2);
    for (auto& t : tokens) v.add_token(std::move(t));
    return v;
  }

  TokenizationScheme scheme() const { return scheme_; }
  std::size_t size() const { return id_to_token_.size(); }
  TokenId end_id() const { return kEndId; }
  TokenId unk_id() const { return kUnkId; }
  static bool is_reserved(TokenId id) { return id == kEndId || id == kUnkId; }
  bool contains_id(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  std::optional<TokenId> find(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& token(TokenId id) const {
    if (!contains_id(id)) throw InvalidInput("token id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  // Surface words of `text` under this vocabulary's scheme.
  std::vector<std::string> segment(std::string_view text) const {
    return scheme_ == TokenizationScheme::kWhitespace ? text::split_whitespace(text)
                                                      : text::split_words(text);
  }

  // Canonical surface form: segmented words joined by one space.
  std::string normalize(std::string_view text) const { return text::join(segment(text)); }

  TokenSeq tokenize(std::string_view text) const {
    const auto words = segment(text);
    if (words.empty()) throw InvalidInput("tokenize: empty or whitespace-only text");
    TokenSeq out;
    out.reserve(words.size());
    for (const auto& w : words) {
      auto it = token_to_id_.find(w);
      out.push_back(it == token_to_id_.end() ? kUnkId : it->second);
    }
    return out;
  }

  std::string detokenize(std::span<const TokenId> seq) const {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const TokenId id = seq[i];
      if (is_reserved(id)) {
        throw InvalidInput("detokenize: reserved id " + std::to_string(id) + " at position " +
                           std::to_string(i));
      }
      if (i) out.push_back(' ');
      out.append(token(id));
    }
    return out;
  }

  // One token per line; the line number is the id.
  void save(std::ostream& os) const {
    for (const auto& t : id_to_token_) os << t << '\n';
  }

  static Vocabulary load(std::istream& is,
                         TokenizationScheme scheme = TokenizationScheme::kUnicodeWord) {
    Vocabulary v(scheme);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (lineno == 0 || lineno == 1) {
        const auto expect = lineno == 0 ? kEndToken : kUnkToken;
        if (line != expect) {
          throw ConfigError("vocab line " + std::to_string(lineno + 1) + ": expected reserved token " +
                            std::string(expect));
        }
      } else {
        if (line.empty()) throw ConfigError("vocab line " + std::to_string(lineno + 1) + ": empty token");
        if (v.token_to_id_.count(line)) {
          throw ConfigError("vocab line " + std::to_string(lineno + 1) + ": duplicate token '" + line + "'");
        }
        v.add_token(line);
      }
      ++lineno;
    }
    if (lineno < 2) throw ConfigError("vocab file is missing reserved tokens");
    return v;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.scheme_ == b.scheme_ && a.id_to_token_ == b.id_to_token_;
  }

 private:
  void add_token(std::string t) {
    const auto id = static_cast<TokenId>(id_to_token_.size());
    token_to_id_.emplace(t, id);
    id_to_token_.push_back(std::move(t));
  }

  TokenizationScheme scheme_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

}  // namespace adgr
