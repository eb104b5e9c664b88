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
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adgr/error.hpp"
#include "adgr/vocab.hpp"

namespace adgr {

// Dense identifier of a CI within one trie build.
struct CiId {
  std::uint32_t value = 0;
  friend auto operator<=>(const CiId&, const CiId&) = default;
};

struct CiInput {
  std::string text;
  TokenSeq tokens;
};

struct TrieBuildOptions {
  // CIs occurring fewer times than this in the build input are dropped.
  std::size_t min_support = 1;
};

// Immutable prefix trie over tokenized CIs. Children are kept in a flat
// CSR layout sorted by token id, so a child lookup costs O(log fanout).
class CiTrie {
 public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kRoot = 0;
  static constexpr std::uint32_t kNoCi = UINT32_MAX;

  CiTrie() = default;

  // Duplicate token sequences collapse to one CI. CiIds follow the
  // lexicographic order of the token sequences. Among texts that map to
  // the same sequence the smallest is canonical and the rest are aliases.
  static CiTrie build(std::span<const CiInput> cis, TrieBuildOptions opts = {}) {
    if (cis.empty()) throw ConfigError("build_trie: empty CI list");
    std::map<TokenSeq, std::pair<std::size_t, std::vector<std::string>>> groups;
    for (std::size_t i = 0; i < cis.size(); ++i) {
      const auto& c = cis[i];
      if (c.tokens.empty()) throw InvalidInput("build_trie: CI '" + c.text + "' has no tokens");
      for (TokenId id : c.tokens) {
        if (id < 0 || Vocabulary::is_reserved(id)) {
          throw InvalidInput("build_trie: CI '" + c.text + "' contains reserved or unknown token");
        }
      }
      auto& g = groups[c.tokens];
      ++g.first;
      g.second.push_back(c.text);
    }

    CiTrie trie;
    std::vector<std::vector<std::pair<TokenId, NodeId>>> children(1);
    trie.terminal_.push_back(kNoCi);
    std::uint64_t fp = 1469598103934665603ULL;
    auto mix = [&fp](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        fp ^= (v >> (8 * b)) & 0xFF;
        fp *= 1099511628211ULL;
      }
    };
    for (auto& [seq, group] : groups) {
      if (group.first < opts.min_support) continue;
      const auto id = static_cast<std::uint32_t>(trie.tokens_.size());
      NodeId node = kRoot;
      for (TokenId tok : seq) {
        auto& kids = children[node];
        if (!kids.empty() && kids.back().first == tok) {
          node = kids.back().second;
        } else {
          const auto fresh = static_cast<NodeId>(children.size());
          kids.emplace_back(tok, fresh);
          children.emplace_back();
          trie.terminal_.push_back(kNoCi);
          node = fresh;
        }
      }
      trie.terminal_[node] = id;
      auto& texts = group.second;
      std::sort(texts.begin(), texts.end());
      texts.erase(std::unique(texts.begin(), texts.end()), texts.end());

      // Ids alone would collide across vocabularies, so the text is mixed in.
      mix(seq.size());
      for (TokenId tok : seq) mix(static_cast<std::uint64_t>(tok));
      mix(texts.front().size());
      for (unsigned char ch : texts.front()) mix(ch);
      for (std::size_t k = 1; k < texts.size(); ++k) trie.aliases_.emplace_back(texts[k], CiId{id});
      trie.texts_.push_back(texts.front());
      trie.max_depth_ = std::max(trie.max_depth_, static_cast<int>(seq.size()));
      trie.tokens_.push_back(seq);
    }
    if (trie.tokens_.empty()) throw ConfigError("build_trie: no CI meets the minimum support");

    trie.offsets_.reserve(children.size() + 1);
    trie.offsets_.push_back(0);
    for (const auto& kids : children) {
      for (const auto& [tok, child] : kids) {
        trie.child_tokens_.push_back(tok);
        trie.child_nodes_.push_back(child);
      }
      trie.offsets_.push_back(static_cast<std::uint32_t>(trie.child_tokens_.size()));
    }
    trie.version_ = fp & ((1ULL << 53) - 1);
    return trie;
  }

  bool empty() const { return tokens_.empty(); }
  std::size_t ci_count() const { return tokens_.size(); }
  std::size_t node_count() const { return terminal_.size(); }
  int max_depth() const { return max_depth_; }

  // Content fingerprint of the CI set; equal sets give equal versions.
  std::uint64_t version() const { return version_; }

  bool valid(CiId id) const { return id.value < tokens_.size(); }
  const TokenSeq& tokens(CiId id) const { return tokens_.at(id.value); }
  const std::string& text(CiId id) const { return texts_.at(id.value); }
  const std::vector<std::pair<std::string, CiId>>& aliases() const { return aliases_; }

  std::span<const TokenId> child_tokens(NodeId node) const {
    return std::span<const TokenId>(child_tokens_).subspan(offsets_[node], offsets_[node + 1] - offsets_[node]);
  }
  std::span<const NodeId> child_nodes(NodeId node) const {
    return std::span<const NodeId>(child_nodes_).subspan(offsets_[node], offsets_[node + 1] - offsets_[node]);
  }
  std::optional<CiId> terminal(NodeId node) const {
    if (terminal_[node] == kNoCi) return std::nullopt;
    return CiId{terminal_[node]};
  }

  std::optional<NodeId> child(NodeId node, TokenId tok) const {
    const auto toks = child_tokens(node);
    auto it = std::lower_bound(toks.begin(), toks.end(), tok);
    if (it == toks.end() || *it != tok) return std::nullopt;
    return child_nodes(node)[static_cast<std::size_t>(it - toks.begin())];
  }

  std::optional<NodeId> walk(std::span<const TokenId> prefix) const {
    if (empty()) return std::nullopt;
    NodeId node = kRoot;
    for (TokenId tok : prefix) {
      auto next = child(node, tok);
      if (!next) return std::nullopt;
      node = *next;
    }
    return node;
  }

  // Legal continuations of `prefix`, sorted; END leads when the prefix is
  // itself a CI.
  std::vector<TokenId> allowed_next(std::span<const TokenId> prefix) const {
    const auto node = walk(prefix);
    if (!node) throw InvalidPrefix("allowed_next: prefix is not a path in the CI trie");
    std::vector<TokenId> out;
    const auto toks = child_tokens(*node);
    out.reserve(toks.size() + 1);
    if (terminal_[*node] != kNoCi) out.push_back(Vocabulary::kEndId);
    out.insert(out.end(), toks.begin(), toks.end());
    return out;
  }

  std::optional<CiId> resolve(std::span<const TokenId> seq) const {
    const auto node = walk(seq);
    if (!node) return std::nullopt;
    return terminal(*node);
  }

 private:
  std::vector<TokenSeq> tokens_;
  std::vector<std::string> texts_;
  std::vector<std::pair<std::string, CiId>> aliases_;
  std::vector<std::uint32_t> offsets_;
  std::vector<TokenId> child_tokens_;
  std::vector<NodeId> child_nodes_;
  std::vector<std::uint32_t> terminal_;
  int max_depth_ = 0;
  std::uint64_t version_ = 0;
};

}  // namespace adgr

template <>
struct std::hash<adgr::CiId> {
  std::size_t operator()(const adgr::CiId& id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
