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

// Count-based reference scorer. Next-token distributions are relative
// frequencies (with add-alpha smoothing) over (context bucket, history)
// cells, which is the maximum-likelihood fit of a per-step conditional
// log-likelihood objective within this model family.
//
// Backoff chain for a context/history pair:
//   1. exact bucket: the context's word set seen verbatim during fitting
//   2. pooled: counts summed over every known context word
//   3. unconditional: history only
//   4. uniform
// A level is used when it has a count cell for the history.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adgr/error.hpp"
#include "adgr/scorer.hpp"
#include "adgr/vocab.hpp"

namespace adgr {

struct TrainingPair {
  std::string context;
  TokenSeq ci;
};

class NgramScorer final : public Scorer {
 public:
  static constexpr TokenId kBos = -1;
  static constexpr double kDefaultAlpha = 0.1;

  enum class Level : std::uint8_t { kBucket = 0, kFeature = 1, kUnconditional = 2 };

  struct CountTable {
    std::vector<std::pair<TokenId, std::uint32_t>> counts;  // sorted by id
    std::uint64_t total = 0;
    friend bool operator==(const CountTable&, const CountTable&) = default;
  };

  NgramScorer() = default;

  // Fits by counting. `order` is the number of preceding tokens each
  // step conditions on; histories shorter than that are padded with BOS.
  static NgramScorer fit(std::span<const TrainingPair> pairs, int order, double alpha,
                         const Vocabulary& vocab) {
    if (pairs.empty()) throw ConfigError("fit_ngram_scorer: no training pairs");
    if (order < 1) throw ConfigError("fit_ngram_scorer: order must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("fit_ngram_scorer: alpha must be > 0");
    NgramScorer s;
    s.order_ = order;
    s.alpha_ = alpha;
    s.vocab_size_ = vocab.size();
    s.scheme_ = vocab.scheme();

    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& ci = pairs[i].ci;
      if (ci.empty()) throw InvalidInput("fit_ngram_scorer: pair " + std::to_string(i) + " has an empty CI");
      for (TokenId id : ci) {
        if (Vocabulary::is_reserved(id) || !vocab.contains_id(id)) {
          throw InvalidInput("fit_ngram_scorer: pair " + std::to_string(i) + " contains reserved or invalid id " +
                             std::to_string(id));
        }
      }
    }

    // Context words get dense feature ids in sorted order.
    std::vector<std::vector<std::string>> words(pairs.size());
    std::vector<std::string> all;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      words[i] = s.segment(pairs[i].context);
      all.insert(all.end(), words[i].begin(), words[i].end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    for (auto& w : all) s.add_feature(std::move(w));

    std::vector<std::vector<std::int32_t>> sets(pairs.size());
    std::map<std::vector<std::int32_t>, std::int64_t> bucket_ids;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      for (const auto& w : words[i]) sets[i].push_back(s.feature_ids_.at(w));
      std::sort(sets[i].begin(), sets[i].end());
      sets[i].erase(std::unique(sets[i].begin(), sets[i].end()), sets[i].end());
      bucket_ids.emplace(sets[i], 0);
    }
    for (auto& [set, id] : bucket_ids) {
      id = static_cast<std::int64_t>(s.buckets_.size());
      s.bucket_index_.emplace(set_key(set), id);
      s.buckets_.push_back(set);
    }

    std::unordered_map<std::string, std::unordered_map<TokenId, std::uint32_t>> raw;
    std::vector<TokenId> history;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& ci = pairs[i].ci;
      const auto bucket = bucket_ids.at(sets[i]);
      for (std::size_t t = 0; t <= ci.size(); ++t) {
        s.history_of(std::span<const TokenId>(ci).first(t), history);
        const TokenId next = t < ci.size() ? ci[t] : Vocabulary::kEndId;
        ++raw[cell_key(Level::kBucket, bucket, history)][next];
        for (auto f : sets[i]) ++raw[cell_key(Level::kFeature, f, history)][next];
        ++raw[cell_key(Level::kUnconditional, 0, history)][next];
      }
    }
    s.tables_.reserve(raw.size());
    for (auto& [key, m] : raw) {
      CountTable table;
      table.counts.assign(m.begin(), m.end());
      std::sort(table.counts.begin(), table.counts.end());
      for (const auto& [id, c] : table.counts) table.total += c;
      s.tables_.emplace(key, std::move(table));
    }
    return s;
  }

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t feature_count() const { return feature_words_.size(); }
  std::size_t bucket_count() const { return buckets_.size(); }
  std::size_t table_count() const { return tables_.size(); }

  ScoringContext prepare(std::string_view context) const override {
    ScoringContext c;
    c.text = std::string(context);
    bool all_known = true;
    for (const auto& w : segment(context)) {
      auto it = feature_ids_.find(w);
      if (it == feature_ids_.end()) {
        all_known = false;
      } else {
        c.features.push_back(it->second);
      }
    }
    std::sort(c.features.begin(), c.features.end());
    c.features.erase(std::unique(c.features.begin(), c.features.end()), c.features.end());
    if (all_known) {
      auto it = bucket_index_.find(set_key(c.features));
      if (it != bucket_index_.end()) c.bucket = it->second;
    }
    return c;
  }

  void distribution(const ScoringContext& ctx, std::span<const TokenId> prefix,
                    LogDistribution& out) const override {
    thread_local std::vector<TokenId> history;
    history_of(prefix, history);
    out.support = vocab_size_;
    if (ctx.bucket >= 0) {
      if (const auto* t = find(Level::kBucket, ctx.bucket, history)) {
        fill(t->counts, t->total, out);
        return;
      }
    }
    if (!ctx.features.empty()) {
      thread_local std::vector<std::pair<TokenId, std::uint32_t>> pooled;
      pooled.clear();
      std::uint64_t total = 0;
      for (auto f : ctx.features) {
        if (const auto* t = find(Level::kFeature, f, history)) {
          pooled.insert(pooled.end(), t->counts.begin(), t->counts.end());
          total += t->total;
        }
      }
      if (total > 0) {
        std::sort(pooled.begin(), pooled.end());
        std::size_t w = 0;
        for (std::size_t r = 0; r < pooled.size(); ++r) {
          if (w > 0 && pooled[w - 1].first == pooled[r].first) {
            pooled[w - 1].second += pooled[r].second;
          } else {
            pooled[w++] = pooled[r];
          }
        }
        pooled.resize(w);
        fill(pooled, total, out);
        return;
      }
    }
    if (const auto* t = find(Level::kUnconditional, 0, history)) {
      fill(t->counts, t->total, out);
      return;
    }
    out.entries.clear();
    out.default_logprob = -std::log(static_cast<double>(vocab_size_));
  }

  // Line-oriented dump; reals are written as hex floats so a load
  // reproduces the model exactly.
  void save(std::ostream& os) const {
    os << "adgr-ngram 1\n";
    os << "order " << order_ << '\n';
    os << "alpha " << std::hexfloat << alpha_ << std::defaultfloat << '\n';
    os << "vocab_size " << vocab_size_ << '\n';
    os << "scheme " << scheme_name(scheme_) << '\n';
    os << "features " << feature_words_.size() << '\n';
    for (const auto& w : feature_words_) os << w << '\n';
    os << "buckets " << buckets_.size() << '\n';
    for (const auto& b : buckets_) {
      os << b.size();
      for (auto f : b) os << ' ' << f;
      os << '\n';
    }
    std::vector<const std::string*> keys;
    keys.reserve(tables_.size());
    for (const auto& [k, t] : tables_) keys.push_back(&k);
    std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) { return *a < *b; });
    os << "tables " << tables_.size() << '\n';
    for (const auto* k : keys) {
      const auto parsed = parse_cell_key(*k, order_);
      os << static_cast<int>(parsed.level) << ' ' << parsed.owner;
      for (auto h : parsed.history) os << ' ' << h;
      const auto& t = tables_.at(*k);
      os << ' ' << t.counts.size();
      for (const auto& [id, c] : t.counts) os << ' ' << id << ':' << c;
      os << '\n';
    }
  }

  static NgramScorer load(std::istream& is) {
    NgramScorer s;
    std::string line;
    auto next_line = [&](const char* what) -> std::string& {
      if (!std::getline(is, line)) throw ConfigError(std::string("scorer file truncated before ") + what);
      return line;
    };
    auto field = [&](const char* name) -> std::string {
      std::istringstream ls(next_line(name));
      std::string k, v;
      ls >> k >> v;
      if (k != name) throw ConfigError(std::string("scorer file: expected '") + name + "'");
      return v;
    };
    if (next_line("header") != "adgr-ngram 1") throw ConfigError("scorer file: bad header");
    s.order_ = std::stoi(field("order"));
    s.alpha_ = std::strtod(field("alpha").c_str(), nullptr);
    s.vocab_size_ = std::stoull(field("vocab_size"));
    s.scheme_ = parse_scheme(field("scheme"));
    if (s.order_ < 1 || !(s.alpha_ > 0.0) || s.vocab_size_ < 3) throw ConfigError("scorer file: bad parameters");
    const auto nfeat = std::stoull(field("features"));
    for (std::size_t i = 0; i < nfeat; ++i) s.add_feature(next_line("feature"));
    const auto nbuckets = std::stoull(field("buckets"));
    for (std::size_t i = 0; i < nbuckets; ++i) {
      std::istringstream ls(next_line("bucket"));
      std::size_t n = 0;
      ls >> n;
      std::vector<std::int32_t> set(n);
      for (auto& f : set) ls >> f;
      if (!ls) throw ConfigError("scorer file: malformed bucket line");
      s.bucket_index_.emplace(set_key(set), static_cast<std::int64_t>(s.buckets_.size()));
      s.buckets_.push_back(std::move(set));
    }
    const auto ntables = std::stoull(field("tables"));
    std::vector<TokenId> history(static_cast<std::size_t>(s.order_));
    for (std::size_t i = 0; i < ntables; ++i) {
      std::istringstream ls(next_line("table"));
      int level = 0;
      std::int64_t owner = 0;
      std::size_t n = 0;
      ls >> level >> owner;
      for (auto& h : history) ls >> h;
      ls >> n;
      CountTable t;
      t.counts.reserve(n);
      for (std::size_t j = 0; j < n; ++j) {
        TokenId id = 0;
        char colon = 0;
        std::uint32_t c = 0;
        ls >> id >> colon >> c;
        if (colon != ':' || c == 0 || id < 0 || static_cast<std::size_t>(id) >= s.vocab_size_) {
          throw ConfigError("scorer file: malformed count entry");
        }
        t.counts.emplace_back(id, c);
        t.total += c;
      }
      if (!ls || level < 0 || level > 2) throw ConfigError("scorer file: malformed table line");
      s.tables_.emplace(cell_key(static_cast<Level>(level), owner, history), std::move(t));
    }
    return s;
  }

  friend bool operator==(const NgramScorer& a, const NgramScorer& b) {
    return a.order_ == b.order_ && a.alpha_ == b.alpha_ && a.vocab_size_ == b.vocab_size_ &&
           a.scheme_ == b.scheme_ && a.feature_words_ == b.feature_words_ && a.buckets_ == b.buckets_ &&
           a.tables_ == b.tables_;
  }

 private:
  struct ParsedKey {
    Level level;
    std::int64_t owner;
    std::vector<TokenId> history;
  };

  std::vector<std::string> segment(std::string_view text) const {
    return scheme_ == TokenizationScheme::kWhitespace ? text::split_whitespace(text) : text::split_words(text);
  }

  void add_feature(std::string w) {
    feature_ids_.emplace(w, static_cast<std::int32_t>(feature_words_.size()));
    feature_words_.push_back(std::move(w));
  }

  void history_of(std::span<const TokenId> prefix, std::vector<TokenId>& out) const {
    const auto n = static_cast<std::size_t>(order_);
    out.assign(n, kBos);
    const std::size_t take = std::min(n, prefix.size());
    std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(),
              out.begin() + static_cast<std::ptrdiff_t>(n - take));
  }

  static std::string set_key(const std::vector<std::int32_t>& set) {
    return std::string(reinterpret_cast<const char*>(set.data()), set.size() * sizeof(std::int32_t));
  }

  static std::string cell_key(Level level, std::int64_t owner, const std::vector<TokenId>& history) {
    std::string k;
    k.reserve(1 + sizeof(std::int64_t) + history.size() * sizeof(TokenId));
    k.push_back(static_cast<char>(level));
    k.append(reinterpret_cast<const char*>(&owner), sizeof owner);
    k.append(reinterpret_cast<const char*>(history.data()), history.size() * sizeof(TokenId));
    return k;
  }

  static ParsedKey parse_cell_key(const std::string& k, int order) {
    ParsedKey p;
    p.level = static_cast<Level>(k[0]);
    std::memcpy(&p.owner, k.data() + 1, sizeof p.owner);
    p.history.resize(static_cast<std::size_t>(order));
    std::memcpy(p.history.data(), k.data() + 1 + sizeof p.owner, p.history.size() * sizeof(TokenId));
    return p;
  }

  const CountTable* find(Level level, std::int64_t owner, const std::vector<TokenId>& history) const {
    thread_local std::string k;
    k.clear();
    k.push_back(static_cast<char>(level));
    k.append(reinterpret_cast<const char*>(&owner), sizeof owner);
    k.append(reinterpret_cast<const char*>(history.data()), history.size() * sizeof(TokenId));
    auto it = tables_.find(k);
    return it == tables_.end() ? nullptr : &it->second;
  }

  // P(id) = (count(id) + alpha) / (total + alpha * V)
  void fill(std::span<const std::pair<TokenId, std::uint32_t>> counts, std::uint64_t total,
            LogDistribution& out) const {
    const double denom = std::log(static_cast<double>(total) + alpha_ * static_cast<double>(vocab_size_));
    out.entries.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      out.entries[i] = {counts[i].first, std::log(static_cast<double>(counts[i].second) + alpha_) - denom};
    }
    out.default_logprob = std::log(alpha_) - denom;
  }

  int order_ = 1;
  double alpha_ = kDefaultAlpha;
  std::size_t vocab_size_ = 0;
  TokenizationScheme scheme_ = TokenizationScheme::kUnicodeWord;
  std::vector<std::string> feature_words_;
  std::unordered_map<std::string, std::int32_t> feature_ids_;
  std::vector<std::vector<std::int32_t>> buckets_;
  std::unordered_map<std::string, std::int64_t> bucket_index_;
  std::unordered_map<std::string, CountTable> tables_;
};

}  // namespace adgr
