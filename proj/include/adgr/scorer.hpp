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

// The scorer contract: a sequence model that yields a next-token
// log-probability distribution over the full vocabulary (END included)
// given a context text and a token prefix.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adgr/error.hpp"
#include "adgr/vocab.hpp"

namespace adgr {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(v))) with max shift.
inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double z = log_sum_exp(logits);
  std::vector<double> out(logits.begin(), logits.end());
  for (auto& x : out) x -= z;
  return out;
}

// A log-distribution over ids [0, support). Ids listed in `entries` carry
// their own value; every other id carries `default_logprob`. Lets count
// models with add-alpha smoothing describe a full-vocabulary distribution
// without materializing it.
struct LogDistribution {
  std::vector<std::pair<TokenId, double>> entries;  // sorted by id, unique
  double default_logprob = kNegInf;
  std::size_t support = 0;

  void clear() {
    entries.clear();
    default_logprob = kNegInf;
    support = 0;
  }

  double logprob(TokenId id) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), id,
                               [](const auto& e, TokenId v) { return e.first < v; });
    if (it != entries.end() && it->first == id) return it->second;
    return default_logprob;
  }

  std::vector<double> dense() const {
    std::vector<double> out(support, default_logprob);
    for (const auto& [id, lp] : entries) out[static_cast<std::size_t>(id)] = lp;
    return out;
  }
};

// Per-decode state derived once from the context text. Each scorer fills
// the fields it uses.
struct ScoringContext {
  std::string text;
  std::int64_t bucket = -1;
  std::vector<std::int32_t> features;
};

class Scorer {
 public:
  virtual ~Scorer() = default;

  // Number of ids in every distribution, reserved ids included.
  virtual std::size_t vocab_size() const = 0;

  virtual ScoringContext prepare(std::string_view context) const = 0;

  // Untempered next-token distribution after `prefix`. Must be a proper
  // distribution and a pure function of its arguments.
  virtual void distribution(const ScoringContext& ctx, std::span<const TokenId> prefix,
                            LogDistribution& out) const = 0;

  std::vector<double> next_logprobs(std::string_view context, std::span<const TokenId> prefix) const {
    LogDistribution d;
    distribution(prepare(context), prefix, d);
    return d.dense();
  }
};

// Sum of per-step log-probabilities of `seq` followed by END.
inline double sequence_logprob(const Scorer& scorer, std::string_view context,
                               std::span<const TokenId> seq) {
  if (seq.empty()) throw InvalidInput("sequence_logprob: empty sequence");
  const auto ctx = scorer.prepare(context);
  LogDistribution d;
  double total = 0.0;
  for (std::size_t t = 0; t <= seq.size(); ++t) {
    scorer.distribution(ctx, seq.first(t), d);
    total += d.logprob(t < seq.size() ? seq[t] : Vocabulary::kEndId);
  }
  return total;
}

// Throws InvalidInput unless `logprobs` is a proper log-distribution.
inline void check_normalized(std::span<const double> logprobs, double tol = 1e-9) {
  double s = 0.0;
  for (double x : logprobs) {
    if (std::isnan(x) || x > 1e-12) throw InvalidInput("distribution contains a value > 0 or NaN");
    s += std::exp(x);
  }
  if (std::abs(s - 1.0) > tol) {
    throw InvalidInput("distribution does not sum to 1 (sum=" + std::to_string(s) + ")");
  }
}

// Explicit (context, prefix) -> distribution table with a default for
// missing keys. Deterministic test oracle.
class TableScorer final : public Scorer {
 public:
  TableScorer(std::size_t vocab_size, std::vector<double> default_logprobs)
      : vocab_size_(vocab_size), default_(std::move(default_logprobs)) {
    if (default_.size() != vocab_size_) throw InvalidInput("TableScorer: default distribution size mismatch");
    check_normalized(default_);
  }

  static TableScorer uniform(std::size_t vocab_size) {
    return TableScorer(vocab_size, std::vector<double>(vocab_size, -std::log(static_cast<double>(vocab_size))));
  }

  void set(std::string_view context, std::span<const TokenId> prefix, std::vector<double> logprobs) {
    if (logprobs.size() != vocab_size_) throw InvalidInput("TableScorer: distribution size mismatch");
    check_normalized(logprobs);
    table_[key(context, prefix)] = std::move(logprobs);
  }

  std::size_t vocab_size() const override { return vocab_size_; }

  ScoringContext prepare(std::string_view context) const override {
    ScoringContext c;
    c.text = std::string(context);
    return c;
  }

  void distribution(const ScoringContext& ctx, std::span<const TokenId> prefix,
                    LogDistribution& out) const override {
    auto it = table_.find(key(ctx.text, prefix));
    const auto& lp = it == table_.end() ? default_ : it->second;
    out.entries.resize(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i) out.entries[i] = {static_cast<TokenId>(i), lp[i]};
    out.default_logprob = kNegInf;
    out.support = vocab_size_;
  }

 private:
  static std::string key(std::string_view context, std::span<const TokenId> prefix) {
    std::string k(context);
    k.push_back('\0');
    k.append(reinterpret_cast<const char*>(prefix.data()), prefix.size_bytes());
    return k;
  }

  std::size_t vocab_size_;
  std::vector<double> default_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

}  // namespace adgr
