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

// Trie-constrained beam search over a Scorer.
//
// Each step expands every live hypothesis with the tokens the trie allows
// after its prefix (END only at terminal nodes), scores them with the
// tempered next-token log-probability, optionally drops tokens that fall
// more than `truncation_margin` below the hypothesis' best candidate, and
// keeps the best `beam_size` entries of the pool formed by the expansions
// plus the already-finished hypotheses. Finished hypotheses are frozen and
// keep competing for beam slots by their final score.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adgr/ci_trie.hpp"
#include "adgr/error.hpp"
#include "adgr/scorer.hpp"
#include "adgr/vocab.hpp"

namespace adgr {

struct DecodeParams {
  int beam_size = 50;
  // Tokens, END excluded.
  int max_len = 4;
  double temperature = 0.7;
  // Nats below the per-step best candidate; nullopt disables truncation.
  std::optional<double> truncation_margin = 2.0;
  bool length_normalize = false;

  static DecodeParams online() { return {50, 4, 0.7, 2.0, false}; }
  static DecodeParams offline() { return {256, 6, 0.8, 2.0, false}; }

  void validate() const {
    if (beam_size < 1) throw ConfigError("decode params: beam_size must be >= 1");
    if (max_len < 1) throw ConfigError("decode params: max_len must be >= 1");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      throw ConfigError("decode params: temperature must be > 0");
    }
    if (truncation_margin && (std::isnan(*truncation_margin) || *truncation_margin < 0.0)) {
      throw ConfigError("decode params: truncation_margin must be >= 0");
    }
  }

  friend bool operator==(const DecodeParams&, const DecodeParams&) = default;
};

struct ScoredCi {
  CiId ci;
  double score = 0.0;
  friend bool operator==(const ScoredCi&, const ScoredCi&) = default;
};

struct Candidate {
  TokenId token = 0;
  double logprob = 0.0;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

namespace detail {

// log of the normalizer of exp(x / temperature) over a distribution with
// `entries` explicit values and `n_default` ids at `default_lp`.
inline double tempered_log_normalizer(std::span<const std::pair<TokenId, double>> entries, double default_lp,
                                      std::size_t n_default, double temperature) {
  double m = kNegInf;
  for (const auto& e : entries) m = std::max(m, e.second / temperature);
  const bool use_default = n_default > 0 && default_lp != kNegInf;
  if (use_default) m = std::max(m, default_lp / temperature);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (const auto& e : entries) s += std::exp(e.second / temperature - m);
  if (use_default) s += static_cast<double>(n_default) * std::exp(default_lp / temperature - m);
  return m + std::log(s);
}

}  // namespace detail

// Divides log-probabilities by the temperature and renormalizes. Argmax is
// preserved for every positive temperature.
inline std::vector<double> temper(std::span<const double> logprobs, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temper: temperature must be > 0");
  std::vector<std::pair<TokenId, double>> entries(logprobs.size());
  for (std::size_t i = 0; i < logprobs.size(); ++i) entries[i] = {static_cast<TokenId>(i), logprobs[i]};
  const double z = detail::tempered_log_normalizer(entries, kNegInf, 0, temperature);
  std::vector<double> out(logprobs.size());
  for (std::size_t i = 0; i < logprobs.size(); ++i) out[i] = logprobs[i] / temperature - z;
  return out;
}

// Keeps candidates within `margin` of the best one. Input order is kept.
inline std::vector<Candidate> apply_truncation(std::span<const Candidate> candidates, double margin) {
  if (candidates.empty()) return {};
  double best = kNegInf;
  for (const auto& c : candidates) best = std::max(best, c.logprob);
  const double bound = best - margin;
  std::vector<Candidate> out;
  for (const auto& c : candidates) {
    if (c.logprob >= bound) out.push_back(c);
  }
  return out;
}

struct Hypothesis {
  TokenSeq prefix;
  CiTrie::NodeId node = CiTrie::kRoot;
  double cum_logprob = 0.0;
  bool finished = false;
  CiId ci;
};

struct DecodeOutcome {
  std::vector<ScoredCi> cis;
  // Search stopped at the deadline; `cis` holds what had finished by then.
  bool deadline_hit = false;
};

namespace detail {

struct PoolEntry {
  std::uint32_t parent = 0;  // index into the active list; unused for carried finals
  TokenId token = 0;
  CiTrie::NodeId node = 0;
  double cum = 0.0;
  double rank = 0.0;
  int steps = 0;
  bool finished = false;
  std::uint32_t ci = 0;
  std::uint32_t carried = UINT32_MAX;  // index into the finished list
};

// Tempered log-probabilities of the sorted `tokens` under `dist`.
inline void gather(const LogDistribution& dist, std::span<const TokenId> tokens, double temperature, double z,
                   std::vector<Candidate>& out) {
  out.clear();
  const auto& e = dist.entries;
  if (e.size() > 8 * tokens.size()) {
    for (TokenId t : tokens) out.push_back({t, dist.logprob(t) / temperature - z});
    return;
  }
  std::size_t j = 0;
  for (TokenId t : tokens) {
    while (j < e.size() && e[j].first < t) ++j;
    const double lp = (j < e.size() && e[j].first == t) ? e[j].second : dist.default_logprob;
    out.push_back({t, lp / temperature - z});
  }
}

}  // namespace detail

template <class Clock = std::chrono::steady_clock>
DecodeOutcome constrained_beam_search_until(const Scorer& scorer, const CiTrie& trie, std::string_view context,
                                            const DecodeParams& params,
                                            std::optional<typename Clock::time_point> deadline) {
  params.validate();
  if (trie.empty()) throw ConfigError("constrained_beam_search: empty CI trie");
  if (scorer.vocab_size() == 0) throw ConfigError("constrained_beam_search: scorer has an empty vocabulary");

  ScoringContext ctx;
  try {
    ctx = scorer.prepare(context);
  } catch (const std::exception& e) {
    throw DecodeError(std::string("scorer failed to prepare context: ") + e.what());
  }

  const auto beam = static_cast<std::size_t>(params.beam_size);
  const double temperature = params.temperature;
  auto rank_of = [&](double cum, int steps) {
    return params.length_normalize ? cum / static_cast<double>(steps) : cum;
  };

  std::vector<Hypothesis> active(1);
  std::vector<Hypothesis> finished;
  std::vector<int> finished_steps;
  std::vector<int> active_steps(1, 0);
  std::vector<detail::PoolEntry> pool;
  std::vector<TokenId> allowed;
  std::vector<Candidate> cands;
  LogDistribution dist;
  DecodeOutcome outcome;

  while (!active.empty()) {
    if (deadline && Clock::now() >= *deadline) {
      outcome.deadline_hit = true;
      break;
    }
    pool.clear();
    for (std::uint32_t h = 0; h < active.size(); ++h) {
      const auto& hyp = active[h];
      allowed.clear();
      if (trie.terminal(hyp.node)) allowed.push_back(Vocabulary::kEndId);
      if (static_cast<int>(hyp.prefix.size()) < params.max_len) {
        const auto kids = trie.child_tokens(hyp.node);
        allowed.insert(allowed.end(), kids.begin(), kids.end());
      }
      if (allowed.empty()) continue;

      try {
        scorer.distribution(ctx, hyp.prefix, dist);
      } catch (const std::exception& e) {
        throw DecodeError("scorer failed at prefix length " + std::to_string(hyp.prefix.size()) + ": " + e.what());
      }
      if (dist.support != scorer.vocab_size()) throw DecodeError("scorer returned a distribution of wrong support");
      const double z = detail::tempered_log_normalizer(dist.entries, dist.default_logprob,
                                                       dist.support - dist.entries.size(), temperature);
      detail::gather(dist, allowed, temperature, z, cands);
      if (params.truncation_margin) cands = apply_truncation(cands, *params.truncation_margin);

      for (const auto& c : cands) {
        detail::PoolEntry p;
        p.parent = h;
        p.token = c.token;
        p.cum = hyp.cum_logprob + c.logprob;
        p.steps = active_steps[h] + 1;
        p.rank = rank_of(p.cum, p.steps);
        if (c.token == Vocabulary::kEndId) {
          p.finished = true;
          p.node = hyp.node;
          p.ci = trie.terminal(hyp.node)->value;
        } else {
          p.node = *trie.child(hyp.node, c.token);
        }
        pool.push_back(p);
      }
    }
    for (std::uint32_t f = 0; f < finished.size(); ++f) {
      detail::PoolEntry p;
      p.finished = true;
      p.cum = finished[f].cum_logprob;
      p.steps = finished_steps[f];
      p.rank = rank_of(p.cum, p.steps);
      p.ci = finished[f].ci.value;
      p.carried = f;
      pool.push_back(p);
    }

    // Order: rank desc, finished before live, then CiId / prefix ascending.
    auto better = [&](const detail::PoolEntry& a, const detail::PoolEntry& b) {
      if (a.rank != b.rank) return a.rank > b.rank;
      if (a.finished != b.finished) return a.finished;
      if (a.finished) return a.ci < b.ci;
      const auto& pa = active[a.parent].prefix;
      const auto& pb = active[b.parent].prefix;
      if (pa != pb) return pa < pb;
      return a.token < b.token;
    };
    if (pool.size() > beam) {
      std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(beam), pool.end(), better);
      pool.resize(beam);
    }
    std::sort(pool.begin(), pool.end(), better);

    std::vector<Hypothesis> next_active;
    std::vector<int> next_active_steps;
    std::vector<Hypothesis> next_finished;
    std::vector<int> next_finished_steps;
    for (const auto& p : pool) {
      if (p.carried != UINT32_MAX) {
        next_finished.push_back(std::move(finished[p.carried]));
        next_finished_steps.push_back(p.steps);
        continue;
      }
      Hypothesis h;
      h.prefix = active[p.parent].prefix;
      h.cum_logprob = p.cum;
      h.node = p.node;
      if (p.finished) {
        h.finished = true;
        h.ci = CiId{p.ci};
        next_finished.push_back(std::move(h));
        next_finished_steps.push_back(p.steps);
      } else {
        h.prefix.push_back(p.token);
        next_active.push_back(std::move(h));
        next_active_steps.push_back(p.steps);
      }
    }
    active = std::move(next_active);
    active_steps = std::move(next_active_steps);
    finished = std::move(next_finished);
    finished_steps = std::move(next_finished_steps);
  }

  outcome.cis.reserve(finished.size());
  for (std::size_t f = 0; f < finished.size(); ++f) {
    outcome.cis.push_back({finished[f].ci, rank_of(finished[f].cum_logprob, finished_steps[f])});
  }
  std::sort(outcome.cis.begin(), outcome.cis.end(), [](const ScoredCi& a, const ScoredCi& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ci < b.ci;
  });
  return outcome;
}

// Ranked CIs, at most beam_size, score descending with CiId ascending on
// ties. Scores are tempered cumulative log-probabilities (divided by the
// number of scored steps, END included, when length_normalize is set).
inline std::vector<ScoredCi> constrained_beam_search(const Scorer& scorer, const CiTrie& trie,
                                                     std::string_view context, const DecodeParams& params) {
  return constrained_beam_search_until<>(scorer, trie, context, params, std::nullopt).cis;
}

}  // namespace adgr
