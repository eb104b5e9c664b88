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

// Retrieval quality metrics and the dataset-driven evaluation harness.
//
//   ACR  = requests with at least one ad / requests
//   HR@K = |top-K(generated) ∩ GT| / |GT|
//   AP   = (1/|GT|) * sum over retrieved GT ads i of
//            (1 + #GT ads ranked before i) / position(i)
//   MAP  = mean AP over queries
//
// A GT ad missing from the generated list contributes 0 to the AP sum.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ranges>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "adgr/engine.hpp"
#include "adgr/error.hpp"
#include "adgr/io.hpp"

namespace adgr {

struct EvalRecord {
  std::string query;
  std::vector<std::string> ground_truth;  // treated as a set
  std::vector<std::string> generated;     // ranked, position 1 first
};

// Generated lists must not repeat an ad; positions would be ambiguous.
inline void check_generated(const EvalRecord& r) {
  std::unordered_set<std::string_view> seen;
  for (const auto& ad : r.generated) {
    if (!seen.insert(ad).second) {
      throw InvalidInput("eval record '" + r.query + "': duplicate ad '" + ad + "' in generated list");
    }
  }
}

namespace detail {

inline std::unordered_set<std::string_view> gt_set(const EvalRecord& r, const char* metric) {
  std::unordered_set<std::string_view> gt(r.ground_truth.begin(), r.ground_truth.end());
  if (gt.empty()) throw UndefinedMetric(std::string(metric) + ": empty ground truth for '" + r.query + "'");
  return gt;
}

}  // namespace detail

inline double hit_ratio_at_k(const EvalRecord& r, std::size_t k) {
  if (k < 1) throw InvalidInput("hit_ratio_at_k: K must be >= 1");
  const auto gt = detail::gt_set(r, "HR@K");
  check_generated(r);
  std::size_t hits = 0;
  const std::size_t n = std::min(k, r.generated.size());
  for (std::size_t i = 0; i < n; ++i) hits += gt.count(r.generated[i]);
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

inline double average_precision(const EvalRecord& r) {
  const auto gt = detail::gt_set(r, "AP");
  check_generated(r);
  // The k-th retrieved GT ad (in rank order) has exactly k-1 GT ads before it.
  // Summed in extended precision and rounded once, so small hand-checkable
  // cases come out as the correctly rounded double.
  long double sum = 0.0L;
  std::size_t k = 0;
  for (std::size_t i = 0; i < r.generated.size(); ++i) {
    if (gt.count(r.generated[i])) {
      ++k;
      sum += static_cast<long double>(k) / static_cast<long double>(i + 1);
    }
  }
  return static_cast<double>(sum / static_cast<long double>(gt.size()));
}

inline double mean_average_precision(std::span<const EvalRecord> records) {
  if (records.empty()) throw UndefinedMetric("MAP: no records");
  long double sum = 0.0L;
  for (const auto& r : records) sum += average_precision(r);
  return static_cast<double>(sum / static_cast<long double>(records.size()));
}

template <class R>
concept ResultRange = std::ranges::input_range<R> && requires(std::ranges::range_reference_t<R> r) {
  { r.ads.empty() } -> std::convertible_to<bool>;
};

template <ResultRange R>
double ad_coverage_rate(const R& results) {
  std::size_t pv = 0;
  std::size_t adpv = 0;
  for (const auto& r : results) {
    ++pv;
    if (!r.ads.empty()) ++adpv;
  }
  if (pv == 0) throw UndefinedMetric("ACR: no results");
  return static_cast<double>(adpv) / static_cast<double>(pv);
}

struct QueryMetrics {
  std::string query;
  std::size_t retrieved = 0;
  bool covered = false;
  bool has_ground_truth = false;
  double ap = 0.0;
  double hr50 = 0.0;
  double hr100 = 0.0;
  double hr500 = 0.0;
};

struct EvalReport {
  double hr50 = 0.0;
  double hr100 = 0.0;
  double hr500 = 0.0;
  double map = 0.0;
  double acr = 0.0;
  std::size_t pv = 0;
  std::size_t adpv = 0;
  std::size_t evaluated = 0;  // queries with ground truth
  std::size_t failures = 0;   // retrieval errors, excluded from every metric
  std::size_t depth = 500;
  std::vector<QueryMetrics> per_query;

  // Values are rounded to 1e-12 so the serialized form is stable.
  static double stable(double x) { return std::round(x * 1e12) / 1e12; }

  // Line-delimited: a summary object, then one object per query.
  std::string to_jsonl() const {
    std::string out;
    nlohmann::json summary{{"pv", pv},
                           {"adpv", adpv},
                           {"acr", stable(acr)},
                           {"hr@50", stable(hr50)},
                           {"hr@100", stable(hr100)},
                           {"hr@500", stable(hr500)},
                           {"map", stable(map)},
                           {"evaluated", evaluated},
                           {"failures", failures},
                           {"depth", depth}};
    out += summary.dump() + "\n";
    for (const auto& q : per_query) {
      nlohmann::json j{{"query", q.query}, {"retrieved", q.retrieved}, {"covered", q.covered}};
      if (q.has_ground_truth) {
        j["ap"] = stable(q.ap);
        j["hr@50"] = stable(q.hr50);
        j["hr@100"] = stable(q.hr100);
        j["hr@500"] = stable(q.hr500);
      }
      out += j.dump() + "\n";
    }
    return out;
  }

  std::string to_text() const {
    char buf[160];
    std::string out;
    out += "metric      value\n";
    out += "----------  ------------\n";
    auto row = [&](const char* name, double v) {
      std::snprintf(buf, sizeof buf, "%-10s  %.6f\n", name, v);
      out += buf;
    };
    row("HR@50", hr50);
    row("HR@100", hr100);
    row("HR@500", hr500);
    row("MAP", map);
    row("ACR", acr);
    std::snprintf(buf, sizeof buf, "\nPV=%zu AdPV=%zu evaluated=%zu failures=%zu depth=%zu\n", pv, adpv, evaluated,
                  failures, depth);
    out += buf;
    return out;
  }
};

// Retrieves each query with result depth `depth` and aggregates metrics.
// Failed retrievals are counted and excluded. Queries without ground
// truth count toward ACR only.
inline EvalReport run_eval(Engine& engine, std::span<const io::EvalQuery> dataset, std::size_t depth = 500) {
  if (dataset.empty()) throw UndefinedMetric("run_eval: empty dataset");
  if (depth < 1) throw ConfigError("run_eval: depth must be >= 1");
  EvalReport report;
  report.depth = depth;
  std::vector<RetrievalResult> results;
  std::vector<EvalRecord> records;
  for (const auto& item : dataset) {
    RetrievalResult res;
    try {
      res = engine.retrieve(item.query, depth);
    } catch (const Error&) {
      ++report.failures;
      continue;
    }
    EvalRecord rec;
    rec.query = item.query;
    rec.ground_truth = item.relevant_ad_ids;
    for (const auto& a : res.ads) rec.generated.push_back(a.ad_id);

    QueryMetrics m;
    m.query = item.query;
    m.retrieved = rec.generated.size();
    m.covered = !res.ads.empty();
    m.has_ground_truth = !rec.ground_truth.empty();
    if (m.has_ground_truth) {
      m.ap = average_precision(rec);
      m.hr50 = hit_ratio_at_k(rec, 50);
      m.hr100 = hit_ratio_at_k(rec, 100);
      m.hr500 = hit_ratio_at_k(rec, 500);
      records.push_back(std::move(rec));
    }
    report.per_query.push_back(std::move(m));
    results.push_back(std::move(res));
  }
  report.pv = results.size();
  for (const auto& r : results) report.adpv += r.ads.empty() ? 0 : 1;
  if (!results.empty()) report.acr = ad_coverage_rate(results);
  report.evaluated = records.size();
  if (!records.empty()) {
    report.map = mean_average_precision(records);
    double s50 = 0, s100 = 0, s500 = 0;
    for (const auto& q : report.per_query) {
      if (!q.has_ground_truth) continue;
      s50 += q.hr50;
      s100 += q.hr100;
      s500 += q.hr500;
    }
    const auto n = static_cast<double>(records.size());
    report.hr50 = s50 / n;
    report.hr100 = s100 / n;
    report.hr500 = s500 / n;
  }
  return report;
}

}  // namespace adgr
