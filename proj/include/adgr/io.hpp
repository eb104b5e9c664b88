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

// On-disk formats. Every data file is line-delimited JSON, one record per
// line; manifests are single JSON objects.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <unordered_map>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgr/ad_index.hpp"
#include "adgr/ci_trie.hpp"
#include "adgr/error.hpp"
#include "adgr/ngram_scorer.hpp"
#include "adgr/query_cache.hpp"
#include "adgr/vocab.hpp"

namespace adgr::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Calls f(record, line_number) for every non-blank line.
template <class F>
void read_jsonl(const fs::path& path, F&& f) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      f(rec, lineno);
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

inline Vocabulary load_vocab(const fs::path& path, TokenizationScheme scheme) {
  auto in = open_in(path);
  return Vocabulary::load(in, scheme);
}

inline void save_vocab(const fs::path& path, const Vocabulary& v) {
  auto out = open_out(path);
  v.save(out);
}

inline NgramScorer load_scorer(const fs::path& path) {
  auto in = open_in(path);
  return NgramScorer::load(in);
}

inline void save_scorer(const fs::path& path, const NgramScorer& s) {
  auto out = open_out(path);
  s.save(out);
}

// --- CI set: {"ci_id": <int, optional>, "text": <CI text>} ---

struct CiRecord {
  std::optional<std::uint32_t> ci_id;
  std::string text;
};

inline std::vector<CiRecord> read_ci_records(const fs::path& path) {
  std::vector<CiRecord> out;
  read_jsonl(path, [&](const json& j, std::size_t) {
    CiRecord r;
    r.text = j.at("text").get<std::string>();
    if (j.contains("ci_id") && !j.at("ci_id").is_null()) r.ci_id = j.at("ci_id").get<std::uint32_t>();
    out.push_back(std::move(r));
  });
  return out;
}

// Tokenizes and builds. Records that carry a ci_id must agree with the
// deterministic assignment.
inline CiTrie build_trie_from_records(const std::vector<CiRecord>& records, const Vocabulary& vocab,
                                      TrieBuildOptions opts = {}) {
  std::vector<CiInput> inputs;
  inputs.reserve(records.size());
  for (const auto& r : records) inputs.push_back({vocab.normalize(r.text), vocab.tokenize(r.text)});
  auto trie = CiTrie::build(inputs, opts);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].ci_id) continue;
    const auto id = trie.resolve(inputs[i].tokens);
    if (!id || id->value != *records[i].ci_id) {
      throw ConfigError("CI '" + records[i].text + "' carries ci_id " + std::to_string(*records[i].ci_id) +
                        " but the deterministic assignment gives " +
                        (id ? std::to_string(id->value) : std::string("none")));
    }
  }
  return trie;
}

inline CiTrie load_trie(const fs::path& path, const Vocabulary& vocab) {
  return build_trie_from_records(read_ci_records(path), vocab);
}

inline void save_ci_set(const fs::path& path, const CiTrie& trie) {
  auto out = open_out(path);
  for (std::uint32_t i = 0; i < trie.ci_count(); ++i) {
    out << json{{"ci_id", i}, {"text", trie.text(CiId{i})}}.dump() << '\n';
  }
}

// --- training pairs: {"context", "ci"} ---

struct RawPair {
  std::string context;
  std::string ci;
};

inline std::vector<RawPair> read_pairs(const fs::path& path) {
  std::vector<RawPair> out;
  read_jsonl(path, [&](const json& j, std::size_t) {
    out.push_back({j.at("context").get<std::string>(), j.at("ci").get<std::string>()});
  });
  return out;
}

// --- ads: {"ad_id", "title", "landing_page", "materials"} ---

inline std::vector<Ad> read_ads(const fs::path& path) {
  std::vector<Ad> out;
  std::unordered_map<std::string, std::size_t> seen;
  read_jsonl(path, [&](const json& j, std::size_t lineno) {
    Ad ad;
    ad.ad_id = j.at("ad_id").get<std::string>();
    ad.title = j.value("title", "");
    ad.landing_page = j.value("landing_page", "");
    ad.materials = j.value("materials", "");
    if (ad.ad_id.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty ad_id");
    if (!seen.emplace(ad.ad_id, lineno).second) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": duplicate ad_id '" + ad.ad_id + "'");
    }
    out.push_back(std::move(ad));
  });
  return out;
}

// --- assignments: {"ad_id", "ci_ids": [..]} ---

inline std::vector<Assignment> read_assignments(const fs::path& path) {
  std::vector<Assignment> out;
  read_jsonl(path, [&](const json& j, std::size_t) {
    Assignment a;
    a.ad_id = j.at("ad_id").get<std::string>();
    for (const auto& c : j.at("ci_ids")) a.cis.push_back(CiId{c.get<std::uint32_t>()});
    out.push_back(std::move(a));
  });
  return out;
}

inline void write_assignments(const fs::path& path, const std::vector<Assignment>& assignments) {
  auto out = open_out(path);
  for (const auto& a : assignments) {
    json ids = json::array();
    for (CiId c : a.cis) ids.push_back(c.value);
    out << json{{"ad_id", a.ad_id}, {"ci_ids", ids}}.dump() << '\n';
  }
}

// --- index: <dir>/postings.jsonl + <dir>/manifest.json ---

inline void save_index(const fs::path& dir, const IndexSnapshot& index) {
  fs::create_directories(dir);
  auto out = open_out(dir / "postings.jsonl");
  index.for_each_posting([&](CiId ci, std::span<const std::string> ads) {
    out << json{{"ci_id", ci.value}, {"ad_ids", std::vector<std::string>(ads.begin(), ads.end())}}.dump() << '\n';
  });
  write_json(dir / "manifest.json", json{{"trie_version", index.trie_version()},
                                         {"index_version", index.version()},
                                         {"ci_count", index.ci_count()},
                                         {"ad_count", index.ad_count()}});
}

// Ads without any posting are not represented on disk.
inline IndexSnapshot load_index(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  const auto ci_count = manifest.at("ci_count").get<std::size_t>();
  std::map<std::string, std::vector<CiId>> by_ad;
  read_jsonl(dir / "postings.jsonl", [&](const json& j, std::size_t) {
    const CiId ci{j.at("ci_id").get<std::uint32_t>()};
    for (const auto& ad : j.at("ad_ids")) by_ad[ad.get<std::string>()].push_back(ci);
  });
  std::vector<Assignment> assignments;
  assignments.reserve(by_ad.size());
  for (auto& [ad, cis] : by_ad) assignments.push_back({ad, std::move(cis)});
  auto index = IndexSnapshot::build(assignments, ci_count, manifest.at("trie_version").get<std::uint64_t>());
  index.set_version(manifest.at("index_version").get<std::uint64_t>());
  return index;
}

// --- cache: <dir>/snapshot.jsonl + <dir>/manifest.json ---

inline json cis_to_json(std::span<const ScoredCi> cis) {
  json arr = json::array();
  for (const auto& c : cis) arr.push_back(json{{"ci_id", c.ci.value}, {"score", c.score}});
  return arr;
}

inline std::vector<ScoredCi> cis_from_json(const json& arr) {
  std::vector<ScoredCi> out;
  for (const auto& c : arr) out.push_back({CiId{c.at("ci_id").get<std::uint32_t>()}, c.at("score").get<double>()});
  return out;
}

inline void save_cache(const fs::path& dir, const CacheSnapshot& snap) {
  fs::create_directories(dir);
  std::vector<const std::string*> keys;
  for (const auto& [q, _] : snap.entries) keys.push_back(&q);
  std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) { return *a < *b; });
  auto out = open_out(dir / "snapshot.jsonl");
  for (const auto* q : keys) out << json{{"query", *q}, {"cis", cis_to_json(snap.entries.at(*q))}}.dump() << '\n';
  write_json(dir / "manifest.json", json{{"profile", snap.profile},
                                         {"trie_version", snap.trie_version},
                                         {"built_at", snap.built_at},
                                         {"entries", snap.entries.size()}});
}

inline CacheSnapshot load_cache(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  CacheSnapshot snap;
  snap.profile = manifest.at("profile").get<std::string>();
  snap.trie_version = manifest.at("trie_version").get<std::uint64_t>();
  snap.built_at = manifest.at("built_at").get<std::int64_t>();
  read_jsonl(dir / "snapshot.jsonl", [&](const json& j, std::size_t) {
    snap.entries[j.at("query").get<std::string>()] = cis_from_json(j.at("cis"));
  });
  return snap;
}

// --- head queries: {"query", "freq"} ---

inline std::vector<HeadQuery> read_head_queries(const fs::path& path) {
  std::vector<HeadQuery> out;
  read_jsonl(path, [&](const json& j, std::size_t) {
    out.push_back({j.at("query").get<std::string>(), j.value<std::uint64_t>("freq", 1)});
  });
  return out;
}

// --- eval dataset: {"query", "relevant_ad_ids": [..]} ---

struct EvalQuery {
  std::string query;
  std::vector<std::string> relevant_ad_ids;
};

inline std::vector<EvalQuery> read_eval_dataset(const fs::path& path) {
  std::vector<EvalQuery> out;
  read_jsonl(path, [&](const json& j, std::size_t) {
    out.push_back({j.at("query").get<std::string>(), j.at("relevant_ad_ids").get<std::vector<std::string>>()});
  });
  return out;
}

}  // namespace adgr::io
