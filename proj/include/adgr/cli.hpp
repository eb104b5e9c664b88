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

// Command-line front end: each subcommand is one pipeline stage. Paths
// and parameters default to the config file and can be overridden by
// flags. Exit status: 0 success, 1 runtime failure, 2 usage error.

#pragma once

#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adgr/ad_index.hpp"
#include "adgr/ci_trie.hpp"
#include "adgr/engine.hpp"
#include "adgr/error.hpp"
#include "adgr/eval.hpp"
#include "adgr/io.hpp"
#include "adgr/ngram_scorer.hpp"
#include "adgr/query_cache.hpp"
#include "adgr/server.hpp"
#include "adgr/vocab.hpp"

namespace adgr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

struct Overrides {
  std::string config = "adgr.json";
  std::string ci_source, vocab, ci_set, ci_aliases, pairs, scorer, ads, assignments, index, head_queries, cache,
      dataset, report_dir, scheme;
  std::optional<int> order;
  std::optional<double> alpha;
  std::optional<std::size_t> cap, min_support, top_k, depth;
  std::optional<std::uint64_t> min_freq;
  std::string query;
  std::string bind = "127.0.0.1:8080";
};

inline EngineConfig load_config(const Overrides& o) {
  auto c = EngineConfig::load(o.config);
  auto set = [](const std::string& flag, fs::path& dst) {
    if (!flag.empty()) dst = fs::absolute(flag);
  };
  set(o.ci_source, c.paths.ci_source);
  set(o.vocab, c.paths.vocab);
  set(o.ci_set, c.paths.ci_set);
  set(o.ci_aliases, c.paths.ci_aliases);
  set(o.pairs, c.paths.pairs);
  set(o.scorer, c.paths.scorer);
  set(o.ads, c.paths.ads);
  set(o.assignments, c.paths.assignments);
  set(o.index, c.paths.index);
  set(o.head_queries, c.paths.head_queries);
  set(o.cache, c.paths.cache);
  set(o.dataset, c.paths.eval_dataset);
  set(o.report_dir, c.paths.report_dir);
  if (!o.scheme.empty()) c.scheme = parse_scheme(o.scheme);
  if (o.order) c.ngram_order = *o.order;
  if (o.alpha) c.smoothing_alpha = *o.alpha;
  if (o.cap) c.ci_cap = *o.cap;
  if (o.min_support) c.min_ci_support = *o.min_support;
  if (o.top_k) c.top_k = *o.top_k;
  if (o.depth) c.eval_depth = *o.depth;
  if (o.min_freq) c.cache_min_freq = *o.min_freq;
  c.validate();
  return c;
}

struct Loaded {
  Vocabulary vocab;
  CiTrie trie;
};

inline Loaded load_vocab_and_trie(const EngineConfig& c) {
  auto vocab = io::load_vocab(c.resolve(c.paths.vocab), c.scheme);
  auto trie = io::load_trie(c.resolve(c.paths.ci_set), vocab);
  return {std::move(vocab), std::move(trie)};
}

inline int build_vocab(const EngineConfig& c, std::ostream& out) {
  std::vector<std::string> corpus;
  for (auto& r : io::read_ci_records(c.resolve(c.paths.ci_source))) corpus.push_back(std::move(r.text));
  const auto vocab = Vocabulary::build(corpus, c.scheme);
  io::save_vocab(c.resolve(c.paths.vocab), vocab);
  out << "vocab: " << vocab.size() << " ids (" << vocab.size() - 2 << " tokens) -> "
      << c.resolve(c.paths.vocab).string() << '\n';
  return kExitOk;
}

inline int fit_scorer(const EngineConfig& c, std::ostream& out, std::ostream& err) {
  const auto vocab = io::load_vocab(c.resolve(c.paths.vocab), c.scheme);
  std::vector<TrainingPair> pairs;
  std::size_t skipped = 0;
  for (const auto& p : io::read_pairs(c.resolve(c.paths.pairs))) {
    TokenSeq ci;
    try {
      ci = vocab.tokenize(p.ci);
    } catch (const InvalidInput&) {
      ++skipped;
      continue;
    }
    if (std::find(ci.begin(), ci.end(), vocab.unk_id()) != ci.end()) {
      ++skipped;
      continue;
    }
    pairs.push_back({p.context, std::move(ci)});
  }
  if (skipped) err << "fit-scorer: skipped " << skipped << " pairs whose CI has out-of-vocabulary tokens\n";
  const auto scorer = NgramScorer::fit(pairs, c.ngram_order, c.smoothing_alpha, vocab);
  io::save_scorer(c.resolve(c.paths.scorer), scorer);
  out << "scorer: " << pairs.size() << " pairs, " << scorer.table_count() << " count cells -> "
      << c.resolve(c.paths.scorer).string() << '\n';
  return kExitOk;
}

inline int build_trie(const EngineConfig& c, std::ostream& out) {
  const auto vocab = io::load_vocab(c.resolve(c.paths.vocab), c.scheme);
  auto records = io::read_ci_records(c.resolve(c.paths.ci_source));
  for (auto& r : records) r.ci_id.reset();
  const auto trie = io::build_trie_from_records(records, vocab, TrieBuildOptions{c.min_ci_support});
  io::save_ci_set(c.resolve(c.paths.ci_set), trie);

  // Raw texts that collapsed onto a differently spelled canonical CI.
  auto aliases = io::open_out(c.resolve(c.paths.ci_aliases));
  std::size_t n_aliases = 0;
  std::map<std::string, std::uint32_t> seen;
  for (const auto& r : records) {
    const auto id = trie.resolve(vocab.tokenize(r.text));
    if (!id || trie.text(*id) == r.text) continue;
    if (seen.emplace(r.text, id->value).second) {
      aliases << nlohmann::json{{"text", r.text}, {"ci_id", id->value}}.dump() << '\n';
      ++n_aliases;
    }
  }
  out << "trie: " << trie.ci_count() << " CIs from " << records.size() << " records, " << n_aliases
      << " aliases, max depth " << trie.max_depth() << ", version " << trie.version() << " -> "
      << c.resolve(c.paths.ci_set).string() << '\n';
  return kExitOk;
}

inline std::shared_ptr<const NgramScorer> load_ad_scorer(const EngineConfig& c) {
  const auto& p = c.paths.ad_scorer.empty() ? c.paths.scorer : c.paths.ad_scorer;
  return std::make_shared<const NgramScorer>(io::load_scorer(c.resolve(p)));
}

inline int assign_cis(const EngineConfig& c, std::ostream& out, std::ostream& err) {
  const auto [vocab, trie] = load_vocab_and_trie(c);
  const auto scorer = load_ad_scorer(c);
  const auto ads = io::read_ads(c.resolve(c.paths.ads));
  std::vector<Assignment> assignments;
  std::size_t failed = 0;
  std::size_t total_cis = 0;
  for (const auto& ad : ads) {
    try {
      auto cis = assign_cis_to_ad(ad, *scorer, trie, c.offline, c.ci_cap);
      total_cis += cis.size();
      assignments.push_back({ad.ad_id, std::move(cis)});
    } catch (const AssignmentError& e) {
      ++failed;
      err << "assign-cis: " << e.what() << '\n';
    }
  }
  io::write_assignments(c.resolve(c.paths.assignments), assignments);
  out << "assign-cis: " << assignments.size() << " ads, "
      << (assignments.empty() ? 0.0 : static_cast<double>(total_cis) / static_cast<double>(assignments.size()))
      << " CIs/ad, " << failed << " failed -> " << c.resolve(c.paths.assignments).string() << '\n';
  return assignments.empty() && !ads.empty() ? kExitFailure : kExitOk;
}

inline int build_index(const EngineConfig& c, std::ostream& out) {
  const auto [vocab, trie] = load_vocab_and_trie(c);
  const auto assignments = io::read_assignments(c.resolve(c.paths.assignments));
  const auto index = IndexSnapshot::build(assignments, trie.ci_count(), trie.version());
  io::save_index(c.resolve(c.paths.index), index);
  out << "index: " << index.ad_count() << " ads over " << trie.ci_count() << " CIs, version " << index.version()
      << " -> " << c.resolve(c.paths.index).string() << '\n';
  return kExitOk;
}

inline int warm(const EngineConfig& c, std::ostream& out, std::ostream& err) {
  const auto [vocab, trie] = load_vocab_and_trie(c);
  const auto scorer = io::load_scorer(c.resolve(c.paths.scorer));
  const auto head = io::read_head_queries(c.resolve(c.paths.head_queries));
  auto result = warm_cache(head, scorer, trie, c.offline, c.cache_min_freq);
  for (const auto& [q, why] : result.report.failures) err << "warm-cache: skipped '" << q << "': " << why << '\n';
  io::save_cache(c.resolve(c.paths.cache), result.snapshot);
  out << "warm-cache: " << result.report.stored << " entries (" << result.report.duplicates << " duplicates, "
      << result.report.below_min_freq << " below min_freq, " << result.report.failures.size() << " failed) -> "
      << c.resolve(c.paths.cache).string() << '\n';
  return kExitOk;
}

inline int query(const EngineConfig& c, const Overrides& o, std::ostream& out) {
  auto engine = Engine::load(c);
  out << to_json(engine->retrieve(o.query, c.top_k)).dump() << '\n';
  return kExitOk;
}

inline int serve(const EngineConfig& c, const Overrides& o, std::ostream& err) {
  const auto colon = o.bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--bind must be host:port");
  const auto host = o.bind.substr(0, colon);
  const int port = std::stoi(o.bind.substr(colon + 1));
  auto engine = Engine::load(c);
  Server server(*engine);
  err << "serving on " << host << ':' << port << '\n';
  return server.listen(host, port) ? kExitOk : kExitFailure;
}

inline int eval(const EngineConfig& c, std::ostream& out, std::ostream& err) {
  auto engine = Engine::load(c);
  const auto dataset = io::read_eval_dataset(c.resolve(c.paths.eval_dataset));
  const auto report = run_eval(*engine, dataset, c.eval_depth);
  const auto dir = c.resolve(c.paths.report_dir);
  fs::create_directories(dir);
  io::open_out(dir / "report.json") << report.to_jsonl();
  io::open_out(dir / "report.txt") << report.to_text();
  if (report.failures) err << "eval: " << report.failures << " queries failed to retrieve\n";
  out << report.to_text();
  return kExitOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"adgr: generative ad retrieval over a fixed commercial-intent set"};
  app.require_subcommand(1);
  detail::Overrides o;
  app.add_option("-c,--config", o.config, "Engine config file (JSON)");

  auto* build_vocab = app.add_subcommand("build-vocab", "Build the token vocabulary from the CI source");
  build_vocab->add_option("--cis", o.ci_source, "CI source file");
  build_vocab->add_option("--out", o.vocab, "Vocabulary output");
  build_vocab->add_option("--scheme", o.scheme, "whitespace | unicode-word");

  auto* fit = app.add_subcommand("fit-scorer", "Fit the n-gram scorer on (context, CI) pairs");
  fit->add_option("--pairs", o.pairs, "Training pairs");
  fit->add_option("--vocab", o.vocab, "Vocabulary");
  fit->add_option("--out", o.scorer, "Scorer output");
  fit->add_option("--order", o.order, "Tokens of history per step");
  fit->add_option("--alpha", o.alpha, "Add-alpha smoothing");

  auto* trie = app.add_subcommand("build-trie", "Normalize, deduplicate and number the CI set");
  trie->add_option("--cis", o.ci_source, "CI source file");
  trie->add_option("--vocab", o.vocab, "Vocabulary");
  trie->add_option("--out", o.ci_set, "CI set output");
  trie->add_option("--aliases", o.ci_aliases, "Alias table output");
  trie->add_option("--min-support", o.min_support, "Drop CIs listed fewer times");

  auto* assign = app.add_subcommand("assign-cis", "Assign CIs to every ad (offline profile)");
  assign->add_option("--ads", o.ads, "Ads file");
  assign->add_option("--vocab", o.vocab, "Vocabulary");
  assign->add_option("--ci-set", o.ci_set, "CI set");
  assign->add_option("--scorer", o.scorer, "Scorer");
  assign->add_option("--out", o.assignments, "Assignments output");
  assign->add_option("--cap", o.cap, "Maximum CIs per ad");

  auto* index = app.add_subcommand("build-index", "Build the CI -> ads inverted index");
  index->add_option("--assignments", o.assignments, "Assignments");
  index->add_option("--vocab", o.vocab, "Vocabulary");
  index->add_option("--ci-set", o.ci_set, "CI set");
  index->add_option("--out", o.index, "Index directory");

  auto* warm = app.add_subcommand("warm-cache", "Decode head queries offline into a cache snapshot");
  warm->add_option("--head-queries", o.head_queries, "Head queries");
  warm->add_option("--vocab", o.vocab, "Vocabulary");
  warm->add_option("--ci-set", o.ci_set, "CI set");
  warm->add_option("--scorer", o.scorer, "Scorer");
  warm->add_option("--out", o.cache, "Cache directory");
  warm->add_option("--min-freq", o.min_freq, "Minimum query frequency");

  auto* q = app.add_subcommand("query", "Retrieve ads for one query and print JSON");
  q->add_option("-q,--q", o.query, "Query text")->required();
  q->add_option("-k,--top-k", o.top_k, "Number of ads");

  auto* serve = app.add_subcommand("serve", "Serve POST /retrieve, GET /healthz, GET /stats");
  serve->add_option("--bind", o.bind, "host:port");

  auto* ev = app.add_subcommand("eval", "Evaluate HR@K, MAP and ACR on a dataset");
  ev->add_option("--dataset", o.dataset, "Eval dataset");
  ev->add_option("--out", o.report_dir, "Report directory");
  ev->add_option("--depth", o.depth, "Retrieved ads per query");

  for (auto* sub : {build_vocab, fit, trie, assign, index, warm, q, serve, ev}) {
    sub->add_option("-c,--config", o.config, "Engine config file (JSON)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    const auto c = detail::load_config(o);
    if (build_vocab->parsed()) return detail::build_vocab(c, out);
    if (fit->parsed()) return detail::fit_scorer(c, out, err);
    if (trie->parsed()) return detail::build_trie(c, out);
    if (assign->parsed()) return detail::assign_cis(c, out, err);
    if (index->parsed()) return detail::build_index(c, out);
    if (warm->parsed()) return detail::warm(c, out, err);
    if (q->parsed()) return detail::query(c, o, out);
    if (serve->parsed()) return detail::serve(c, o, err);
    if (ev->parsed()) return detail::eval(c, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"adgr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace adgr::cli
