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

// Writes the synthetic fixture corpus (CI source, ads, training pairs,
// head queries, eval dataset) and a matching engine config.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adgr/io.hpp"
#include "adgr/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic fixture corpus"};
  std::string out_dir = "data/fixture";
  std::uint64_t seed = 20240601;
  app.add_option("--out", out_dir, "Output directory");
  bool holdout = false;
  app.add_option("--seed", seed, "RNG seed");
  app.add_flag("--holdout", holdout, "Hold eval phrasings out of the training pairs");
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  using nlohmann::json;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const auto corpus = adgr::synthetic::make_fixture_corpus(seed, holdout);

  {
    auto out = adgr::io::open_out(dir / "cis.jsonl");
    for (const auto& t : corpus.ci_texts) out << json{{"text", t}}.dump() << '\n';
  }
  {
    auto out = adgr::io::open_out(dir / "ads.jsonl");
    for (const auto& a : corpus.ads) {
      out << json{{"ad_id", a.ad_id}, {"title", a.title}, {"landing_page", a.landing_page}, {"materials", a.materials}}
                 .dump()
          << '\n';
    }
  }
  {
    auto out = adgr::io::open_out(dir / "pairs.jsonl");
    for (const auto& p : corpus.pairs) out << json{{"context", p.context}, {"ci", p.ci}}.dump() << '\n';
  }
  {
    auto out = adgr::io::open_out(dir / "head_queries.jsonl");
    for (const auto& h : corpus.head_queries) out << json{{"query", h.query}, {"freq", h.freq}}.dump() << '\n';
  }
  {
    auto out = adgr::io::open_out(dir / "eval.jsonl");
    for (const auto& e : corpus.eval) {
      out << json{{"query", e.query}, {"relevant_ad_ids", e.relevant_ad_ids}}.dump() << '\n';
    }
  }
  std::cout << corpus.ci_texts.size() << " CIs, " << corpus.ads.size() << " ads, " << corpus.pairs.size()
            << " pairs, " << corpus.head_queries.size() << " head queries, " << corpus.eval.size()
            << " eval queries -> " << dir.string() << '\n';
  return 0;
}
