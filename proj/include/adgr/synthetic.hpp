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

// Synthetic corpora for fixtures and benchmarks.
//
// make_fixture_corpus builds a small themed ad world (products, occasions,
// services per category) where every ad has a known set of intended CIs
// and every eval query has a known set of relevant ads. make_scale_corpus
// builds a large random CI set for latency measurements.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "adgr/ad_index.hpp"
#include "adgr/io.hpp"
#include "adgr/query_cache.hpp"

namespace adgr::synthetic {

struct Corpus {
  std::vector<std::string> ci_texts;
  std::vector<Ad> ads;
  std::vector<io::RawPair> pairs;
  std::vector<HeadQuery> head_queries;
  std::vector<io::EvalQuery> eval;
};

struct Category {
  std::vector<std::string> products;
  std::vector<std::string> actions;
  std::vector<std::string> occasions;
  std::vector<std::string> services;
  std::vector<std::string> brands;
};

inline std::vector<Category> fixture_categories() {
  return {
      {{"flowers", "roses", "tulips", "orchids", "bouquet"},
       {"buy", "order", "send"},
       {"mother's day", "valentine's day", "birthday", "wedding"},
       {"delivery", "shop", "prices"},
       {"BloomCo", "PetalPost", "FloraNow", "Stemworks"}},
      {{"sneakers", "boots", "sandals", "heels", "loafers"},
       {"buy", "shop", "discount"},
       {"running", "hiking", "winter", "summer"},
       {"store", "sale", "sizes"},
       {"StrideLab", "Footnote", "SoleMate", "Kickbox"}},
      {{"laptop", "notebook", "chromebook", "ultrabook", "tablet"},
       {"buy", "compare", "cheap"},
       {"gaming", "student", "business", "travel"},
       {"deals", "repair", "reviews"},
       {"Compute", "ByteWorks", "Lumen", "Keystone"}},
      {{"flights", "hotels", "cruises", "resorts", "hostels"},
       {"book", "cheap", "compare"},
       {"honeymoon", "family", "weekend", "summer"},
       {"deals", "packages", "tickets"},
       {"Wayfare", "Jetset", "Roamly", "Harbor"}},
      {{"coffee", "espresso", "tea", "matcha", "beans"},
       {"buy", "order", "subscribe"},
       {"organic", "decaf", "gift", "office"},
       {"subscription", "shop", "delivery"},
       {"Roastery", "Brewline", "Cuppa", "Kettle"}},
      {{"sofa", "mattress", "desk", "chair", "bookshelf"},
       {"buy", "cheap", "custom"},
       {"office", "kids", "outdoor", "small"},
       {"store", "delivery", "sale"},
       {"Homestead", "Oakline", "Nestwell", "Loft"}},
      {{"smartphone", "headphones", "smartwatch", "charger", "earbuds"},
       {"buy", "compare", "unlocked"},
       {"wireless", "waterproof", "kids", "refurbished"},
       {"deals", "repair", "reviews"},
       {"Pocketly", "Sonique", "Voltra", "Echo"}},
      {{"yoga", "gym", "pilates", "crossfit", "boxing"},
       {"join", "try", "cheap"},
       {"beginner", "online", "morning", "home"},
       {"classes", "membership", "studio"},
       {"FlexHouse", "Corewell", "Pulse", "Ironside"}},
      {{"puppy", "kitten", "aquarium", "parrot", "hamster"},
       {"adopt", "buy", "feed"},
       {"healthy", "indoor", "small", "senior"},
       {"food", "supplies", "vet"},
       {"PawPal", "Whiskers", "Fetch", "Burrow"}},
      {{"guitar", "piano", "violin", "drums", "ukulele"},
       {"learn", "buy", "rent"},
       {"acoustic", "electric", "kids", "beginner"},
       {"lessons", "store", "repair"},
       {"Fretwise", "Keynote", "Strum", "Cadence"}},
  };
}

// CIs of a category that mention `product`.
inline std::vector<std::string> product_cis(const Category& c, const std::string& product) {
  std::vector<std::string> out;
  for (const auto& a : c.actions) out.push_back(a + " " + product);
  for (const auto& a : c.actions) out.push_back(a + " " + product + " online");
  for (const auto& s : c.services) out.push_back(product + " " + s);
  for (const auto& o : c.occasions) out.push_back(o + " " + product);
  for (const auto& o : c.occasions) out.push_back(o + " " + product + " " + c.services.front());
  out.push_back("local " + product + " " + c.services.front());
  return out;
}

// With `holdout` set, eval queries are phrased differently from every
// training query and a share of ads cross-sell a second product, so the
// eval measures generalization rather than recall of memorized pairs.
inline Corpus make_fixture_corpus(std::uint64_t seed = 20240601, bool holdout = false,
                                  std::size_t ads_per_product = 5) {
  std::mt19937_64 rng(seed);
  Corpus corpus;
  std::set<std::string> ci_seen;
  const auto cats = fixture_categories();
  std::size_t ad_counter = 0;

  for (std::size_t ci = 0; ci < cats.size(); ++ci) {
    const auto& c = cats[ci];
    for (std::size_t pi = 0; pi < c.products.size(); ++pi) {
      const auto& p = c.products[pi];
      const auto cis = product_cis(c, p);
      for (const auto& t : cis) {
        if (ci_seen.insert(t).second) corpus.ci_texts.push_back(t);
      }

      std::vector<std::string> product_ads;
      for (std::size_t k = 0; k < ads_per_product; ++k) {
        Ad ad;
        char id[32];
        std::snprintf(id, sizeof id, "ad%04zu", ad_counter++);
        ad.ad_id = id;
        const auto& brand = c.brands[rng() % c.brands.size()];
        const auto& service = c.services[rng() % c.services.size()];
        const auto& occasion = c.occasions[rng() % c.occasions.size()];
        const auto& action = c.actions[rng() % c.actions.size()];
        ad.title = brand + " " + p + " " + service;
        ad.landing_page = "https://" + brand + ".example/" + p;
        ad.materials = occasion + " " + p + ", " + action + " online";
        std::vector<std::string> intended = cis;
        if (holdout && rng() % 10 < 3) {
          const auto& other = c.products[(pi + 1 + rng() % (c.products.size() - 1)) % c.products.size()];
          ad.materials += ", also " + other;
          auto extra = product_cis(c, other);
          std::shuffle(extra.begin(), extra.end(), rng);
          intended.insert(intended.end(), extra.begin(), extra.begin() + 5);
        }
        for (const auto& t : intended) corpus.pairs.push_back({ad.context(), t});
        product_ads.push_back(ad.ad_id);
        corpus.ads.push_back(std::move(ad));
      }

      // Three eval queries per product, each clicking a handful of its CIs.
      const std::vector<std::string> queries = {
          c.actions[pi % c.actions.size()] + " " + p,
          p + " for " + c.occasions[pi % c.occasions.size()],
          p + " " + c.services[pi % c.services.size()] + " near me",
      };
      const std::vector<std::string> train_queries = {p, c.actions[(pi + 1) % c.actions.size()] + " " + p + " online"};
      for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        auto clicked = cis;
        std::shuffle(clicked.begin(), clicked.end(), rng);
        clicked.resize(6);
        const auto& click_query = holdout ? train_queries[qi % train_queries.size()] : queries[qi];
        for (const auto& t : clicked) corpus.pairs.push_back({click_query, t});
        corpus.eval.push_back({queries[qi], product_ads});
        // Head queries: the first query of every product, with a
        // frequency that falls off across products.
        if (qi == 0) corpus.head_queries.push_back({queries[qi], 1000 / (pi + 1)});
      }
    }
  }
  // Tail queries nobody clicked on.
  corpus.head_queries.push_back({"rare tail query", 1});
  corpus.eval.push_back({"zebra quantum velvet", {}});
  return corpus;
}

// Pronounceable pseudo-words, unique.
inline std::vector<std::string> make_words(std::size_t n, std::mt19937_64& rng) {
  static const char* kOnsets[] = {"b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t",
                                  "v", "w", "z", "br", "ch", "cr", "dr", "fl", "gr", "pl", "sh", "st", "tr"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ea", "io", "ou"};
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(n);
  while (out.size() < n) {
    std::string w;
    const int syl = 2 + static_cast<int>(rng() % 3);
    for (int s = 0; s < syl; ++s) {
      w += kOnsets[rng() % std::size(kOnsets)];
      w += kVowels[rng() % std::size(kVowels)];
    }
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

struct ScaleCorpus {
  std::vector<std::string> ci_texts;
  std::vector<io::RawPair> pairs;
  std::vector<std::string> probe_queries;  // not used as training contexts
};

// `n_cis` unique CIs of 2..5 words (mean 3.5) over a Zipf-distributed
// vocabulary, `n_pairs` (context, CI) pairs whose contexts share words with
// their CI, and `n_probes` fresh queries.
inline ScaleCorpus make_scale_corpus(std::size_t n_cis, std::size_t n_pairs, std::size_t n_probes,
                                     std::uint64_t seed = 7, std::size_t n_words = 20000) {
  std::mt19937_64 rng(seed);
  const auto words = make_words(n_words, rng);
  std::vector<double> weights(n_words);
  for (std::size_t i = 0; i < n_words; ++i) weights[i] = 1.0 / std::pow(static_cast<double>(i + 1), 0.9);
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());

  ScaleCorpus out;
  std::unordered_set<std::string> seen;
  std::vector<std::vector<std::size_t>> ci_words;
  while (out.ci_texts.size() < n_cis) {
    const std::size_t len = 2 + rng() % 4;
    std::vector<std::size_t> ids(len);
    std::string text;
    for (std::size_t k = 0; k < len; ++k) {
      ids[k] = zipf(rng);
      if (k) text += ' ';
      text += words[ids[k]];
    }
    if (seen.insert(text).second) {
      out.ci_texts.push_back(std::move(text));
      ci_words.push_back(std::move(ids));
    }
  }

  std::vector<double> ci_weights(n_cis);
  for (std::size_t i = 0; i < n_cis; ++i) ci_weights[i] = 1.0 / std::pow(static_cast<double>(i + 1), 0.6);
  std::discrete_distribution<std::size_t> ci_pick(ci_weights.begin(), ci_weights.end());
  auto context_for = [&](std::size_t ci) {
    const auto& ids = ci_words[ci];
    std::string ctx = words[ids[rng() % ids.size()]];
    ctx += ' ';
    ctx += words[ids[rng() % ids.size()]];
    ctx += ' ';
    ctx += words[zipf(rng)];
    return ctx;
  };
  out.pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto ci = ci_pick(rng);
    out.pairs.push_back({context_for(ci), out.ci_texts[ci]});
  }
  for (std::size_t i = 0; i < n_probes; ++i) out.probe_queries.push_back(context_for(rng() % n_cis));
  return out;
}

}  // namespace adgr::synthetic
