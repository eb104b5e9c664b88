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

// Umbrella header for the library (everything except the HTTP server and
// the CLI, which pull in their single-header dependencies).

#pragma once

#include "adgr/ad_index.hpp"
#include "adgr/ci_trie.hpp"
#include "adgr/decoder.hpp"
#include "adgr/engine.hpp"
#include "adgr/error.hpp"
#include "adgr/eval.hpp"
#include "adgr/io.hpp"
#include "adgr/ngram_scorer.hpp"
#include "adgr/query_cache.hpp"
#include "adgr/scorer.hpp"
#include "adgr/snapshot.hpp"
#include "adgr/text.hpp"
#include "adgr/vocab.hpp"
