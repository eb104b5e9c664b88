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

#include <stdexcept>
#include <string>

namespace adgr {

// Base of every error raised by the library. Subclasses name the failure
// category; the message carries the detail.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: empty corpora, invalid decode params, malformed files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data violates a precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Prefix is not a path in the CI trie.
class InvalidPrefix : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// CI assignment for a single ad failed; ad_id() names it.
class AssignmentError : public Error {
 public:
  AssignmentError(std::string ad_id, const std::string& what)
      : Error("assignment failed for ad '" + ad_id + "': " + what),
        ad_id_(std::move(ad_id)) {}
  const std::string& ad_id() const noexcept { return ad_id_; }

 private:
  std::string ad_id_;
};

// Index construction referenced an invalid CiId.
class IndexBuildError : public Error {
 public:
  using Error::Error;
};

// Duplicate add or missing remove.
class IdempotencyError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

// Failure inside engine::retrieve, tagged with the pipeline stage.
class RetrievalError : public Error {
 public:
  RetrievalError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace adgr
