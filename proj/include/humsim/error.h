// Copyright 2026 The humsim Authors.
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

#ifndef HUMSIM_ERROR_H_
#define HUMSIM_ERROR_H_

#include <stdexcept>
#include <string>

namespace humsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (robot description, scene config, taxel layout, logs).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a model or config invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A named entity (link, joint, camera, object, exercise) does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation precondition (dimension mismatch, bad params).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Failure of a scenario run or grading pipeline.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace humsim

#endif  // HUMSIM_ERROR_H_
