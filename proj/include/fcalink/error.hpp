// Copyright 2026 The fcalink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fcalink {

// Base of every error the library throws. The C API maps each subclass onto a
// status code, and the CLI maps status codes onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: flags, config values, shape mismatches, missing stages.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent data (parse errors, invariant violations).
class DataError : public Error {
 public:
  using Error::Error;
};

// A combinatorial budget was exhausted. `partial_count` reports how far the
// computation got so the caller can retry with a larger budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::size_t partial_count)
      : Error(what), partial_count_(partial_count) {}
  std::size_t partial_count() const noexcept { return partial_count_; }

 private:
  std::size_t partial_count_;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fcalink
