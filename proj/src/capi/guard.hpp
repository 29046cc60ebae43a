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

#include <cstring>
#include <new>
#include <string>

#include "fcalink/error.hpp"
#include "fcalink/fcalink.h"

namespace fcalink::capi {

void set_error(const std::string& message, std::size_t partial = 0);
void clear_error();

// Runs `f`, translating the library's exceptions into status codes.
template <class F>
fcl_status guard(F&& f) noexcept {
  try {
    f();
    return FCL_OK;
  } catch (const UsageError& e) {
    set_error(e.what());
    return FCL_USAGE_ERROR;
  } catch (const DataError& e) {
    set_error(e.what());
    return FCL_DATA_ERROR;
  } catch (const BudgetExceeded& e) {
    set_error(e.what(), e.partial_count());
    return FCL_BUDGET_EXCEEDED;
  } catch (const DivergenceError& e) {
    set_error(e.what());
    return FCL_DIVERGED;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return FCL_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FCL_INTERNAL_ERROR;
  } catch (...) {
    set_error("unknown error");
    return FCL_INTERNAL_ERROR;
  }
}

inline void require_arg(const void* p, const char* name) {
  if (p == nullptr) throw UsageError(std::string(name) + " must not be NULL");
}

inline char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace fcalink::capi
