// Copyright 2026 The gssd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GSSD_PARALLEL_HPP_
#define GSSD_PARALLEL_HPP_

#include <cstdint>
#include <functional>

namespace gssd {

/// Number of hardware threads, at least 1.
int available_parallelism();

/// Runs body(0), ..., body(count - 1) on up to `jobs` worker threads.
///
/// Work items must be independent and write only to their own output slot;
/// under that contract the result is identical for every `jobs` value. If
/// any items throw, the exception of the smallest failing index is rethrown
/// after all workers finish, so error reporting does not depend on the
/// schedule either.
void parallel_for(std::int64_t count, int jobs,
                  const std::function<void(std::int64_t)>& body);

}  // namespace gssd

#endif  // GSSD_PARALLEL_HPP_
