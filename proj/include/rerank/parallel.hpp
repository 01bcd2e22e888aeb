/*
 * Copyright 2026 The Rerank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef RERANK_PARALLEL_HPP_
#define RERANK_PARALLEL_HPP_

#include <cstddef>
#include <cstdint>
#include <exception>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rerank {

// Every parallel kernel in this library writes to disjoint per-index slots and
// reduces sequentially afterwards, so serial and parallel runs are bit-identical.
enum class ExecPolicy { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs fn(i) for i in [0, count). Iterations must be independent.
/// Exceptions thrown by workers are captured and rethrown on the calling thread.
template <class Fn>
void for_each_index(ExecPolicy policy, std::size_t count, Fn&& fn) {
#ifdef _OPENMP
  if (policy == ExecPolicy::parallel && count > 1) {
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(rerank_for_each_index_error)
        {
          if (!first_error) first_error = std::current_exception();
        }
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
#endif
  for (std::size_t i = 0; i < count; ++i) fn(i);
}

}  // namespace rerank

#endif  // RERANK_PARALLEL_HPP_
