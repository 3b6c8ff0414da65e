#pragma once

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <vector>

namespace awsde {

enum class Execution { serial, parallel };

struct ExecutionPolicy {
  Execution mode = Execution::parallel;
  int threads = 0;  // 0: OpenMP default

  static ExecutionPolicy serial() { return {Execution::serial, 1}; }
};

inline constexpr std::int64_t path_block = 256;

inline int worker_count(const ExecutionPolicy& policy) {
  if (policy.mode == Execution::serial) return 1;
  return policy.threads > 0 ? policy.threads : omp_get_max_threads();
}

// Computes one Result per path and hands them to `reduce` strictly in path
// order. Paths are processed in fixed blocks: within a block `compute` runs
// in parallel, then the block is reduced serially, so any floating-point
// accumulation in `reduce` is identical for every worker count.
template <class Result, class Compute, class Reduce>
void for_each_path(std::int64_t paths, const ExecutionPolicy& policy, Compute&& compute,
                   Reduce&& reduce) {
  std::vector<Result> block(static_cast<std::size_t>(std::min(paths, path_block)));
  const int workers = worker_count(policy);
  for (std::int64_t start = 0; start < paths; start += path_block) {
    const std::int64_t count = std::min(path_block, paths - start);
    if (workers <= 1) {
      for (std::int64_t i = 0; i < count; ++i) compute(start + i, block[static_cast<std::size_t>(i)]);
    } else {
      std::exception_ptr error;
#pragma omp parallel for schedule(static) num_threads(workers)
      for (std::int64_t i = 0; i < count; ++i) {
        try {
          compute(start + i, block[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(awsde_path_error)
          if (!error) error = std::current_exception();
        }
      }
      if (error) std::rethrow_exception(error);
    }
    for (std::int64_t i = 0; i < count; ++i) reduce(start + i, block[static_cast<std::size_t>(i)]);
  }
}

}  // namespace awsde
