#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

#include "graf/common.hpp"

namespace graf {

/// Runs fn(i) for i in [0, n). Under Exec::kParallel iterations are spread
/// over the OpenMP team; the first exception thrown by any iteration is
/// rethrown after the loop. Callers write results into pre-sized slots so the
/// output never depends on the schedule.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace graf
