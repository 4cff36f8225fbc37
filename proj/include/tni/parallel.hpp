#pragma once

#include <cstdint>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tni {

inline void set_thread_cap(int k) {
#ifdef _OPENMP
  if (k > 0) omp_set_num_threads(k);
#else
  (void)k;
#endif
}

inline int thread_cap() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace detail {

template <class F>
auto pairwise_sum_range(std::int64_t lo, std::int64_t hi, F& f) -> decltype(f(lo)) {
  if (hi - lo <= 8) {
    auto acc = f(lo);
    for (std::int64_t k = lo + 1; k < hi; ++k) acc += f(k);
    return acc;
  }
  const std::int64_t mid = lo + (hi - lo) / 2;
  return pairwise_sum_range(lo, mid, f) + pairwise_sum_range(mid, hi, f);
}

}  // namespace detail

/// Deterministic pairwise reduction of f(0) + ... + f(count-1). The
/// association order depends only on count, so accumulations are bitwise
/// reproducible regardless of scheduling.
template <class F>
auto pairwise_sum(std::int64_t count, F&& f) -> decltype(f(std::int64_t{0})) {
  return detail::pairwise_sum_range(0, count, f);
}

}  // namespace tni
