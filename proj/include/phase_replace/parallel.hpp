#pragma once

#include "phase_replace/types.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace phase_replace {

/// Data-parallel width; PHASE_REPLACE_THREADS caps it.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PHASE_REPLACE_THREADS")) {
    try {
      long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (...) {
    }
  }
  return n;
}

/// Runs fn(k) for k in [begin, end) split into contiguous blocks. fn must only
/// write to storage owned by index k.
template <typename Fn>
void parallel_for(Index begin, Index end, Fn&& fn) {
  const Index n = end - begin;
  if (n <= 0) return;
  const unsigned workers = static_cast<unsigned>(std::min<Index>(worker_count(), n));
  if (workers <= 1 || n < 64) {
    for (Index k = begin; k < end; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const Index block = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const Index lo = begin + w * block;
    const Index hi = std::min(end, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (Index k = lo; k < hi; ++k) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

/// Pairwise summation with a fixed split, so the result does not depend on
/// how the terms were produced.
template <typename Scalar>
Scalar pairwise_sum(const Scalar* data, Index n) {
  if (n <= 8) {
    Scalar s(0);
    for (Index k = 0; k < n; ++k) s += data[k];
    return s;
  }
  const Index half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::DenseBase<Derived>& v) {
  const auto evaluated = v.derived().eval();
  return pairwise_sum(evaluated.data(), evaluated.size());
}

}  // namespace phase_replace
