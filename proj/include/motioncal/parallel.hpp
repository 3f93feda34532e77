#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace motioncal {

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Map f over [0, n) into a dense vector, one slot per index. Each slot is
// written exactly once, so results are bit-identical to the serial loop for
// any thread count. Reductions over the output stay serial by design.
template <typename T, typename F>
std::vector<T> map_indices(std::size_t n, F&& f, bool parallel = true) {
  std::vector<T> out(n);
  if (parallel && n > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
    }
    return out;
#endif
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

}  // namespace motioncal
