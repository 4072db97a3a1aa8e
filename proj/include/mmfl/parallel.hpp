#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mmfl {

// Thread count policy for the OpenMP kernels. 0 keeps the runtime default.
// Kernels write per-item (or per-thread) slots and reduce in index order, so
// a fixed thread count gives bit-identical reruns.
inline int& configured_threads() {
  static int n = 0;
  return n;
}

inline void set_threads(int n) { configured_threads() = n; }

inline int effective_threads() {
#ifdef _OPENMP
  const int n = configured_threads();
  return n > 0 ? n : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mmfl
