#pragma once

#include <cstdint>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace midas {

// Index-parallel loop. Every iteration must write only to slots owned by its
// own index; with that discipline the result is identical for any thread
// count, including the serial fallback. Entering an OpenMP region costs about
// a microsecond even at one thread, which dwarfs the small per-timestep
// matrix products, so single-thread runs skip the region entirely.
template <typename F>
void parallel_for(int64_t n, F&& body) {
#ifdef _OPENMP
    if (omp_get_max_threads() > 1 && n > 1) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#endif
    for (int64_t i = 0; i < n; ++i) body(i);
}

template <typename F>
void serial_for(int64_t n, F&& body) {
    for (int64_t i = 0; i < n; ++i) body(i);
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace midas
