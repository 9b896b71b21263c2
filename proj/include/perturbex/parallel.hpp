#pragma once

#include <cstddef>
#include <exception>

#ifdef PERTURBEX_HAVE_OPENMP
#include <omp.h>
#endif

namespace perturbex::par {

enum class Exec { serial, openmp };

inline int max_threads() {
#ifdef PERTURBEX_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Runs f(i) for i in [0, n). The OpenMP path requires the iterations to be
/// independent; results must be written to disjoint slots so serial and
/// parallel execution produce identical output. Exceptions are captured and
/// rethrown after the loop.
template <class F>
void for_index(std::ptrdiff_t n, Exec exec, F&& f) {
#ifdef PERTURBEX_HAVE_OPENMP
    if (exec == Exec::openmp) {
        std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
        return;
    }
#else
    (void)exec;
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
}

}  // namespace perturbex::par
