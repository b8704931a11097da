#pragma once

#include <cstddef>
#include <vector>

namespace ksv {

/// Worker threads used by cell loops inside the library (no-op without OpenMP).
void set_thread_count(int threads);
int thread_count();

/// Sums body(row) over rows. Partial sums are combined in row order, so the
/// result does not depend on the number of threads.
template <class Body>
double row_sum(std::size_t rows, Body&& body) {
    std::vector<double> partial(rows, 0.0);
    const long long count = static_cast<long long>(rows);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (long long r = 0; r < count; ++r) partial[static_cast<std::size_t>(r)] = body(static_cast<std::size_t>(r));
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

template <class Body>
void for_rows(std::size_t rows, Body&& body) {
    const long long count = static_cast<long long>(rows);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (long long r = 0; r < count; ++r) body(static_cast<std::size_t>(r));
}

}  // namespace ksv
