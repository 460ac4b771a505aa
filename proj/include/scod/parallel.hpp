#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scod {

// Parallel kernels are written against a fixed chunk decomposition: work is
// split into index-ordered chunks, chunk results are combined serially in
// chunk order. Output is therefore identical for any thread count, and
// identical to the serial reference path.

inline constexpr std::size_t kChunkSize = 1024;

/// When false, every kernel below runs its serial reference path.
/// Flipped by tests and the benchmark to compare the two.
inline bool& parallel_enabled() {
    static bool enabled = true;
    return enabled;
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
    if (!parallel_enabled()) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

/// Sum of f(i) for i in [0, n). Chunk partial sums are accumulated in
/// index order, so the result does not depend on the thread count.
template <typename F>
double chunked_sum(std::size_t n, F&& f) {
    if (n == 0) return 0.0;
    if (!parallel_enabled()) {
        // Serial reference: same chunking, same summation order.
        double total = 0.0;
        for (std::size_t c = 0; c * kChunkSize < n; ++c) {
            const std::size_t lo = c * kChunkSize;
            const std::size_t hi = std::min(n, lo + kChunkSize);
            double part = 0.0;
            for (std::size_t i = lo; i < hi; ++i) part += f(i);
            total += part;
        }
        return total;
    }
    const std::size_t num_chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<double> partials(num_chunks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long c = 0; c < static_cast<long long>(num_chunks); ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * kChunkSize;
        const std::size_t hi = std::min(n, lo + kChunkSize);
        double part = 0.0;
        for (std::size_t i = lo; i < hi; ++i) part += f(i);
        partials[static_cast<std::size_t>(c)] = part;
    }
    double total = 0.0;
    for (double p : partials) total += p;
    return total;
}

/// Element-wise accumulation of vector-valued terms, chunk-deterministic.
/// `f(i, acc)` adds term i into acc.
template <typename F>
std::vector<double> chunked_vector_sum(std::size_t n, std::size_t dim, F&& f) {
    std::vector<double> total(dim, 0.0);
    if (n == 0) return total;
    const std::size_t num_chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<std::vector<double>> partials(num_chunks);
    auto run_chunk = [&](std::size_t c) {
        const std::size_t lo = c * kChunkSize;
        const std::size_t hi = std::min(n, lo + kChunkSize);
        std::vector<double> part(dim, 0.0);
        for (std::size_t i = lo; i < hi; ++i) f(i, part);
        partials[c] = std::move(part);
    };
    if (!parallel_enabled()) {
        for (std::size_t c = 0; c < num_chunks; ++c) run_chunk(c);
    } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (long long c = 0; c < static_cast<long long>(num_chunks); ++c)
            run_chunk(static_cast<std::size_t>(c));
    }
    for (const auto& part : partials)
        for (std::size_t k = 0; k < dim; ++k) total[k] += part[k];
    return total;
}

}  // namespace scod
