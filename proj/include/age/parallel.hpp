#pragma once

#include <cstdint>
#include <exception>

namespace age {

/// Execution mode for per-candidate scoring loops. Both paths produce
/// bit-identical results because every candidate draws from its own seed
/// stream; the serial path is the reference the parallel one is checked
/// against.
enum class Exec { serial, parallel };

/// Runs f(0..n-1), parallel across OpenMP threads when asked. An exception
/// escaping an OpenMP region aborts the process, so worker throws are
/// captured and rethrown after the join.
template <typename F>
void pool_for(Exec exec, std::int64_t n, F&& f) {
    if (exec == Exec::parallel) {
        std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        for (std::int64_t i = 0; i < n; ++i) f(i);
    }
}

}  // namespace age
