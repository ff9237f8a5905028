#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace selfreg {

/// Selects between the serial reference loop and the OpenMP kernel.
/// Both paths produce bit-identical results; the serial one is kept for tests
/// and for callers that are already inside a parallel region.
enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, n). Exceptions thrown by body are captured per
/// index and the one with the lowest index is rethrown after the loop.
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
    if (exec == Execution::serial || n < 2 || omp_in_parallel()) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace selfreg
