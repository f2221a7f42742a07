#pragma once

#include <cstddef>
#include <functional>

namespace tvspec {

/// Runs fn(0) .. fn(n-1) on up to `threads` threads, each index exactly once.
/// The first exception by index order is rethrown after all work finishes.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace tvspec
