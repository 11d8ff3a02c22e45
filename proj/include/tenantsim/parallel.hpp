#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace tenantsim {

/// Every data-parallel kernel takes an Exec. The serial path is the
/// reference: results are written by index, so both paths must agree bit for
/// bit regardless of thread count.
enum class Exec { serial, parallel };

template <class F>
void for_each_index(Exec exec, std::size_t n, F&& body) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tenantsim
