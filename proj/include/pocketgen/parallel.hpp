#ifndef POCKETGEN_PARALLEL_HPP_
#define POCKETGEN_PARALLEL_HPP_

#include <exception>

namespace pocketgen {

// OpenMP loop over [0, n) that rethrows the first exception raised by `body`
// after the loop instead of terminating.
template <class F>
void parallel_for(int n, F&& body) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(pocketgen_parallel_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace pocketgen

#endif  // POCKETGEN_PARALLEL_HPP_
