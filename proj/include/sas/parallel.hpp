#pragma once

#include <cstdint>

namespace sas {

// Batch kernels loop over independent elements: element i owns its RNG stream
// and writes only its own output slots, so the OpenMP path is bit-identical to
// the serial reference. Keep both; tests compare them and the bench times them.
template <class Fn>
void serial_for(int64_t n, Fn&& fn) {
  for (int64_t i = 0; i < n; ++i) fn(i);
}

template <class Fn>
void parallel_for(int64_t n, bool parallel, Fn&& fn) {
  if (!parallel) {
    serial_for(n, fn);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace sas
