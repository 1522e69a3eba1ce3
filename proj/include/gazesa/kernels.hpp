#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial
// reference that the tests compare against bit for bit; the parallel versions
// never reorder a floating-point reduction, so the results are identical for
// any thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gazesa::kernels {

// Centered moving mean over the usable entries of `values` (mask != 0), window
// `window` samples truncated at the edges; offsets [-window/2, window - window/2 - 1].
// Output is 0 where mask == 0. The window mean is anchored on its first usable
// value so constant input comes back unchanged.
void moving_mean_serial(std::span<const double> values, std::span<const std::uint8_t> mask,
                        std::size_t window, std::span<double> out);
void moving_mean_parallel(std::span<const double> values, std::span<const std::uint8_t> mask,
                          std::size_t window, std::span<double> out);

// Centered moving median with the same window geometry. Even counts take the
// mean of the two middle values.
void moving_median_serial(std::span<const double> values, std::span<const std::uint8_t> mask,
                          std::size_t window, std::span<double> out);
void moving_median_parallel(std::span<const double> values, std::span<const std::uint8_t> mask,
                            std::size_t window, std::span<double> out);

// Gradient/hessian histogram of one node. `bins` is feature-major:
// bins[f * num_rows + row]. Output layout: offsets[f] .. offsets[f+1] per feature.
struct HistogramBin {
  double grad = 0.0;
  double hess = 0.0;
  std::uint32_t count = 0;
};

struct BinnedView {
  std::span<const std::uint16_t> bins;
  std::size_t num_rows = 0;
  std::span<const std::size_t> offsets;  // size num_features + 1
};

void node_histogram_serial(const BinnedView& data, std::span<const std::uint32_t> rows,
                           std::span<const double> grad, std::span<const double> hess,
                           std::span<HistogramBin> out);
void node_histogram_parallel(const BinnedView& data, std::span<const std::uint32_t> rows,
                             std::span<const double> grad, std::span<const double> hess,
                             std::span<HistogramBin> out);

// Runs fn(i) for i in [0, n) across threads when n is large enough to pay for
// the fork; fn must write only to slot i.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_parallel = 2) {
  if (n < min_parallel) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(n); ++i) fn(static_cast<std::size_t>(i));
}

// Sets the OpenMP thread count; 0 leaves the runtime default.
void set_num_threads(int threads);
int max_threads();

}  // namespace gazesa::kernels
