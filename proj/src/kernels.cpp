#include "gazesa/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace gazesa::kernels {
namespace {

struct Window {
  std::size_t lo;
  std::size_t hi;  // exclusive
};

Window window_at(std::size_t i, std::size_t n, std::size_t window) {
  const std::size_t before = window / 2;
  const std::size_t after = window - before;  // includes i itself
  const std::size_t lo = i >= before ? i - before : 0;
  const std::size_t hi = std::min(n, i + after);
  return {lo, hi};
}

double window_mean(std::span<const double> values, std::span<const std::uint8_t> mask, Window w) {
  bool anchored = false;
  double anchor = 0.0;
  double offset = 0.0;
  std::size_t count = 0;
  for (std::size_t k = w.lo; k < w.hi; ++k) {
    if (!mask[k]) continue;
    if (!anchored) {
      anchor = values[k];
      anchored = true;
    }
    offset += values[k] - anchor;
    ++count;
  }
  return count ? anchor + offset / static_cast<double>(count) : 0.0;
}

double median_of_sorted(const std::vector<double>& sorted) {
  const std::size_t m = sorted.size();
  if (m == 0) return 0.0;
  if (m % 2 == 1) return sorted[m / 2];
  const double a = sorted[m / 2 - 1];
  const double b = sorted[m / 2];
  return a == b ? a : 0.5 * (a + b);
}

void median_chunk(std::span<const double> values, std::span<const std::uint8_t> mask,
                  std::size_t window, std::size_t first, std::size_t last, std::span<double> out) {
  const std::size_t n = values.size();
  std::vector<double> sorted;
  sorted.reserve(window + 1);
  Window current = window_at(first, n, window);
  for (std::size_t k = current.lo; k < current.hi; ++k) {
    if (mask[k]) sorted.push_back(values[k]);
  }
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = first; i < last; ++i) {
    const Window next = window_at(i, n, window);
    for (std::size_t k = current.lo; k < next.lo; ++k) {
      if (!mask[k]) continue;
      sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), values[k]));
    }
    for (std::size_t k = current.hi; k < next.hi; ++k) {
      if (!mask[k]) continue;
      sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), values[k]), values[k]);
    }
    current = next;
    out[i] = mask[i] ? median_of_sorted(sorted) : 0.0;
  }
}

void accumulate_feature(const BinnedView& data, std::size_t f, std::span<const std::uint32_t> rows,
                        std::span<const double> grad, std::span<const double> hess,
                        std::span<HistogramBin> out) {
  const std::uint16_t* column = data.bins.data() + f * data.num_rows;
  HistogramBin* hist = out.data() + data.offsets[f];
  const std::size_t width = data.offsets[f + 1] - data.offsets[f];
  std::fill(hist, hist + width, HistogramBin{});
  for (std::uint32_t r : rows) {
    HistogramBin& b = hist[column[r]];
    b.grad += grad[r];
    b.hess += hess[r];
    ++b.count;
  }
}

}  // namespace

void moving_mean_serial(std::span<const double> values, std::span<const std::uint8_t> mask,
                        std::size_t window, std::span<double> out) {
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = mask[i] ? window_mean(values, mask, window_at(i, n, window)) : 0.0;
  }
}

void moving_mean_parallel(std::span<const double> values, std::span<const std::uint8_t> mask,
                          std::size_t window, std::span<double> out) {
  const auto n = static_cast<long long>(values.size());
#pragma omp parallel for schedule(static) if (n > 20000)
  for (long long i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = mask[u] ? window_mean(values, mask, window_at(u, values.size(), window)) : 0.0;
  }
}

void moving_median_serial(std::span<const double> values, std::span<const std::uint8_t> mask,
                          std::size_t window, std::span<double> out) {
  const std::size_t n = values.size();
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) {
      out[i] = 0.0;
      continue;
    }
    const Window w = window_at(i, n, window);
    buf.clear();
    for (std::size_t k = w.lo; k < w.hi; ++k) {
      if (mask[k]) buf.push_back(values[k]);
    }
    std::sort(buf.begin(), buf.end());
    out[i] = median_of_sorted(buf);
  }
}

void moving_median_parallel(std::span<const double> values, std::span<const std::uint8_t> mask,
                            std::size_t window, std::span<double> out) {
  const std::size_t n = values.size();
  if (n == 0) return;
  constexpr std::size_t kChunk = 4096;
  const auto chunks = static_cast<long long>((n + kChunk - 1) / kChunk);
#pragma omp parallel for schedule(static) if (chunks > 4)
  for (long long c = 0; c < chunks; ++c) {
    const std::size_t first = static_cast<std::size_t>(c) * kChunk;
    median_chunk(values, mask, window, first, std::min(n, first + kChunk), out);
  }
}

void node_histogram_serial(const BinnedView& data, std::span<const std::uint32_t> rows,
                           std::span<const double> grad, std::span<const double> hess,
                           std::span<HistogramBin> out) {
  const std::size_t features = data.offsets.size() - 1;
  for (std::size_t f = 0; f < features; ++f) accumulate_feature(data, f, rows, grad, hess, out);
}

void node_histogram_parallel(const BinnedView& data, std::span<const std::uint32_t> rows,
                             std::span<const double> grad, std::span<const double> hess,
                             std::span<HistogramBin> out) {
  const auto features = static_cast<long long>(data.offsets.size() - 1);
  const bool worth_it = rows.size() * static_cast<std::size_t>(features) > 200000;
#pragma omp parallel for schedule(static) if (worth_it)
  for (long long f = 0; f < features; ++f) {
    accumulate_feature(data, static_cast<std::size_t>(f), rows, grad, hess, out);
  }
}

void set_num_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace gazesa::kernels
