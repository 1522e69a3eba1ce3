#include <gtest/gtest.h>

#include <vector>

#include "gazesa/kernels.hpp"
#include "gazesa/rng.hpp"

namespace gazesa::kernels {
namespace {

struct Signal {
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
};

Signal random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Signal s;
  for (std::size_t i = 0; i < n; ++i) {
    s.values.push_back(10.0 + rng.normal());
    s.mask.push_back(rng.bernoulli(0.9) ? 1 : 0);
  }
  return s;
}

class KernelThreads : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { set_num_threads(GetParam()); }
  void TearDown() override { set_num_threads(0); }
};

TEST_P(KernelThreads, MovingMeanMatchesSerial) {
  for (std::size_t n : {1u, 7u, 150u, 20000u}) {
    const auto s = random_signal(n, n);
    std::vector<double> a(n), b(n);
    moving_mean_serial(s.values, s.mask, 100, a);
    moving_mean_parallel(s.values, s.mask, 100, b);
    EXPECT_EQ(a, b);
  }
}

TEST_P(KernelThreads, MovingMedianMatchesSerial) {
  for (std::size_t n : {1u, 8u, 333u, 12000u}) {
    const auto s = random_signal(n, n + 1);
    std::vector<double> a(n), b(n);
    moving_median_serial(s.values, s.mask, 100, a);
    moving_median_parallel(s.values, s.mask, 100, b);
    EXPECT_EQ(a, b);
  }
}

TEST_P(KernelThreads, HistogramMatchesSerial) {
  Rng rng(5);
  const std::size_t rows = 5000, features = 6;
  std::vector<std::size_t> offsets = {0};
  std::vector<std::uint16_t> bins(rows * features);
  for (std::size_t f = 0; f < features; ++f) {
    const std::size_t nb = 3 + f * 40;
    offsets.push_back(offsets.back() + nb + 1);
    for (std::size_t r = 0; r < rows; ++r) bins[f * rows + r] = static_cast<std::uint16_t>(rng.below(nb + 1));
  }
  std::vector<double> grad(rows), hess(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    grad[r] = rng.normal();
    hess[r] = rng.uniform(0.5, 2.0);
  }
  std::vector<std::uint32_t> subset;
  for (std::uint32_t r = 0; r < rows; r += 3) subset.push_back(r);
  const BinnedView view{bins, rows, offsets};
  std::vector<HistogramBin> a(offsets.back()), b(offsets.back());
  node_histogram_serial(view, subset, grad, hess, a);
  node_histogram_parallel(view, subset, grad, hess, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].grad, b[i].grad);
    EXPECT_EQ(a[i].hess, b[i].hess);
    EXPECT_EQ(a[i].count, b[i].count);
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelThreads, ::testing::Values(1, 2, 4));

TEST(Kernels, MovingMeanOfConstantIsExact) {
  const std::vector<double> v(500, 7.1);
  const std::vector<std::uint8_t> m(500, 1);
  std::vector<double> out(500);
  moving_mean_serial(v, m, 100, out);
  for (double x : out) EXPECT_EQ(x, 7.1);
}

TEST(Kernels, MovingMeanWindowGeometry) {
  // window 4 covers offsets -2..1
  const std::vector<double> v = {1, 2, 3, 4, 5};
  const std::vector<std::uint8_t> m = {1, 1, 0, 1, 1};
  std::vector<double> out(5);
  moving_mean_serial(v, m, 4, out);
  EXPECT_DOUBLE_EQ(out[0], 1.5);            // {1, 2}
  EXPECT_DOUBLE_EQ(out[1], 1.5);            // {1, 2}
  EXPECT_EQ(out[2], 0.0);                   // masked
  EXPECT_DOUBLE_EQ(out[3], (2.0 + 4 + 5) / 3.0);
  EXPECT_DOUBLE_EQ(out[4], 4.5);            // {4, 5}
}

TEST(Kernels, MedianOfEvenCountAveragesMiddle) {
  const std::vector<double> v = {4, 1, 3, 2};
  const std::vector<std::uint8_t> m = {1, 1, 1, 1};
  std::vector<double> out(4);
  moving_median_serial(v, m, 100, out);
  for (double x : out) EXPECT_DOUBLE_EQ(x, 2.5);
}

}  // namespace
}  // namespace gazesa::kernels
