#include <algorithm>
#include <cmath>
#include <numeric>

#include "gazesa/error.hpp"
#include "gazesa/gbdt.hpp"
#include "gazesa/rng.hpp"

namespace gazesa::gbdt {

GossSample goss_sample(std::span<const double> gradients, double top_rate, double other_rate,
                       std::uint64_t seed) {
  if (!(top_rate > 0.0) || !(other_rate > 0.0) || top_rate + other_rate > 1.0 + 1e-12) {
    throw Error(Error::Kind::kInvalidArgument, "GOSS needs 0 < a, 0 < b, a + b <= 1");
  }
  const std::size_t n = gradients.size();
  GossSample out;
  const auto top_n = static_cast<std::size_t>(std::ceil(top_rate * static_cast<double>(n) - 1e-9));
  const auto other_n =
      static_cast<std::size_t>(std::ceil(other_rate * static_cast<double>(n) - 1e-9));
  if (top_n + other_n >= n) {
    out.indices.resize(n);
    std::iota(out.indices.begin(), out.indices.end(), 0u);
    out.weights.assign(n, 1.0);
    return out;
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::fabs(gradients[a]) > std::fabs(gradients[b]);
  });

  std::vector<std::uint32_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top_n), order.end());
  std::sort(rest.begin(), rest.end());
  Rng rng(seed);
  // partial Fisher-Yates: the first other_n slots become the sample
  for (std::size_t i = 0; i < other_n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(rest.size() - i));
    std::swap(rest[i], rest[j]);
  }

  const double small_weight = (1.0 - top_rate) / other_rate;
  std::vector<std::pair<std::uint32_t, double>> kept;
  kept.reserve(top_n + other_n);
  for (std::size_t i = 0; i < top_n; ++i) kept.emplace_back(order[i], 1.0);
  for (std::size_t i = 0; i < other_n; ++i) kept.emplace_back(rest[i], small_weight);
  std::sort(kept.begin(), kept.end());
  for (const auto& [idx, w] : kept) {
    out.indices.push_back(idx);
    out.weights.push_back(w);
  }
  return out;
}

}  // namespace gazesa::gbdt
