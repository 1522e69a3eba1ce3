#include <algorithm>
#include <cmath>
#include <limits>

#include "gazesa/error.hpp"
#include "gazesa/gbdt.hpp"

namespace gazesa::gbdt {
namespace {

double midpoint(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles can round up to `hi`; keep lo <= mid < hi.
  if (!(mid < hi)) mid = lo;
  return mid;
}

}  // namespace

std::uint16_t FeatureBins::bin_of(double value) const {
  const auto it = std::lower_bound(thresholds.begin(), thresholds.end(), value);
  return static_cast<std::uint16_t>(it - thresholds.begin());
}

FeatureBins make_bins(std::span<const double> present_values, int max_bin) {
  FeatureBins out;
  if (present_values.empty()) return out;
  std::vector<double> sorted(present_values.begin(), present_values.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  for (double v : sorted) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      counts.push_back(1);
    } else {
      ++counts.back();
    }
  }

  const auto bins = static_cast<std::size_t>(max_bin);
  if (distinct.size() <= bins) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      out.thresholds.push_back(midpoint(distinct[i], distinct[i + 1]));
    }
  } else {
    // Cut after the distinct value whose cumulative count first reaches each
    // ideal boundary k * n / bins.
    const auto n = static_cast<double>(sorted.size());
    std::size_t k = 1;
    std::size_t cumulative = 0;
    for (std::size_t i = 0; i + 1 < distinct.size() && k < bins; ++i) {
      cumulative += counts[i];
      const double target = static_cast<double>(k) * n / static_cast<double>(bins);
      if (static_cast<double>(cumulative) >= target) {
        out.thresholds.push_back(midpoint(distinct[i], distinct[i + 1]));
        while (k < bins &&
               static_cast<double>(k) * n / static_cast<double>(bins) <=
                   static_cast<double>(cumulative)) {
          ++k;
        }
      }
    }
  }
  out.num_bins = out.thresholds.size() + 1;
  return out;
}

BinnedMatrix::BinnedMatrix(const Dataset& data, std::span<const std::size_t> rows, int max_bin)
    : num_rows_(rows.size()) {
  if (rows.empty()) throw Error(Error::Kind::kInvalidArgument, "cannot bin an empty row set");
  if (max_bin < 2 || max_bin > 65000) {
    throw Error(Error::Kind::kInvalidArgument, "max_bin must be in [2, 65000]");
  }
  const std::size_t features = data.features();
  feature_bins_.resize(features);
  bins_.resize(features * num_rows_);
  offsets_.assign(features + 1, 0);

  kernels::parallel_for(features, [&](std::size_t f) {
    std::vector<double> present;
    present.reserve(rows.size());
    for (std::size_t r : rows) {
      if (data.present(r, f)) present.push_back(data.value(r, f));
    }
    feature_bins_[f] = make_bins(present, max_bin);
    std::uint16_t* column = bins_.data() + f * num_rows_;
    const FeatureBins& fb = feature_bins_[f];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      column[i] = data.present(rows[i], f) ? fb.bin_of(data.value(rows[i], f)) : fb.missing_bin();
    }
  }, 4);
  for (std::size_t f = 0; f < features; ++f) {
    offsets_[f + 1] = offsets_[f] + feature_bins_[f].num_bins + 1;
  }
}

}  // namespace gazesa::gbdt
