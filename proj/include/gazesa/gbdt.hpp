#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gazesa/dataset.hpp"
#include "gazesa/kernels.hpp"

namespace gazesa::gbdt {

struct TrainConfig {
  int num_leaves = 100;
  double learning_rate = 0.05;
  int num_boost_round = 5000;
  int early_stopping_rounds = 100;
  double top_rate = 0.2;    // GOSS: fraction kept by largest |gradient|
  double other_rate = 0.1;  // GOSS: fraction sampled from the rest
  int max_bin = 255;
  double lambda_l2 = 1.0;
  int min_data_in_leaf = 20;
  int max_depth = 0;  // 0 = unlimited
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  // Throws Error(kInvalidArgument) on out-of-range values.
  void validate() const;
};

// ---- histograms -----------------------------------------------------------------

// Quantization of one feature. Bin b (< num_bins) holds values <= thresholds[b]
// and > thresholds[b-1]; masked values go to bin `num_bins`.
struct FeatureBins {
  std::vector<double> thresholds;  // size num_bins - 1, strictly increasing
  std::size_t num_bins = 1;

  std::uint16_t bin_of(double value) const;
  std::uint16_t missing_bin() const { return static_cast<std::uint16_t>(num_bins); }
};

// Equal-frequency boundaries over the distinct values (exact bins when there
// are at most max_bin distinct values). Thresholds sit midway between the
// neighbouring distinct values.
FeatureBins make_bins(std::span<const double> present_values, int max_bin);

class BinnedMatrix {
 public:
  BinnedMatrix() = default;
  // Bins the given rows of `data`; local row i corresponds to data row rows[i].
  BinnedMatrix(const Dataset& data, std::span<const std::size_t> rows, int max_bin);

  std::size_t rows() const { return num_rows_; }
  std::size_t features() const { return feature_bins_.size(); }
  const FeatureBins& feature(std::size_t f) const { return feature_bins_[f]; }
  std::uint16_t bin(std::size_t row, std::size_t f) const { return bins_[f * num_rows_ + row]; }
  std::size_t histogram_size() const { return offsets_.back(); }
  std::size_t offset(std::size_t f) const { return offsets_[f]; }
  kernels::BinnedView view() const { return {bins_, num_rows_, offsets_}; }

 private:
  std::size_t num_rows_ = 0;
  std::vector<FeatureBins> feature_bins_;
  std::vector<std::uint16_t> bins_;   // feature-major
  std::vector<std::size_t> offsets_;  // histogram slots per feature (num_bins + 1)
};

// ---- GOSS ------------------------------------------------------------------------

struct GossSample {
  std::vector<std::uint32_t> indices;  // ascending
  std::vector<double> weights;         // aligned with indices
};

GossSample goss_sample(std::span<const double> gradients, double top_rate, double other_rate,
                       std::uint64_t seed);

// ---- trees -------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output before shrinkage
  double cover = 0.0;  // training rows reaching the node

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at 0, children after parents

  int leaf_index(std::span<const double> values, std::span<const std::uint8_t> present) const;
  double predict(std::span<const double> values, std::span<const std::uint8_t> present) const {
    return nodes[leaf_index(values, present)].value;
  }
  std::size_t num_leaves() const;
  int depth() const;
};

// A grown tree plus the bin-space split points used to route binned rows.
struct GrownTree {
  Tree tree;
  std::vector<int> split_bin;  // per node; -1 for leaves

  int leaf_of(const BinnedMatrix& data, std::size_t row) const;
};

// Best-first growth on the sampled rows. `grad`/`hess` are indexed by local
// row and are multiplied by the sample weights. Covers are sampled-row counts.
GrownTree grow_tree(const BinnedMatrix& data, const GossSample& sample,
                    std::span<const double> grad, std::span<const double> hess,
                    const TrainConfig& config);

// ---- ensemble ------------------------------------------------------------------------

class TreeEnsemble {
 public:
  std::vector<std::string> feature_names;
  double base_score = 0.0;
  double learning_rate = 1.0;
  std::vector<Tree> trees;
  TrainConfig config;

  // Row in registry order.
  double predict(std::span<const double> values, std::span<const std::uint8_t> present) const;
  // Columns matched by name; throws Error(kRegistry) if a registry name is absent.
  std::vector<double> predict(const Dataset& data) const;
  // Column of `data` for each registry feature.
  std::vector<std::size_t> column_map(const Dataset& data) const;
};

struct TrainState {
  std::vector<double> train_rmse;  // per round, on the fitting rows
  std::vector<double> valid_l2;    // per round
  std::vector<double> valid_l1;    // per round
  int best_round = 0;
  int rounds_run = 0;
  bool early_stopping_disabled = false;
  std::vector<std::size_t> fit_rows;
  // base + eta * sum of leaf outputs for each fitting row, accumulated during
  // boosting and truncated at best_round.
  std::vector<double> train_predictions;
};

struct FitResult {
  TreeEnsemble model;
  TrainState state;
};

// Boosting on `fit_rows`, early stopping on `valid_rows` (may be empty).
FitResult fit(const Dataset& data, const TrainConfig& config, std::span<const std::size_t> fit_rows,
              std::span<const std::size_t> valid_rows);

// Seeded shuffle of `rows`; the last `fraction` become the validation split.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> validation_split(
    std::span<const std::size_t> rows, double fraction, std::uint64_t seed);

// fit() on all rows with the internal validation split.
FitResult fit(const Dataset& data, const TrainConfig& config);

}  // namespace gazesa::gbdt
