#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazesa/dataset.hpp"
#include "gazesa/gbdt.hpp"
#include "gazesa/shap.hpp"

namespace gazesa::eval {

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  double corr = 0.0;
  bool corr_degenerate = false;  // a constant side; corr reported as 0
  std::size_t n = 0;
};

// Root mean squared error, mean absolute error and Pearson correlation.
// Throws Error(kInvalidArgument) on empty or unequal inputs.
Metrics metrics(std::span<const double> y, std::span<const double> y_hat);

// ---- folds -------------------------------------------------------------------------

struct FoldPlan {
  std::uint64_t seed = 0;
  std::size_t num_rows = 0;
  bool grouped = false;
  std::vector<std::vector<std::size_t>> folds;  // each ascending

  // Seeded shuffle; the row at shuffled position i goes to fold i % k, so fold
  // sizes differ by at most one and depend only on (n, k, seed).
  static FoldPlan make(std::size_t n, int k, std::uint64_t seed);
  // Same, shuffling participants instead of rows; every row of a participant
  // lands in one fold.
  static FoldPlan by_participant(const Dataset& data, int k, std::uint64_t seed);

  std::vector<std::size_t> training_rows(std::size_t fold) const;
};

enum class ModelKind { kGbdt, kLinear, kTree };
const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct CvOptions {
  int folds = 10;
  std::uint64_t seed = 0;
  bool group_by_participant = false;
  ModelKind model = ModelKind::kGbdt;
  bool compute_shap = false;  // gbdt only: out-of-fold explanations
};

struct FoldResult {
  std::vector<std::size_t> rows;
  std::vector<double> predictions;  // aligned with rows
  Metrics metrics;
  int rounds = 0;       // boosting rounds kept (gbdt)
  bool ridge = false;   // linear baseline fell back to ridge
};

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // standard error across folds
};

struct EvalReport {
  std::string model;
  std::vector<std::string> features;
  std::uint64_t seed = 0;
  bool grouped = false;
  gbdt::TrainConfig config;
  std::vector<FoldResult> folds;
  Metrics pooled;  // over all held-out predictions
  Summary rmse, mae, corr;
  std::vector<double> predictions;  // out-of-fold prediction per dataset row
  bool ridge_fallback = false;
  std::vector<shap::Explanation> shap;  // per dataset row when requested
};

// Throws Error(kInvalidArgument) when fewer than 20 rows or unlabeled rows.
EvalReport cross_validate(const Dataset& data, const gbdt::TrainConfig& config,
                          const CvOptions& options);

// ---- feature selection ----------------------------------------------------------------

struct CurvePoint {
  int k = 0;
  std::string feature_added;
  Metrics pooled;
  Summary rmse, mae, corr;
};

struct SelectionCurve {
  std::vector<std::string> ranking;  // frozen importance order
  std::vector<CurvePoint> points;
  int best_k = 0;

  std::vector<std::string> best_subset() const;
};

// Importance ranking from out-of-fold SHAP values of a full-feature CV run.
std::vector<std::string> reference_ranking(const Dataset& data, const gbdt::TrainConfig& config,
                                           const CvOptions& options);

// Cross-validates every prefix of `ranking`; best k is the smallest whose
// pooled RMSE is within one fold standard error of the minimum.
SelectionCurve select_features(const Dataset& data, const gbdt::TrainConfig& config,
                               const CvOptions& options, std::span<const std::string> ranking);
SelectionCurve select_features(const Dataset& data, const gbdt::TrainConfig& config,
                               const CvOptions& options);

int one_se_best_k(std::span<const CurvePoint> points);

// ---- baselines ------------------------------------------------------------------------

struct LinearModel {
  std::vector<double> coefficients;  // per feature
  std::vector<double> impute;        // column means used for masked cells
  double intercept = 0.0;
  bool ridge = false;

  double predict(std::span<const double> values, std::span<const std::uint8_t> present) const;
};

LinearModel fit_linear(const Dataset& data, std::span<const std::size_t> rows);

// The single regression tree used as a baseline.
gbdt::TrainConfig single_tree_config();

// OLS and single-tree reports under the same fold plan.
std::vector<EvalReport> baselines(const Dataset& data, const CvOptions& options);

// ---- output ----------------------------------------------------------------------------

void write_report_json(std::ostream& out, std::span<const EvalReport> reports);
// k,feature,rmse,mae,corr,rmse_mean,rmse_se,mae_mean,mae_se,corr_mean,corr_se,best
void write_curve_csv(std::ostream& out, const SelectionCurve& curve);
// participant_id,trial_id,fold,sa,sa_hat
void write_predictions_csv(std::ostream& out, const Dataset& data, const EvalReport& report);

}  // namespace gazesa::eval
