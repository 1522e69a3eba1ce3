#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazesa/dataset.hpp"
#include "gazesa/gbdt.hpp"
#include "gazesa/stats.hpp"

namespace gazesa::shap {

// base_value + sum(contributions) reproduces the model output (local accuracy).
struct Explanation {
  double base_value = 0.0;
  std::vector<double> contributions;  // ensemble registry order
  double prediction = 0.0;
};

// Cover-weighted expected output of the ensemble (the walk with no feature known).
double expected_value(const gbdt::TreeEnsemble& model);

// Path-dependent TreeSHAP, O(T L D^2). Throws Error(kModel) on a node with
// non-positive cover.
Explanation shap_values(const gbdt::TreeEnsemble& model, std::span<const double> values,
                        std::span<const std::uint8_t> present);

// E[f(x) | x_S] where features outside S are marginalized by descending both
// children weighted by cover. `known[p]` != 0 marks p in S.
double conditional_expectation(const gbdt::TreeEnsemble& model, std::span<const double> values,
                               std::span<const std::uint8_t> present,
                               std::span<const std::uint8_t> known);

inline constexpr std::size_t kMaxBruteForceFeatures = 20;

// Exact Shapley values by enumerating all 2^P coalitions. Refuses P > 20.
Explanation brute_force_shap(const gbdt::TreeEnsemble& model, std::span<const double> values,
                             std::span<const std::uint8_t> present);

// One explanation per dataset row (columns matched by name). The parallel
// version splits rows across threads; the serial one is the reference.
std::vector<Explanation> explain_dataset(const gbdt::TreeEnsemble& model, const Dataset& data);
std::vector<Explanation> explain_dataset_serial(const gbdt::TreeEnsemble& model,
                                                const Dataset& data);

// ---- global importance ------------------------------------------------------------

struct ScatterPoint {
  std::optional<double> value;
  double shap = 0.0;
};

struct ImportanceEntry {
  std::string feature;
  double impact = 0.0;  // sum over rows of |phi|
  int rank = 0;         // 1 = most important
  std::vector<ScatterPoint> scatter;
};

// Entries in registry order; `rank` gives the ordering (ties by registry index).
struct ImportanceTable {
  std::vector<ImportanceEntry> entries;

  // Feature names from most to least important.
  std::vector<std::string> ranking() const;
};

// `explanations[i]` explains row i of `data`; `features` is the explanation
// registry (usually model.feature_names).
ImportanceTable global_importance(std::span<const Explanation> explanations, const Dataset& data,
                                  std::span<const std::string> features);
ImportanceTable global_importance(const gbdt::TreeEnsemble& model, const Dataset& data);

// ---- main effects -----------------------------------------------------------------------

inline constexpr int kDefaultEffectBins = 18;

struct EffectBin {
  bool missing = false;
  double lo = 0.0;  // smallest member value
  double hi = 0.0;  // largest member value
  std::size_t count = 0;
  stats::FiveNumber shap;
};

struct MainEffect {
  std::string feature;
  FeatureKind kind = FeatureKind::kContinuous;
  std::vector<EffectBin> bins;
  stats::Correlation correlation;  // Pearson (continuous) or Spearman (nominal)
  bool empty = false;              // every value masked
};

struct EffectOptions {
  int continuous_bins = kDefaultEffectBins;
  std::map<std::string, int> bins_by_feature;  // per-feature override
};

std::vector<MainEffect> main_effects(std::span<const Explanation> explanations,
                                     const Dataset& data, std::span<const std::string> features,
                                     const EffectOptions& options = {});

// ---- single instance -------------------------------------------------------------------

struct Contribution {
  std::string feature;
  std::optional<double> value;
  double shap = 0.0;
};

struct InstanceReport {
  double base_value = 0.0;
  double prediction = 0.0;
  std::vector<Contribution> contributions;  // nonzero only, by |shap| descending
  double contribution_sum = 0.0;
};

// Report for an explanation computed elsewhere (e.g. out of fold).
InstanceReport make_report(const Explanation& explanation, std::span<const std::string> features,
                           std::span<const double> values, std::span<const std::uint8_t> present);

InstanceReport explain_instance(const gbdt::TreeEnsemble& model, std::span<const double> values,
                                std::span<const std::uint8_t> present);
InstanceReport explain_instance(const gbdt::TreeEnsemble& model, const Dataset& data,
                                std::size_t row);

void print_report(std::ostream& out, const InstanceReport& report);
void write_report_csv(std::ostream& out, const InstanceReport& report);

// ---- files ------------------------------------------------------------------------------------

// instance,participant_id,trial_id,feature,value,shap
void write_shap_csv(std::ostream& out, std::span<const Explanation> explanations,
                    const Dataset& data, std::span<const std::string> features);
// feature,impact,rank (rank order)
void write_importance_csv(std::ostream& out, const ImportanceTable& table);
// feature,bin,lo,hi,count,min,q1,median,q3,max,method,r,p,degenerate
void write_main_effects_csv(std::ostream& out, std::span<const MainEffect> effects);
// Horizontal bar chart of impacts.
void write_importance_svg(std::ostream& out, const ImportanceTable& table);

}  // namespace gazesa::shap
