#include "gazesa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "gazesa/csv.hpp"
#include "gazesa/error.hpp"
#include "gazesa/kernels.hpp"
#include "gazesa/model_io.hpp"
#include "gazesa/rng.hpp"
#include "gazesa/stats.hpp"

namespace gazesa::eval {

using csv::format_double;
using csv::write_double;

Metrics metrics(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size())
    throw Error(Error::Kind::kInvalidArgument, "metrics: length mismatch (" +
                                                   std::to_string(y.size()) + " vs " +
                                                   std::to_string(y_hat.size()) + ")");
  if (y.empty()) throw Error(Error::Kind::kInvalidArgument, "metrics: empty input");
  Metrics m;
  m.n = y.size();
  double sq = 0.0, abs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_hat[i] - y[i];
    sq += e * e;
    abs += std::abs(e);
  }
  const auto n = static_cast<double>(y.size());
  m.rmse = std::sqrt(sq / n);
  m.mae = abs / n;
  const auto c = stats::pearson(y, y_hat);
  m.corr = c.degenerate ? 0.0 : c.r;
  m.corr_degenerate = c.degenerate;
  return m;
}

// ---- folds ---------------------------------------------------------------------------

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

void check_folds(std::size_t n, int k) {
  if (k < 2) throw Error(Error::Kind::kInvalidArgument, "need at least 2 folds");
  if (n < static_cast<std::size_t>(k))
    throw Error(Error::Kind::kInvalidArgument,
                std::to_string(n) + " units cannot fill " + std::to_string(k) + " folds");
}

}  // namespace

FoldPlan FoldPlan::make(std::size_t n, int k, std::uint64_t seed) {
  check_folds(n, k);
  FoldPlan plan;
  plan.seed = seed;
  plan.num_rows = n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::derive(seed, 0x666f6c64ULL);
  shuffle(order, rng);
  plan.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) plan.folds[i % plan.folds.size()].push_back(order[i]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

FoldPlan FoldPlan::by_participant(const Dataset& data, int k, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < data.rows(); ++r) groups[data.key(r).participant_id].push_back(r);
  check_folds(groups.size(), k);
  std::vector<const std::vector<std::size_t>*> order;
  for (const auto& [id, rows] : groups) order.push_back(&rows);
  Rng rng = Rng::derive(seed, 0x666f6c64ULL, 1);
  shuffle(order, rng);
  FoldPlan plan;
  plan.seed = seed;
  plan.num_rows = data.rows();
  plan.grouped = true;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& f = plan.folds[i % plan.folds.size()];
    f.insert(f.end(), order[i]->begin(), order[i]->end());
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

std::vector<std::size_t> FoldPlan::training_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != fold) rows.insert(rows.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGbdt: return "gbdt";
    case ModelKind::kLinear: return "linear";
    case ModelKind::kTree: return "tree";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gbdt") return ModelKind::kGbdt;
  if (name == "linear") return ModelKind::kLinear;
  if (name == "tree") return ModelKind::kTree;
  throw Error(Error::Kind::kInvalidArgument, "unknown model kind '" + std::string(name) + "'");
}

// ---- cross-validation ---------------------------------------------------------------

namespace {

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.mean = stats::mean(v);
  if (const auto sd = stats::sample_sd(v)) s.se = *sd / std::sqrt(static_cast<double>(v.size()));
  return s;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  return mix64(mix64(seed) + fold + 1);
}

FoldResult run_fold(const Dataset& data, const gbdt::TrainConfig& config, const CvOptions& options,
                    const FoldPlan& plan, std::size_t fold,
                    std::vector<shap::Explanation>* shap_out) {
  FoldResult out;
  out.rows = plan.folds[fold];
  const auto train = plan.training_rows(fold);
  out.predictions.reserve(out.rows.size());
  std::vector<double> y;
  for (const std::size_t r : out.rows) y.push_back(*data.label(r));

  switch (options.model) {
    case ModelKind::kGbdt:
    case ModelKind::kTree: {
      gbdt::TrainConfig cfg = options.model == ModelKind::kGbdt ? config : single_tree_config();
      cfg.seed = fold_seed(config.seed, fold);
      gbdt::FitResult fit;
      if (options.model == ModelKind::kGbdt) {
        const auto [fit_rows, valid_rows] =
            gbdt::validation_split(train, cfg.validation_fraction, cfg.seed);
        fit = gbdt::fit(data, cfg, fit_rows, valid_rows);
      } else {
        fit = gbdt::fit(data, cfg, train, {});
      }
      out.rounds = static_cast<int>(fit.model.trees.size());
      for (const std::size_t r : out.rows) {
        out.predictions.push_back(fit.model.predict(data.row_values(r), data.row_mask(r)));
        if (shap_out != nullptr)
          (*shap_out)[r] = shap::shap_values(fit.model, data.row_values(r), data.row_mask(r));
      }
      break;
    }
    case ModelKind::kLinear: {
      const LinearModel lm = fit_linear(data, train);
      out.ridge = lm.ridge;
      for (const std::size_t r : out.rows)
        out.predictions.push_back(lm.predict(data.row_values(r), data.row_mask(r)));
      break;
    }
  }
  out.metrics = metrics(y, out.predictions);
  return out;
}

}  // namespace

EvalReport cross_validate(const Dataset& data, const gbdt::TrainConfig& config,
                          const CvOptions& options) {
  if (data.rows() < 20)
    throw Error(Error::Kind::kInvalidArgument,
                "cross-validation needs at least 20 rows, got " + std::to_string(data.rows()));
  if (!data.fully_labeled()) throw Error(Error::Kind::kValidation, "dataset has unlabeled rows");
  config.validate();

  const FoldPlan plan = options.group_by_participant
                            ? FoldPlan::by_participant(data, options.folds, options.seed)
                            : FoldPlan::make(data.rows(), options.folds, options.seed);
  EvalReport report;
  report.model = model_kind_name(options.model);
  report.features = data.feature_names();
  report.seed = options.seed;
  report.grouped = plan.grouped;
  report.config = options.model == ModelKind::kTree ? single_tree_config() : config;
  report.config.seed = config.seed;

  const bool want_shap = options.compute_shap && options.model != ModelKind::kLinear;
  if (want_shap) report.shap.resize(data.rows());

  report.folds.resize(plan.folds.size());
  std::vector<std::exception_ptr> errors(plan.folds.size());
  kernels::parallel_for(plan.folds.size(), [&](std::size_t f) {
    try {
      report.folds[f] = run_fold(data, config, options, plan, f, want_shap ? &report.shap : nullptr);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> y, y_hat, rmse, mae, corr;
  report.predictions.assign(data.rows(), 0.0);
  for (const auto& f : report.folds) {
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
      y.push_back(*data.label(f.rows[i]));
      y_hat.push_back(f.predictions[i]);
      report.predictions[f.rows[i]] = f.predictions[i];
    }
    rmse.push_back(f.metrics.rmse);
    mae.push_back(f.metrics.mae);
    corr.push_back(f.metrics.corr);
    report.ridge_fallback = report.ridge_fallback || f.ridge;
  }
  report.pooled = metrics(y, y_hat);
  report.rmse = summarize(rmse);
  report.mae = summarize(mae);
  report.corr = summarize(corr);
  return report;
}

// ---- feature selection ----------------------------------------------------------------

std::vector<std::string> SelectionCurve::best_subset() const {
  return {ranking.begin(), ranking.begin() + best_k};
}

int one_se_best_k(std::span<const CurvePoint> points) {
  if (points.empty()) return 0;
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].pooled.rmse < points[best].pooled.rmse) best = i;
  }
  const double limit = points[best].pooled.rmse + points[best].rmse.se;
  for (const auto& p : points) {
    if (p.pooled.rmse <= limit) return p.k;
  }
  return points[best].k;
}

std::vector<std::string> reference_ranking(const Dataset& data, const gbdt::TrainConfig& config,
                                           const CvOptions& options) {
  CvOptions opts = options;
  opts.model = ModelKind::kGbdt;
  opts.compute_shap = true;
  const EvalReport report = cross_validate(data, config, opts);
  return shap::global_importance(report.shap, data, data.feature_names()).ranking();
}

SelectionCurve select_features(const Dataset& data, const gbdt::TrainConfig& config,
                               const CvOptions& options, std::span<const std::string> ranking) {
  SelectionCurve curve;
  curve.ranking.assign(ranking.begin(), ranking.end());
  CvOptions opts = options;
  opts.compute_shap = false;
  for (std::size_t k = 1; k <= curve.ranking.size(); ++k) {
    const std::vector<std::string> prefix(curve.ranking.begin(),
                                          curve.ranking.begin() + static_cast<std::ptrdiff_t>(k));
    const EvalReport report = cross_validate(data.select_features(prefix), config, opts);
    curve.points.push_back({static_cast<int>(k), curve.ranking[k - 1], report.pooled, report.rmse,
                            report.mae, report.corr});
  }
  curve.best_k = one_se_best_k(curve.points);
  return curve;
}

SelectionCurve select_features(const Dataset& data, const gbdt::TrainConfig& config,
                               const CvOptions& options) {
  const auto ranking = reference_ranking(data, config, options);
  return select_features(data, config, options, ranking);
}

// ---- output ----------------------------------------------------------------------------

namespace {

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["n"] = m.n;
  j["rmse"] = m.rmse;
  j["mae"] = m.mae;
  j["corr"] = m.corr;
  j["corr_degenerate"] = m.corr_degenerate;
  return j;
}

nlohmann::ordered_json summary_json(const Summary& s) {
  return nlohmann::ordered_json{{"mean", s.mean}, {"se", s.se}};
}

}  // namespace

void write_report_json(std::ostream& out, std::span<const EvalReport> reports) {
  nlohmann::ordered_json doc;
  doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["seed"] = r.seed;
    j["group_by_participant"] = r.grouped;
    j["features"] = r.features;
    j["config"] = gbdt::config_to_json(r.config);
    j["pooled"] = metrics_json(r.pooled);
    j["fold_mean"] = {{"rmse", summary_json(r.rmse)},
                      {"mae", summary_json(r.mae)},
                      {"corr", summary_json(r.corr)}};
    j["ridge_fallback"] = r.ridge_fallback;
    auto& folds = j["folds"] = nlohmann::ordered_json::array();
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
      auto fj = metrics_json(r.folds[f].metrics);
      fj["fold"] = f;
      fj["rounds"] = r.folds[f].rounds;
      folds.push_back(std::move(fj));
    }
    doc["reports"].push_back(std::move(j));
  }
  out << doc.dump(2) << '\n';
}

void write_curve_csv(std::ostream& out, const SelectionCurve& curve) {
  out << "k,feature,rmse,mae,corr,rmse_mean,rmse_se,mae_mean,mae_se,corr_mean,corr_se,best\n";
  for (const auto& p : curve.points) {
    out << p.k << ',' << p.feature_added;
    for (const double v : {p.pooled.rmse, p.pooled.mae, p.pooled.corr, p.rmse.mean, p.rmse.se,
                           p.mae.mean, p.mae.se, p.corr.mean, p.corr.se}) {
      out << ',';
      write_double(out, v);
    }
    out << ',' << (p.k == curve.best_k ? 1 : 0) << '\n';
  }
}

void write_predictions_csv(std::ostream& out, const Dataset& data, const EvalReport& report) {
  std::vector<std::size_t> fold_of(data.rows(), 0);
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    for (const std::size_t r : report.folds[f].rows) fold_of[r] = f;
  }
  out << "participant_id,trial_id,fold,sa,sa_hat\n";
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << data.key(r).participant_id << ',' << data.key(r).trial_id << ',' << fold_of[r] << ',';
    if (const auto y = data.label(r)) write_double(out, *y);
    out << ',';
    write_double(out, report.predictions[r]);
    out << '\n';
  }
}

}  // namespace gazesa::eval
