#include <Eigen/Dense>

#include "gazesa/error.hpp"
#include "gazesa/eval.hpp"

namespace gazesa::eval {

double LinearModel::predict(std::span<const double> values,
                            std::span<const std::uint8_t> present) const {
  double acc = intercept;
  for (std::size_t j = 0; j < coefficients.size(); ++j)
    acc += coefficients[j] * (present[j] ? values[j] : impute[j]);
  return acc;
}

LinearModel fit_linear(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error(Error::Kind::kInvalidArgument, "no training rows");
  const std::size_t p = data.features();
  LinearModel lm;
  lm.impute.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const std::size_t r : rows) {
      if (data.present(r, j)) {
        sum += data.value(r, j);
        ++n;
      }
    }
    if (n > 0) lm.impute[j] = sum / static_cast<double>(n);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto cols = static_cast<Eigen::Index>(p + 1);
  Eigen::MatrixXd x(n, cols);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j)
      x(i, static_cast<Eigen::Index>(j + 1)) = data.present(r, j) ? data.value(r, j) : lm.impute[j];
    const auto label = data.label(r);
    if (!label) throw Error(Error::Kind::kValidation, "unlabeled training row", {}, r);
    y(i) = *label;
  }

  Eigen::VectorXd beta;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() == cols) {
    beta = qr.solve(y);
  } else {
    Eigen::MatrixXd gram = x.transpose() * x;
    const double lambda = 1e-8 * std::max(1.0, gram.trace() / static_cast<double>(cols));
    gram.diagonal().array() += lambda;
    beta = gram.ldlt().solve(x.transpose() * y);
    lm.ridge = true;
  }
  lm.intercept = beta(0);
  lm.coefficients.resize(p);
  for (std::size_t j = 0; j < p; ++j) lm.coefficients[j] = beta(static_cast<Eigen::Index>(j + 1));
  return lm;
}

gbdt::TrainConfig single_tree_config() {
  gbdt::TrainConfig cfg;
  cfg.num_leaves = 20;
  cfg.max_depth = 6;
  cfg.min_data_in_leaf = 12;
  cfg.lambda_l2 = 0.0;
  cfg.learning_rate = 1.0;
  cfg.num_boost_round = 1;
  cfg.top_rate = 0.5;  // top + other = 1: every row kept at weight 1
  cfg.other_rate = 0.5;
  cfg.validation_fraction = 0.0;
  return cfg;
}

std::vector<EvalReport> baselines(const Dataset& data, const CvOptions& options) {
  std::vector<EvalReport> out;
  for (const ModelKind kind : {ModelKind::kLinear, ModelKind::kTree}) {
    CvOptions opts = options;
    opts.model = kind;
    opts.compute_shap = false;
    out.push_back(cross_validate(data, gbdt::TrainConfig{}, opts));
  }
  return out;
}

}  // namespace gazesa::eval
