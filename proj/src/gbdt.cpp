#include "gazesa/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gazesa/error.hpp"
#include "gazesa/rng.hpp"
#include "gazesa/stats.hpp"

namespace gazesa::gbdt {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Error::Kind::kInvalidArgument, what); };
  if (num_leaves < 2) fail("num_leaves must be >= 2");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (num_boost_round < 1) fail("num_boost_round must be >= 1");
  if (early_stopping_rounds < 1) fail("early_stopping_rounds must be >= 1");
  if (!(top_rate > 0.0) || !(other_rate > 0.0) || top_rate + other_rate > 1.0 + 1e-12) {
    fail("GOSS rates need 0 < top_rate, 0 < other_rate, top_rate + other_rate <= 1");
  }
  if (max_bin < 2 || max_bin > 65000) fail("max_bin must be in [2, 65000]");
  if (lambda_l2 < 0.0) fail("lambda_l2 must be >= 0");
  if (min_data_in_leaf < 1) fail("min_data_in_leaf must be >= 1");
  if (max_depth < 0) fail("max_depth must be >= 0");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    fail("validation_fraction must be in [0, 1)");
  }
}

double TreeEnsemble::predict(std::span<const double> values,
                             std::span<const std::uint8_t> present) const {
  double acc = base_score;
  for (const Tree& t : trees) acc += learning_rate * t.predict(values, present);
  return acc;
}

std::vector<std::size_t> TreeEnsemble::column_map(const Dataset& data) const {
  std::vector<std::size_t> map;
  map.reserve(feature_names.size());
  for (const auto& name : feature_names) {
    const auto idx = data.feature_index(name);
    if (!idx) {
      throw Error(Error::Kind::kRegistry, "input lacks model feature '" + name + "'", {}, {},
                  name);
    }
    map.push_back(*idx);
  }
  return map;
}

std::vector<double> TreeEnsemble::predict(const Dataset& data) const {
  const auto map = column_map(data);
  std::vector<double> out(data.rows());
  std::vector<double> values(map.size());
  std::vector<std::uint8_t> present(map.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t j = 0; j < map.size(); ++j) {
      values[j] = data.value(r, map[j]);
      present[j] = data.present(r, map[j]) ? 1 : 0;
    }
    out[r] = predict(values, present);
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> validation_split(
    std::span<const std::size_t> rows, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> shuffled(rows.begin(), rows.end());
  Rng rng = Rng::derive(seed, 0x76616c6964ULL);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  }
  const auto n_valid = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(shuffled.size()) + 1e-9));
  std::vector<std::size_t> fit_rows(shuffled.begin(),
                                    shuffled.end() - static_cast<std::ptrdiff_t>(n_valid));
  std::vector<std::size_t> valid_rows(shuffled.end() - static_cast<std::ptrdiff_t>(n_valid),
                                      shuffled.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(valid_rows.begin(), valid_rows.end());
  return {std::move(fit_rows), std::move(valid_rows)};
}

FitResult fit(const Dataset& data, const TrainConfig& config) {
  std::vector<std::size_t> all(data.rows());
  std::iota(all.begin(), all.end(), 0);
  auto [fit_rows, valid_rows] = validation_split(all, config.validation_fraction, config.seed);
  return fit(data, config, fit_rows, valid_rows);
}

FitResult fit(const Dataset& data, const TrainConfig& config, std::span<const std::size_t> fit_rows,
              std::span<const std::size_t> valid_rows) {
  config.validate();
  if (fit_rows.empty()) throw Error(Error::Kind::kInvalidArgument, "no training rows");
  {
    std::vector<std::uint8_t> used(data.rows(), 0);
    for (std::size_t r : fit_rows) used[r] = 1;
    for (std::size_t r : valid_rows) {
      if (used[r]) {
        throw Error(Error::Kind::kInvalidArgument, "validation rows overlap training rows");
      }
    }
  }
  auto labels_of = [&](std::span<const std::size_t> rows) {
    std::vector<double> y;
    y.reserve(rows.size());
    for (std::size_t r : rows) {
      const auto l = data.label(r);
      if (!l) throw Error(Error::Kind::kValidation, "row has no sa label", {}, r + 1, "sa");
      y.push_back(*l);
    }
    return y;
  };
  const std::vector<double> y_fit = labels_of(fit_rows);
  const std::vector<double> y_valid = labels_of(valid_rows);

  const BinnedMatrix binned(data, fit_rows, config.max_bin);
  const double eta = config.learning_rate;

  FitResult result;
  TreeEnsemble& model = result.model;
  TrainState& state = result.state;
  model.feature_names = data.feature_names();
  model.base_score = stats::anchored_mean(y_fit);
  model.learning_rate = eta;
  model.config = config;
  state.fit_rows.assign(fit_rows.begin(), fit_rows.end());
  state.early_stopping_disabled = valid_rows.empty();

  const std::size_t n = fit_rows.size();
  std::vector<double> pred(n, model.base_score);
  std::vector<double> pred_valid(valid_rows.size(), model.base_score);
  std::vector<double> grad(n), hess(n, 1.0);
  state.train_predictions = pred;

  double best_l2 = std::numeric_limits<double>::infinity();
  double best_l1 = std::numeric_limits<double>::infinity();
  int last_improvement = 0;

  for (int round = 1; round <= config.num_boost_round; ++round) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - y_fit[i];
    const GossSample sample =
        goss_sample(grad, config.top_rate, config.other_rate,
                    mix64(mix64(config.seed) + static_cast<std::uint64_t>(round)));
    GrownTree grown = grow_tree(binned, sample, grad, hess, config);

    // Covers over every fitting row, not just the GOSS sample.
    Tree& tree = grown.tree;
    for (auto& node : tree.nodes) node.cover = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int node = 0;
      tree.nodes[0].cover += 1.0;
      while (!tree.nodes[node].is_leaf()) {
        const TreeNode& nd = tree.nodes[node];
        const auto f = static_cast<std::size_t>(nd.feature);
        const std::uint16_t b = binned.bin(i, f);
        const bool go_left =
            b == binned.feature(f).missing_bin() ? nd.default_left : b <= grown.split_bin[node];
        node = go_left ? nd.left : nd.right;
        tree.nodes[node].cover += 1.0;
      }
      pred[i] += eta * tree.nodes[node].value;
      const double e = pred[i] - y_fit[i];
      sq += e * e;
    }
    state.train_rmse.push_back(std::sqrt(sq / static_cast<double>(n)));

    model.trees.push_back(std::move(tree));
    state.rounds_run = round;
    const Tree& added = model.trees.back();

    if (valid_rows.empty()) {
      state.best_round = round;
      state.train_predictions = pred;
      continue;
    }
    double l2 = 0.0, l1 = 0.0;
    for (std::size_t j = 0; j < valid_rows.size(); ++j) {
      pred_valid[j] += eta * added.predict(data.row_values(valid_rows[j]),
                                           data.row_mask(valid_rows[j]));
      const double e = pred_valid[j] - y_valid[j];
      l2 += e * e;
      l1 += std::fabs(e);
    }
    l2 /= static_cast<double>(valid_rows.size());
    l1 /= static_cast<double>(valid_rows.size());
    state.valid_l2.push_back(l2);
    state.valid_l1.push_back(l1);

    bool improved = false;
    if (l2 < best_l2) {
      best_l2 = l2;
      state.best_round = round;
      state.train_predictions = pred;
      improved = true;
    }
    if (l1 < best_l1) {
      best_l1 = l1;
      improved = true;
    }
    if (improved) last_improvement = round;
    if (round - last_improvement >= config.early_stopping_rounds) break;
  }

  model.trees.resize(static_cast<std::size_t>(state.best_round));
  return result;
}

}  // namespace gazesa::gbdt
