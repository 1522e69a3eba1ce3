#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gazesa/error.hpp"
#include "gazesa/gbdt.hpp"
#include "gazesa/kernels.hpp"
#include "gazesa/model_io.hpp"
#include "gazesa/rng.hpp"

namespace gazesa::gbdt {
namespace {

Dataset random_data(std::uint64_t seed, std::size_t rows, std::size_t features,
                    double (*target)(const std::vector<double>&), double missing_rate = 0.0) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < features; ++j) names.push_back("x" + std::to_string(j));
  Dataset d(names);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> x(features);
    std::vector<std::optional<double>> cells(features);
    for (std::size_t j = 0; j < features; ++j) {
      x[j] = rng.uniform();
      if (!rng.bernoulli(missing_rate)) cells[j] = x[j];
    }
    d.add_row({"p", "r" + std::to_string(i)}, cells, target(x));
  }
  return d;
}

double linear_target(const std::vector<double>& x) { return 0.3 * x[0] + 0.5 * x[1] - 0.2 * x[2]; }
double step_target(const std::vector<double>& x) { return x[0] > 0.5 ? 1.0 : 0.0; }
double constant_target(const std::vector<double>&) { return 0.5; }

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.rows());
  std::iota(r.begin(), r.end(), 0);
  return r;
}

TEST(Bins, ExactForFewDistinctValues) {
  const std::vector<double> v = {3.0, 1.0, 2.0, 1.0, 3.0};
  const auto b = make_bins(v, 255);
  EXPECT_EQ(b.num_bins, 3u);
  ASSERT_EQ(b.thresholds.size(), 2u);
  EXPECT_DOUBLE_EQ(b.thresholds[0], 1.5);
  EXPECT_DOUBLE_EQ(b.thresholds[1], 2.5);
  EXPECT_EQ(b.bin_of(1.0), 0);
  EXPECT_EQ(b.bin_of(2.0), 1);
  EXPECT_EQ(b.bin_of(3.0), 2);
  EXPECT_EQ(b.missing_bin(), 3);
}

TEST(Bins, ConstantFeatureIsOneBin) {
  const std::vector<double> v(50, 4.0);
  EXPECT_EQ(make_bins(v, 255).num_bins, 1u);
}

TEST(Bins, EqualFrequencyOnUniformValues) {
  Rng rng(3);
  std::vector<double> v(10000);
  for (double& x : v) x = rng.uniform();
  const auto b = make_bins(v, 255);
  EXPECT_EQ(b.num_bins, 255u);
  std::vector<std::size_t> counts(b.num_bins, 0);
  for (double x : v) ++counts[b.bin_of(x)];
  for (std::size_t c : counts) {
    EXPECT_GE(c, 39u);
    EXPECT_LE(c, 40u);
  }
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), v.size());
}

TEST(Goss, FullRateKeepsEverything) {
  std::vector<double> g(37);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(static_cast<double>(i));
  const auto s = goss_sample(g, 0.5, 0.5, 1);
  ASSERT_EQ(s.indices.size(), g.size());
  for (double w : s.weights) EXPECT_EQ(w, 1.0);
}

TEST(Goss, TopAndWeightedRest) {
  Rng rng(8);
  std::vector<double> g(100);
  for (double& x : g) x = rng.normal();
  const auto s = goss_sample(g, 0.2, 0.1, 42);
  ASSERT_EQ(s.indices.size(), 30u);
  EXPECT_TRUE(std::is_sorted(s.indices.begin(), s.indices.end()));

  std::vector<std::size_t> order(100);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::fabs(g[a]) > std::fabs(g[b]); });
  const std::vector<std::size_t> top(order.begin(), order.begin() + 20);
  int heavy = 0;
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    const bool in_top = std::find(top.begin(), top.end(), s.indices[i]) != top.end();
    if (in_top) {
      EXPECT_EQ(s.weights[i], 1.0);
    } else {
      EXPECT_DOUBLE_EQ(s.weights[i], 8.0);
      ++heavy;
    }
  }
  EXPECT_EQ(heavy, 10);
  for (std::size_t t : top) EXPECT_NE(std::find(s.indices.begin(), s.indices.end(), t), s.indices.end());
}

TEST(Goss, EqualGradientsTieBreakByIndex) {
  const std::vector<double> g(100, 0.3);
  const auto s = goss_sample(g, 0.2, 0.1, 5);
  for (std::uint32_t i = 0; i < 20; ++i) {
    const auto it = std::find(s.indices.begin(), s.indices.end(), i);
    ASSERT_NE(it, s.indices.end());
    EXPECT_EQ(s.weights[static_cast<std::size_t>(it - s.indices.begin())], 1.0);
  }
}

TEST(Goss, SmallInputKeepsAll) {
  // ceil(0.2 * 2) + ceil(0.1 * 2) = 2 >= n
  const std::vector<double> g = {1.0, 2.0};
  const auto s = goss_sample(g, 0.2, 0.1, 5);
  EXPECT_EQ(s.indices.size(), 2u);
  EXPECT_EQ(s.weights, (std::vector<double>{1.0, 1.0}));
}

GossSample everything(std::size_t n) {
  GossSample s;
  for (std::size_t i = 0; i < n; ++i) {
    s.indices.push_back(static_cast<std::uint32_t>(i));
    s.weights.push_back(1.0);
  }
  return s;
}

TEST(Grow, ConstantLabelsGiveZeroLeaf) {
  const Dataset d = random_data(1, 80, 3, constant_target);
  const auto rows = all_rows(d);
  const BinnedMatrix m(d, rows, 255);
  const std::vector<double> grad(80, 0.0), hess(80, 1.0);
  TrainConfig cfg;
  const auto grown = grow_tree(m, everything(80), grad, hess, cfg);
  ASSERT_EQ(grown.tree.nodes.size(), 1u);
  EXPECT_EQ(grown.tree.nodes[0].value, 0.0);
}

TEST(Grow, NumLeavesTwoIsAStump) {
  const Dataset d = random_data(2, 200, 4, linear_target);
  const auto rows = all_rows(d);
  const BinnedMatrix m(d, rows, 255);
  const auto y = d.label_vector();
  const double base = std::accumulate(y.begin(), y.end(), 0.0) / 200.0;
  std::vector<double> grad(200), hess(200, 1.0);
  for (std::size_t i = 0; i < 200; ++i) grad[i] = base - y[i];
  TrainConfig cfg;
  cfg.num_leaves = 2;
  const auto grown = grow_tree(m, everything(200), grad, hess, cfg);
  EXPECT_EQ(grown.tree.nodes.size(), 3u);
  EXPECT_EQ(grown.tree.num_leaves(), 2u);
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Enumerates every threshold between adjacent distinct values of every feature.
SplitChoice exhaustive_split(const Dataset& d, const std::vector<double>& grad, int min_data) {
  SplitChoice best;
  const double g_total = std::accumulate(grad.begin(), grad.end(), 0.0);
  const auto n = static_cast<double>(d.rows());
  for (std::size_t f = 0; f < d.features(); ++f) {
    std::vector<double> values = d.column(f);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double thr = values[k] + (values[k + 1] - values[k]) / 2.0;
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i < d.rows(); ++i) {
        if (d.value(i, f) <= thr) {
          gl += grad[i];
          hl += 1.0;
        }
      }
      if (hl < min_data || n - hl < min_data) continue;
      const double gr = g_total - gl;
      const double gain = 0.5 * (gl * gl / hl + gr * gr / (n - hl) - g_total * g_total / n);
      if (gain > best.gain + 1e-12) best = {static_cast<int>(f), thr, gain};
    }
  }
  return best;
}

TEST(Grow, FirstSplitMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    Rng rng(seed);
    Dataset d({"noise", "signal", "noise2"});
    for (int i = 0; i < 60; ++i) {
      const double s = rng.uniform(-1, 1);
      d.add_row({"p", std::to_string(i)}, std::vector<std::optional<double>>{rng.uniform(), s, rng.uniform()},
                s > 0.0 ? 1.0 : 0.0);
    }
    const auto rows = all_rows(d);
    const BinnedMatrix m(d, rows, 255);
    const auto y = d.label_vector();
    const double base = std::accumulate(y.begin(), y.end(), 0.0) / 60.0;
    std::vector<double> grad(60), hess(60, 1.0);
    for (std::size_t i = 0; i < 60; ++i) grad[i] = base - y[i];
    TrainConfig cfg;
    cfg.num_leaves = 2;
    cfg.lambda_l2 = 0.0;
    cfg.min_data_in_leaf = 5;
    const auto grown = grow_tree(m, everything(60), grad, hess, cfg);
    const auto oracle = exhaustive_split(d, grad, 5);
    const auto& root = grown.tree.nodes[0];
    ASSERT_FALSE(root.is_leaf());
    EXPECT_EQ(root.feature, oracle.feature);
    EXPECT_EQ(root.feature, 1);
    EXPECT_DOUBLE_EQ(root.threshold, oracle.threshold);
    EXPECT_NEAR(grown.tree.nodes[root.left].value, -base, 1e-12);
    EXPECT_NEAR(grown.tree.nodes[root.right].value, 1.0 - base, 1e-12);
  }
}

TEST(Grow, ConstantFeatureNeverSplit) {
  Rng rng(5);
  Dataset d({"flat", "x"});
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform();
    d.add_row({"p", std::to_string(i)}, std::vector<std::optional<double>>{2.0, x}, x * x);
  }
  TrainConfig cfg;
  cfg.num_boost_round = 30;
  cfg.learning_rate = 0.3;
  const auto fit_result = fit(d, cfg);
  for (const auto& t : fit_result.model.trees) {
    for (const auto& n : t.nodes) EXPECT_NE(n.feature, 0);
  }
}

TEST(Fit, ConstantTargetStopsAfterPatience) {
  const Dataset d = random_data(4, 300, 5, constant_target);
  TrainConfig cfg;
  const auto r = fit(d, cfg);
  EXPECT_EQ(r.state.best_round, 1);
  EXPECT_EQ(r.state.rounds_run, 1 + cfg.early_stopping_rounds);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    EXPECT_DOUBLE_EQ(r.model.predict(d.row_values(i), d.row_mask(i)), 0.5);
  }
}

TEST(Fit, EmptyValidationDisablesEarlyStopping) {
  const Dataset d = random_data(4, 100, 3, linear_target);
  TrainConfig cfg;
  cfg.num_boost_round = 40;
  const auto rows = all_rows(d);
  const auto r = fit(d, cfg, rows, {});
  EXPECT_TRUE(r.state.early_stopping_disabled);
  EXPECT_EQ(r.state.rounds_run, 40);
  EXPECT_EQ(r.model.trees.size(), 40u);
}

TEST(Fit, ReplayMatchesPredict) {
  const Dataset d = random_data(6, 400, 6, linear_target, 0.1);
  TrainConfig cfg;
  cfg.num_boost_round = 300;
  const auto r = fit(d, cfg);
  ASSERT_EQ(r.state.train_predictions.size(), r.state.fit_rows.size());
  for (std::size_t i = 0; i < r.state.fit_rows.size(); ++i) {
    const std::size_t row = r.state.fit_rows[i];
    EXPECT_NEAR(r.state.train_predictions[i], r.model.predict(d.row_values(row), d.row_mask(row)),
                1e-12);
  }
}

TEST(Fit, CoversAreConservedAndRespectMinData) {
  const Dataset d = random_data(7, 500, 4, linear_target, 0.2);
  TrainConfig cfg;
  cfg.num_boost_round = 50;
  const auto r = fit(d, cfg);
  const auto n = static_cast<double>(r.state.fit_rows.size());
  for (const auto& t : r.model.trees) {
    EXPECT_EQ(t.nodes[0].cover, n);
    for (const auto& node : t.nodes) {
      if (node.is_leaf()) {
        EXPECT_GE(node.cover, cfg.min_data_in_leaf);
      } else {
        EXPECT_EQ(node.cover, t.nodes[node.left].cover + t.nodes[node.right].cover);
      }
    }
  }
}

TEST(Fit, TrainingLossNeverIncreasesWithoutSampling) {
  const Dataset d = random_data(8, 300, 5, linear_target);
  TrainConfig cfg;
  cfg.top_rate = 0.5;
  cfg.other_rate = 0.5;
  cfg.num_boost_round = 200;
  cfg.learning_rate = 0.2;
  const auto rows = all_rows(d);
  const auto r = fit(d, cfg, rows, {});
  for (std::size_t i = 1; i < r.state.train_rmse.size(); ++i) {
    EXPECT_LE(r.state.train_rmse[i], r.state.train_rmse[i - 1] + 1e-15);
  }
}

TEST(Fit, MonotoneTransformLeavesPredictionsUnchanged) {
  const Dataset d = random_data(9, 300, 4, step_target);
  Dataset t({"x0", "x1", "x2", "x3"});
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::vector<std::optional<double>> cells;
    for (std::size_t j = 0; j < 4; ++j) {
      cells.push_back(j == 0 ? std::exp(3.0 * d.value(i, j)) : d.value(i, j));
    }
    t.add_row(d.key(i), cells, d.label(i));
  }
  TrainConfig cfg;
  cfg.num_boost_round = 100;
  const auto a = fit(d, cfg);
  const auto b = fit(t, cfg);
  const auto pa = a.model.predict(d);
  const auto pb = b.model.predict(t);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], pb[i]);
}

TEST(Fit, LinearTargetIsLearned) {
  const Dataset d = random_data(10, 1056, 16, linear_target);
  TrainConfig cfg;
  const auto r = fit(d, cfg);
  ASSERT_FALSE(r.state.valid_l2.empty());
  EXPECT_LE(std::sqrt(r.state.valid_l2[static_cast<std::size_t>(r.state.best_round - 1)]), 0.05);
}

TEST(Fit, IdenticalAcrossThreadCounts) {
  const Dataset d = random_data(11, 600, 8, linear_target, 0.1);
  TrainConfig cfg;
  cfg.num_boost_round = 80;
  kernels::set_num_threads(1);
  const auto one = model_to_json(fit(d, cfg).model).dump();
  kernels::set_num_threads(4);
  const auto four = model_to_json(fit(d, cfg).model).dump();
  kernels::set_num_threads(0);
  EXPECT_EQ(one, four);
}

TEST(Predict, ZeroTreesGiveBaseScore) {
  TreeEnsemble m;
  m.feature_names = {"a"};
  m.base_score = 0.42;
  const std::vector<double> v = {1.0};
  const std::vector<std::uint8_t> p = {1};
  EXPECT_EQ(m.predict(v, p), 0.42);
}

TreeEnsemble stump() {
  TreeEnsemble m;
  m.feature_names = {"a", "b"};
  m.base_score = 0.5;
  m.learning_rate = 0.1;
  Tree t;
  t.nodes.resize(3);
  t.nodes[0] = {1, 0.3, false, 1, 2, 0.0, 10.0};
  t.nodes[1].value = -2.0;
  t.nodes[1].cover = 4.0;
  t.nodes[2].value = 3.0;
  t.nodes[2].cover = 6.0;
  m.trees.push_back(t);
  return m;
}

TEST(Predict, StumpRouting) {
  const auto m = stump();
  const std::vector<std::uint8_t> both = {1, 1};
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0.0, 0.1}, both), 0.5 + 0.1 * -2.0);
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0.0, 0.3}, both), 0.5 + 0.1 * -2.0);
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0.0, 0.9}, both), 0.5 + 0.1 * 3.0);
  // masked value follows the default direction (right)
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0.0, 0.0}, std::vector<std::uint8_t>{1, 0}),
                   0.5 + 0.1 * 3.0);
}

TEST(Predict, UnknownFeatureIsRegistryError) {
  const auto m = stump();
  Dataset d({"a", "c"});
  d.add_row({"p", "t"}, std::vector<std::optional<double>>{1.0, 2.0}, 0.0);
  try {
    m.predict(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::kRegistry);
  }
}

TEST(ModelIo, RoundTrip) {
  const Dataset d = random_data(12, 300, 5, linear_target, 0.1);
  TrainConfig cfg;
  cfg.num_boost_round = 60;
  const auto model = fit(d, cfg).model;
  const auto doc = model_to_json(model);
  const auto back = model_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_EQ(model_to_json(back).dump(), doc.dump());
  const auto pa = model.predict(d);
  const auto pb = back.predict(d);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], pb[i]);
}

TEST(ModelIo, RejectsBrokenFiles) {
  auto doc = nlohmann::json::parse(model_to_json(stump()).dump());
  doc["version"] = 99;
  EXPECT_THROW(model_from_json(doc), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("{\"num_leafs\": 3}")), Error);
}

TEST(Config, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.top_rate = 0.8;
  cfg.other_rate = 0.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.num_leaves = 1;
  EXPECT_THROW(cfg.validate(), Error);
  const auto json = config_to_json(TrainConfig{});
  EXPECT_EQ(json["num_leaves"], 100);
  EXPECT_EQ(json["learning_rate"], 0.05);
}

}  // namespace
}  // namespace gazesa::gbdt
