#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "gazesa/error.hpp"
#include "gazesa/gbdt.hpp"
#include "gazesa/kernels.hpp"
#include "gazesa/rng.hpp"
#include "gazesa/shap.hpp"
#include "support.hpp"

namespace gazesa::shap {
namespace {

using gbdt::Tree;
using gbdt::TreeEnsemble;

double sum(const Explanation& e) {
  return e.base_value + std::accumulate(e.contributions.begin(), e.contributions.end(), 0.0);
}

TreeEnsemble stump_on(int feature, int num_features, double thr, double left, double right,
                      double left_cover, double right_cover) {
  TreeEnsemble m;
  for (int j = 0; j < num_features; ++j) m.feature_names.push_back("f" + std::to_string(j));
  m.base_score = 0.3;
  m.learning_rate = 1.0;
  Tree t;
  t.nodes.resize(3);
  t.nodes[0].feature = feature;
  t.nodes[0].threshold = thr;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[0].cover = left_cover + right_cover;
  t.nodes[1].value = left;
  t.nodes[1].cover = left_cover;
  t.nodes[2].value = right;
  t.nodes[2].cover = right_cover;
  m.trees.push_back(t);
  return m;
}

TEST(TreeShap, ZeroTrees) {
  TreeEnsemble m;
  m.feature_names = {"a", "b", "c"};
  m.base_score = 0.7;
  const std::vector<double> v = {1, 2, 3};
  const std::vector<std::uint8_t> p = {1, 1, 1};
  const auto e = shap_values(m, v, p);
  EXPECT_EQ(e.base_value, 0.7);
  for (double c : e.contributions) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(e.prediction, 0.7);
}

TEST(TreeShap, StumpAttributesEverythingToItsFeature) {
  const auto m = stump_on(1, 4, 0.5, -1.0, 2.0, 30.0, 70.0);
  const std::vector<double> v = {0.9, 0.2, 0.9, 0.9};
  const std::vector<std::uint8_t> p = {1, 1, 1, 1};
  const auto e = shap_values(m, v, p);
  EXPECT_NEAR(e.base_value, 0.3 + 0.3 * -1.0 + 0.7 * 2.0, 1e-15);
  EXPECT_NEAR(e.contributions[1], m.predict(v, p) - e.base_value, 1e-15);
  EXPECT_EQ(e.contributions[0], 0.0);
  EXPECT_EQ(e.contributions[2], 0.0);
  EXPECT_EQ(e.contributions[3], 0.0);
}

TEST(TreeShap, ExpectedValueIsCoverWeighted) {
  Rng rng(2);
  const auto m = testing::random_ensemble(rng, 5, 4, 4);
  const std::vector<double> v(5, 0.5);
  const std::vector<std::uint8_t> p(5, 1), known(5, 0);
  EXPECT_NEAR(expected_value(m), conditional_expectation(m, v, p, known), 1e-12);
}

TEST(BruteForce, SingleFeature) {
  const auto m = stump_on(0, 1, 0.5, -1.0, 2.0, 25.0, 75.0);
  const std::vector<double> v = {0.8};
  const std::vector<std::uint8_t> p = {1};
  const auto e = brute_force_shap(m, v, p);
  const double f_all = conditional_expectation(m, v, p, std::vector<std::uint8_t>{1});
  const double f_none = conditional_expectation(m, v, p, std::vector<std::uint8_t>{0});
  EXPECT_NEAR(e.contributions[0], f_all - f_none, 1e-15);
}

TEST(BruteForce, SymmetricFeaturesShareCredit) {
  TreeEnsemble m = stump_on(0, 2, 0.5, 0.0, 1.0, 50.0, 50.0);
  m.trees.push_back(stump_on(1, 2, 0.5, 0.0, 1.0, 50.0, 50.0).trees[0]);
  const std::vector<double> v = {0.9, 0.9};
  const std::vector<std::uint8_t> p = {1, 1};
  const auto b = brute_force_shap(m, v, p);
  const auto t = shap_values(m, v, p);
  EXPECT_NEAR(b.contributions[0], b.contributions[1], 1e-15);
  EXPECT_NEAR(t.contributions[0], t.contributions[1], 1e-15);
}

TEST(BruteForce, EightFeaturesLocalAccuracy) {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = testing::random_ensemble(rng, 8, 5, 4);
    const auto in = testing::random_instance(rng, 8);
    const auto e = brute_force_shap(m, in.values, in.present);
    EXPECT_NEAR(sum(e), m.predict(in.values, in.present), 1e-12);
  }
}

TEST(BruteForce, RefusesTooManyFeatures) {
  TreeEnsemble m;
  for (int j = 0; j < 21; ++j) m.feature_names.push_back("f" + std::to_string(j));
  const std::vector<double> v(21, 0.0);
  const std::vector<std::uint8_t> p(21, 1);
  try {
    brute_force_shap(m, v, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::kInvalidArgument);
    EXPECT_NE(e.message().find("20"), std::string::npos);
  }
}

TEST(TreeShap, MatchesBruteForceOnRandomEnsembles) {
  Rng rng(77);
  for (int rep = 0; rep < 60; ++rep) {
    const int p = static_cast<int>(rng.range(1, 10));
    const auto m = testing::random_ensemble(rng, p, 5, 4);
    const auto in = testing::random_instance(rng, p);
    const auto fast = shap_values(m, in.values, in.present);
    const auto slow = brute_force_shap(m, in.values, in.present);
    EXPECT_NEAR(fast.base_value, slow.base_value, 1e-12);
    for (int j = 0; j < p; ++j) EXPECT_NEAR(fast.contributions[j], slow.contributions[j], 1e-9);
    EXPECT_NEAR(sum(fast), m.predict(in.values, in.present), 1e-9);
  }
}

TEST(TreeShap, UnusedFeatureGetsZero) {
  Rng rng(13);
  auto m = testing::random_ensemble(rng, 3, 4, 3);
  m.feature_names.push_back("unused");
  const auto in = testing::random_instance(rng, 4, 1.0);
  EXPECT_EQ(shap_values(m, in.values, in.present).contributions[3], 0.0);
}

// Raising one tree's leaves on the path through feature 0 never lowers phi_0.
TEST(TreeShap, Consistency) {
  Rng rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const auto m = testing::random_ensemble(rng, 4, 3, 3);
    const auto in = testing::random_instance(rng, 4, 1.0);
    auto bumped = m;
    for (auto& t : bumped.trees) {
      const int leaf = t.leaf_index(in.values, in.present);
      bool through_zero = false;
      int node = 0;
      while (!t.nodes[node].is_leaf()) {
        through_zero = through_zero || t.nodes[node].feature == 0;
        node = in.values[t.nodes[node].feature] <= t.nodes[node].threshold ? t.nodes[node].left
                                                                           : t.nodes[node].right;
      }
      if (through_zero) t.nodes[leaf].value += 0.5;
    }
    const double before = brute_force_shap(m, in.values, in.present).contributions[0];
    const double after = brute_force_shap(bumped, in.values, in.present).contributions[0];
    EXPECT_GE(after, before - 1e-12);
  }
}

TEST(TreeShap, ZeroCoverIsModelError) {
  auto m = stump_on(0, 2, 0.5, 1.0, 2.0, 10.0, 0.0);
  const std::vector<double> v = {0.1, 0.1};
  const std::vector<std::uint8_t> p = {1, 1};
  try {
    shap_values(m, v, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::kModel);
  }
}

TEST(TreeShap, WidthMismatch) {
  const auto m = stump_on(0, 2, 0.5, 1.0, 2.0, 10.0, 10.0);
  const std::vector<double> v = {0.1};
  const std::vector<std::uint8_t> p = {1};
  EXPECT_THROW(shap_values(m, v, p), Error);
}

Dataset monotone_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d({"x1", "x2", "level"});
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.uniform();
    const double x2 = rng.uniform();
    const double level = static_cast<double>(rng.below(2));
    std::vector<std::optional<double>> cells = {x1, x2, level};
    if (rng.bernoulli(0.1)) cells[1].reset();
    d.add_row({"p", std::to_string(i)}, cells, 2.0 * x1 + 0.3 * level + 0.05 * rng.normal());
  }
  return d;
}

TEST(ExplainDataset, ParallelMatchesSerial) {
  const Dataset d = monotone_data(300, 3);
  gbdt::TrainConfig cfg;
  cfg.num_boost_round = 60;
  const auto m = gbdt::fit(d, cfg).model;
  kernels::set_num_threads(4);
  const auto par = explain_dataset(m, d);
  kernels::set_num_threads(0);
  const auto ser = explain_dataset_serial(m, d);
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    EXPECT_EQ(par[i].contributions, ser[i].contributions);
    EXPECT_NEAR(sum(par[i]), m.predict(d.row_values(i), d.row_mask(i)), 1e-9);
  }
}

TEST(Importance, RanksAndTies) {
  const Dataset d = monotone_data(400, 4);
  gbdt::TrainConfig cfg;
  cfg.num_boost_round = 80;
  const auto m = gbdt::fit(d, cfg).model;
  auto m2 = m;
  m2.feature_names.push_back("spare");
  Dataset d2({"x1", "x2", "level", "spare"});
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::vector<std::optional<double>> cells;
    for (std::size_t f = 0; f < 3; ++f) cells.push_back(d.cell(i, f));
    cells.push_back(1.0);
    d2.add_row(d.key(i), cells, d.label(i));
  }
  const auto table = global_importance(m2, d2);
  EXPECT_EQ(table.ranking().front(), "x1");
  EXPECT_EQ(table.entries[3].impact, 0.0);
  EXPECT_EQ(table.entries[3].rank, 4);
  EXPECT_EQ(table.entries[0].scatter.size(), d.rows());
}

TEST(Importance, SingleRowIsAbsoluteShap) {
  const Dataset d = monotone_data(200, 5);
  gbdt::TrainConfig cfg;
  cfg.num_boost_round = 40;
  const auto m = gbdt::fit(d, cfg).model;
  const std::vector<std::size_t> first = {0};
  const Dataset one = d.select_rows(first);
  const auto table = global_importance(m, one);
  const auto e = shap_values(m, d.row_values(0), d.row_mask(0));
  for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(table.entries[f].impact, std::fabs(e.contributions[f]));
}

TEST(Importance, AllTiedKeepsRegistryOrder) {
  TreeEnsemble m;
  m.feature_names = {"c", "a", "b"};
  Dataset d({"c", "a", "b"});
  d.add_row({"p", "t"}, std::vector<std::optional<double>>{1.0, 2.0, 3.0}, 0.0);
  const auto table = global_importance(m, d);
  EXPECT_EQ(table.ranking(), (std::vector<std::string>{"c", "a", "b"}));
}

TEST(MainEffects, CountsAndCorrelationSign) {
  const Dataset d = monotone_data(500, 6);
  gbdt::TrainConfig cfg;
  cfg.num_boost_round = 100;
  const auto m = gbdt::fit(d, cfg).model;
  const auto ex = explain_dataset(m, d);
  EffectOptions opt;
  opt.bins_by_feature["x2"] = 5;
  const auto effects = main_effects(ex, d, m.feature_names, opt);
  ASSERT_EQ(effects.size(), 3u);
  for (const auto& eff : effects) {
    std::size_t total = 0;
    for (const auto& b : eff.bins) total += b.count;
    EXPECT_EQ(total, d.rows()) << eff.feature;
  }
  EXPECT_GT(effects[0].correlation.r, 0.9);
  EXPECT_FALSE(effects[0].correlation.degenerate);
  EXPECT_LE(effects[0].bins.size(), 18u);
  EXPECT_TRUE(effects[1].bins.back().missing);
  EXPECT_LE(effects[1].bins.size(), 6u);
  EXPECT_EQ(effects[2].bins.size(), 2u);
}

TEST(MainEffects, DegenerateAndEmpty) {
  Dataset d({"a", "b"});
  std::vector<Explanation> ex;
  for (int i = 0; i < 10; ++i) {
    d.add_row({"p", std::to_string(i)}, std::vector<std::optional<double>>{i * 1.0, std::nullopt}, 0.0);
    ex.push_back({0.0, {0.25, 0.0}, 0.25});
  }
  const std::vector<std::string> names = {"a", "b"};
  const auto effects = main_effects(ex, d, names);
  EXPECT_TRUE(effects[0].correlation.degenerate);
  EXPECT_EQ(effects[0].correlation.r, 0.0);
  EXPECT_TRUE(effects[1].empty);
}

TEST(Instance, ConstantModelShowsBaseOnly) {
  TreeEnsemble m;
  m.feature_names = {"a", "b"};
  m.base_score = 0.4;
  const std::vector<double> v = {1.0, 2.0};
  const std::vector<std::uint8_t> p = {1, 1};
  const auto r = explain_instance(m, v, p);
  EXPECT_TRUE(r.contributions.empty());
  EXPECT_EQ(r.base_value, 0.4);
  EXPECT_EQ(r.prediction, 0.4);
  std::ostringstream out;
  write_report_csv(out, r);
  EXPECT_NE(out.str().find("(base)"), std::string::npos);
}

TEST(Instance, OrderedByMagnitudeAndAdditive) {
  const Dataset d = monotone_data(300, 7);
  gbdt::TrainConfig cfg;
  cfg.num_boost_round = 60;
  const auto m = gbdt::fit(d, cfg).model;
  for (std::size_t row = 0; row < 20; ++row) {
    const auto r = explain_instance(m, d, row);
    for (std::size_t i = 1; i < r.contributions.size(); ++i) {
      EXPECT_GE(std::fabs(r.contributions[i - 1].shap), std::fabs(r.contributions[i].shap));
    }
    EXPECT_NEAR(r.base_value + r.contribution_sum, r.prediction, 1e-9);
  }
}

}  // namespace
}  // namespace gazesa::shap
