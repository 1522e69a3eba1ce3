#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gazesa/error.hpp"
#include "gazesa/rng.hpp"
#include "gazesa/sa_score.hpp"

namespace gazesa {
namespace {

Scene five_vehicles() {
  Scene s;
  s.vehicles = {{Lane::kLeft, 20.0, 120.0},
                {Lane::kLeft, -30.0, 80.0},
                {Lane::kMiddle, 40.0, 100.0},
                {Lane::kRight, 10.0, 80.0},
                {Lane::kRight, -60.0, 120.0}};
  return s;
}

TEST(SaScore, PerfectRecreation) {
  const Scene t = five_vehicles();
  const auto s = score_sa(t, t);
  EXPECT_EQ(s.sa, 1.0);
  EXPECT_EQ(s.matched, 5u);
  EXPECT_EQ(match_vehicles(t, t).size(), 5u);
}

TEST(SaScore, EmptyRecreation) {
  const auto s = score_sa(five_vehicles(), Scene{});
  EXPECT_EQ(s.count_score, 0.0);
  EXPECT_EQ(s.distance_score, 0.0);
  EXPECT_EQ(s.speed_score, 0.0);
  EXPECT_EQ(s.sa, 0.0);
  EXPECT_TRUE(s.no_matches);
  EXPECT_TRUE(match_vehicles(five_vehicles(), Scene{}).empty());
}

TEST(SaScore, WorkedExample) {
  // Four vehicles placed, each 40 m off (50 % of 80 m); two speed relations flipped.
  const Scene t = five_vehicles();
  Scene r;
  r.vehicles = {{Lane::kLeft, 60.0, 120.0},
                {Lane::kLeft, -70.0, 100.0},
                {Lane::kMiddle, 0.0, 80.0},
                {Lane::kRight, 50.0, 80.0}};
  const auto s = score_sa(t, r);
  EXPECT_EQ(s.matched, 4u);
  EXPECT_NEAR(s.count_score, 0.8, 1e-15);
  EXPECT_NEAR(s.distance_score, 0.5, 1e-15);
  EXPECT_NEAR(s.speed_score, 0.5, 1e-15);
  EXPECT_NEAR(s.sa, 0.6, 1e-15);
}

TEST(SaScore, NearerPlacementMatches) {
  Scene t;
  t.vehicles = {{Lane::kMiddle, 10.0, 100.0}};
  Scene r;
  r.vehicles = {{Lane::kMiddle, 50.0, 100.0}, {Lane::kMiddle, 12.0, 100.0}};
  const auto m = match_vehicles(t, r);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].placed, 1u);
}

TEST(SaScore, LanesNeverCross) {
  Scene t;
  t.vehicles = {{Lane::kLeft, 10.0, 100.0}};
  Scene r;
  r.vehicles = {{Lane::kRight, 10.0, 100.0}};
  EXPECT_TRUE(match_vehicles(t, r).empty());
}

TEST(SaScore, DistanceErrorIsCapped) {
  Scene t;
  t.vehicles = {{Lane::kLeft, 70.0, 100.0}};
  Scene r;
  r.vehicles = {{Lane::kLeft, -150.0, 100.0}};
  EXPECT_EQ(score_sa(t, r).distance_score, 0.0);
}

// Exhaustive oracle: for small lanes, greedy closest-pair matching equals the
// assignment found by repeatedly taking the global minimum over all pairs.
TEST(SaScore, MatchingAgreesWithBruteForceOnSmallLanes) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    Scene t, r;
    const int nt = static_cast<int>(rng.range(0, 3));
    const int nr = static_cast<int>(rng.range(0, 3));
    for (int i = 0; i < nt; ++i) t.vehicles.push_back({Lane::kMiddle, std::round(rng.uniform(-80, 80)), 100.0});
    for (int i = 0; i < nr; ++i) r.vehicles.push_back({Lane::kMiddle, std::round(rng.uniform(-80, 80)), 100.0});
    const auto m = match_vehicles(t, r);
    EXPECT_EQ(m.size(), static_cast<std::size_t>(std::min(nt, nr)));
    std::vector<bool> tu(nt), ru(nr);
    std::vector<std::pair<std::size_t, std::size_t>> oracle;
    while (true) {
      double best = std::numeric_limits<double>::infinity();
      int bt = -1, br = -1;
      for (int i = 0; i < nt; ++i) {
        for (int j = 0; j < nr; ++j) {
          if (tu[i] || ru[j]) continue;
          const double d = std::fabs(t.vehicles[i].pos_m - r.vehicles[j].pos_m);
          if (d < best) {
            best = d;
            bt = i;
            br = j;
          }
        }
      }
      if (bt < 0) break;
      tu[bt] = ru[br] = true;
      oracle.emplace_back(bt, br);
    }
    std::sort(oracle.begin(), oracle.end());
    ASSERT_EQ(oracle.size(), m.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
      EXPECT_EQ(m[k].truth, oracle[k].first);
      EXPECT_EQ(m[k].placed, oracle[k].second);
    }
  }
}

TEST(SaScore, ScoreStaysInUnitInterval) {
  Rng rng(4);
  const Lane lanes[] = {Lane::kLeft, Lane::kMiddle, Lane::kRight};
  const double speeds[] = {80.0, 100.0, 120.0};
  for (int trial = 0; trial < 200; ++trial) {
    Scene r;
    const int n = static_cast<int>(rng.range(0, 8));
    for (int i = 0; i < n; ++i) {
      r.vehicles.push_back({lanes[rng.below(3)], rng.uniform(-100, 100), speeds[rng.below(3)]});
    }
    const auto s = score_sa(five_vehicles(), r);
    EXPECT_GE(s.sa, 0.0);
    EXPECT_LE(s.sa, 1.0);
  }
}

TEST(SaScore, TruthValidation) {
  EXPECT_NO_THROW(validate_truth(five_vehicles()));
  Scene bad = five_vehicles();
  bad.vehicles[0].speed_kmh = 90.0;
  EXPECT_THROW(validate_truth(bad), Error);
  bad = five_vehicles();
  bad.vehicles.pop_back();
  EXPECT_THROW(validate_truth(bad), Error);
}

TEST(SaScore, SceneJsonRoundTrip) {
  const Scene t = five_vehicles();
  const Scene back = Scene::from_json(t.to_json());
  ASSERT_EQ(back.vehicles.size(), 5u);
  EXPECT_EQ(back.vehicles[4].pos_m, -60.0);
  EXPECT_EQ(back.vehicles[4].lane, Lane::kRight);
  EXPECT_THROW(Scene::from_json("{\"vehicles\":[{\"lane\":\"up\",\"pos_m\":0,\"speed_kmh\":80}]}"), Error);
}

}  // namespace
}  // namespace gazesa
