#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gazesa/gaze_events.hpp"
#include "support.hpp"

namespace gazesa {
namespace {

using testing::Trace;

TEST(Pupil, ConstantAreaGivesConstantDiameter) {
  Trace tr;
  tr.area(7.3).hold(400, 900, 600);
  const auto p = pupil_pipeline(tr.samples(), {}, 0.5);
  const double expected = 2.0 * std::sqrt(7.3 / std::numbers::pi) * 0.5;
  for (double d : p.diameter) EXPECT_DOUBLE_EQ(d, expected);
}

TEST(Pupil, FourPiIsFourMillimetres) {
  Trace tr;
  tr.area(4.0 * std::numbers::pi).hold(200, 900, 600);
  const auto p = pupil_pipeline(tr.samples(), {}, 1.0);
  for (double d : p.diameter) EXPECT_NEAR(d, 4.0, 1e-12);
  EXPECT_NEAR(area_to_diameter(4.0 * std::numbers::pi, 1.0), 4.0, 1e-15);
}

TEST(Pupil, BlinkBetweenPlateausIsInterpolatedStrictlyBetween) {
  const double a1 = 10.0, a2 = 20.0;
  Trace tr;
  tr.area(a1).hold(300, 900, 600).lost(100).area(a2).hold(300, 900, 600);
  const auto blinks = detect_blinks(tr.samples());
  ASSERT_EQ(blinks.blinks.size(), 1u);
  const auto p = pupil_pipeline(tr.samples(), blinks.blinks, 1.0);
  const double d1 = area_to_diameter(a1, 1.0);
  const double d2 = area_to_diameter(a2, 1.0);
  std::size_t interpolated = 0;
  for (std::size_t i = 0; i < p.flag.size(); ++i) {
    if (p.flag[i] != PupilFlag::kInterpolatedBlink) continue;
    ++interpolated;
    EXPECT_GT(p.diameter[i], d1);
    EXPECT_LT(p.diameter[i], d2);
  }
  EXPECT_EQ(interpolated, 200u);
  EXPECT_DOUBLE_EQ(p.diameter.front(), d1);
  EXPECT_DOUBLE_EQ(p.diameter.back(), d2);
}

TEST(Pupil, AllInvalidTrialIsFlagged) {
  Trace tr;
  tr.lost(300);
  const auto p = pupil_pipeline(tr.samples(), {}, 1.0);
  EXPECT_TRUE(p.all_invalid());
}

TEST(Pupil, GapSamplesStayInvalid) {
  Trace tr;
  tr.hold(200, 900, 600).lost(300).hold(200, 900, 600);
  const auto b = detect_blinks(tr.samples());
  const auto p = pupil_pipeline(tr.samples(), b.blinks, 1.0);
  EXPECT_EQ(p.flag[500], PupilFlag::kInvalid);
  EXPECT_EQ(p.diameter[500], 0.0);
  EXPECT_FALSE(p.all_invalid());
}

}  // namespace
}  // namespace gazesa
