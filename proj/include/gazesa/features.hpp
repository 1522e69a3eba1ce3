#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazesa/gaze_events.hpp"

namespace gazesa {

enum class FeatureKind { kContinuous, kNominal };

struct FeatureInfo {
  std::string_view name;
  std::string_view unit;
  FeatureKind kind;
  bool eye_tracking;
};

inline constexpr std::size_t kNumPredictors = 28;
inline constexpr std::size_t kNumContext = 12;
inline constexpr std::size_t kNumEyeFeatures = 16;

// The 28 predictors in table order: 12 contextual variables then 16
// eye-tracking measures.
const std::array<FeatureInfo, kNumPredictors>& predictor_table();
std::vector<std::string> predictor_names();
std::vector<std::string> eye_feature_names();
std::optional<std::size_t> predictor_index(std::string_view name);
// Kind of a named feature; names outside the table are continuous.
FeatureKind feature_kind(std::string_view name);

// Contextual variables 1-12 (age .. carPlacedRight), missing allowed.
struct ContextVars {
  std::array<std::optional<double>, kNumContext> values{};
};

struct TrialRecord {
  std::string participant_id;
  std::string trial_id;
  std::array<std::optional<double>, kNumPredictors> values{};
  std::optional<double> sa;

  std::optional<double> get(std::string_view name) const;
  void set(std::string_view name, std::optional<double> value);
};

// Window at each end of the trial used for pupilChange.
inline constexpr double kPupilChangeWindowS = 0.200;

// Table rows 13-28 from detected events plus the supplied context.
// Moments over an empty set are missing; standard deviations need n >= 2.
TrialRecord extract_features(std::span<const GazeEvent> events, const PupilSeries& pupil,
                             const ContextVars& meta);

}  // namespace gazesa
