#include "gazesa/features.hpp"

#include <algorithm>

#include "gazesa/error.hpp"
#include "gazesa/stats.hpp"

namespace gazesa {
namespace {

constexpr auto kC = FeatureKind::kContinuous;
constexpr auto kN = FeatureKind::kNominal;

constexpr std::array<FeatureInfo, kNumPredictors> kTable = {{
    {"age", "year", kC, false},
    {"gender", "", kN, false},
    {"yearDriving", "year", kC, false},
    {"drivingFrequency", "", kN, false},
    {"videoLength", "s", kN, false},
    {"decisionTime", "s", kC, false},
    {"decisionMade", "", kN, false},
    {"correctDecision", "", kN, false},
    {"danger", "likert", kC, false},
    {"difficulty", "likert", kC, false},
    {"carPlacedLeft", "", kC, false},
    {"carPlacedRight", "", kC, false},
    {"numS", "", kC, true},
    {"sAmpMean", "px", kC, true},
    {"sAmpStd", "px", kC, true},
    {"sAmpMax", "px", kC, true},
    {"numF", "", kC, true},
    {"fMean", "ms", kC, true},
    {"fStd", "ms", kC, true},
    {"fMax", "ms", kC, true},
    {"backMirror", "", kC, true},
    {"leftMirror", "", kC, true},
    {"rightMirror", "", kC, true},
    {"road", "", kC, true},
    {"sky", "", kC, true},
    {"pupilChange", "mm", kC, true},
    {"pupilMean", "mm", kC, true},
    {"pupilStd", "mm", kC, true},
}};

struct Moments {
  std::optional<double> mean, sd, max;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  m.mean = stats::anchored_mean(v);
  m.sd = stats::sample_sd(v);
  m.max = *std::max_element(v.begin(), v.end());
  return m;
}

}  // namespace

const std::array<FeatureInfo, kNumPredictors>& predictor_table() { return kTable; }

std::vector<std::string> predictor_names() {
  std::vector<std::string> names;
  for (const auto& f : kTable) names.emplace_back(f.name);
  return names;
}

std::vector<std::string> eye_feature_names() {
  std::vector<std::string> names;
  for (const auto& f : kTable) {
    if (f.eye_tracking) names.emplace_back(f.name);
  }
  return names;
}

std::optional<std::size_t> predictor_index(std::string_view name) {
  for (std::size_t i = 0; i < kTable.size(); ++i) {
    if (kTable[i].name == name) return i;
  }
  return std::nullopt;
}

FeatureKind feature_kind(std::string_view name) {
  const auto idx = predictor_index(name);
  return idx ? kTable[*idx].kind : FeatureKind::kContinuous;
}

std::optional<double> TrialRecord::get(std::string_view name) const {
  const auto idx = predictor_index(name);
  if (!idx) throw Error(Error::Kind::kRegistry, "unknown feature '" + std::string(name) + "'");
  return values[*idx];
}

void TrialRecord::set(std::string_view name, std::optional<double> value) {
  const auto idx = predictor_index(name);
  if (!idx) throw Error(Error::Kind::kRegistry, "unknown feature '" + std::string(name) + "'");
  values[*idx] = value;
}

TrialRecord extract_features(std::span<const GazeEvent> events, const PupilSeries& pupil,
                             const ContextVars& meta) {
  TrialRecord rec;
  for (std::size_t i = 0; i < kNumContext; ++i) rec.values[i] = meta.values[i];

  std::vector<double> amplitudes;
  std::vector<double> durations_ms;
  double aoi_counts[5] = {0, 0, 0, 0, 0};
  const auto& names = aoi_names();
  for (const auto& e : events) {
    if (e.kind == EventKind::kSaccade) {
      amplitudes.push_back(e.amplitude);
    } else if (e.kind == EventKind::kFixation) {
      durations_ms.push_back(e.duration * 1000.0);
      if (e.aoi) {
        const auto it = std::find(names.begin(), names.end(), *e.aoi);
        if (it != names.end()) aoi_counts[it - names.begin()] += 1.0;
      }
    }
  }

  rec.set("numS", static_cast<double>(amplitudes.size()));
  const Moments sm = moments(amplitudes);
  rec.set("sAmpMean", sm.mean);
  rec.set("sAmpStd", sm.sd);
  rec.set("sAmpMax", sm.max);

  rec.set("numF", static_cast<double>(durations_ms.size()));
  const Moments fm = moments(durations_ms);
  rec.set("fMean", fm.mean);
  rec.set("fStd", fm.sd);
  rec.set("fMax", fm.max);

  for (std::size_t a = 0; a < names.size(); ++a) rec.set(names[a], aoi_counts[a]);

  std::vector<double> all, head, tail;
  if (!pupil.t.empty()) {
    const double t_first = pupil.t.front();
    const double t_last = pupil.t.back();
    for (std::size_t i = 0; i < pupil.t.size(); ++i) {
      if (pupil.flag[i] == PupilFlag::kInvalid) continue;
      const double d = pupil.diameter[i];
      all.push_back(d);
      if (pupil.t[i] - t_first < kPupilChangeWindowS - kTimeEps) head.push_back(d);
      if (t_last - pupil.t[i] < kPupilChangeWindowS - kTimeEps) tail.push_back(d);
    }
  }
  if (!all.empty()) {
    rec.set("pupilMean", stats::anchored_mean(all));
    rec.set("pupilStd", stats::sample_sd(all));
  }
  if (!head.empty() && !tail.empty()) {
    rec.set("pupilChange", stats::anchored_mean(tail) - stats::anchored_mean(head));
  }
  return rec;
}

}  // namespace gazesa
