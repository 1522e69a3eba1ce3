#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gazesa/dataset.hpp"
#include "gazesa/features.hpp"
#include "gazesa/gaze_events.hpp"
#include "gazesa/sa_score.hpp"

namespace gazesa::synth {

inline constexpr int kGeneratorVersion = 1;

// Published generative SA model:
//   sa = clamp01(intercept + length * [L >= 3 s]
//                + back_mirror * min(backMirror, 12) / 12
//                + fixation * clamp01((fMean - 0.22 s) / 0.20 s)
//                + road * min(max(road - 6, 0), 24) / 24
//                + skill * skill + noise)
struct Weights {
  double intercept = 0.25;
  double length = 0.20;
  double back_mirror = 0.25;
  double fixation = 0.15;
  double road = -0.20;
  double skill = 0.15;
};

struct SynthConfig {
  int participants = 32;
  int trials = 33;
  std::uint64_t seed = 0;
  double noise_sd = 0.05;  // 0 gives the noiseless variant
  Weights weights;
};

struct ScenarioSpec {
  int index = 0;
  double video_length_s = 1.0;
  bool hazard = false;
  Scene truth;
};

struct SimParticipant {
  int index = 0;
  double skill = 0.0;  // latent, [0, 1]
  double age = 0.0;
  double gender = 1.0;
  double year_driving = 0.0;
  double driving_frequency = 1.0;
  double fixation_scale_s = 0.3;  // typical fixation duration
  double back_mirror_rate = 0.1;  // share of fixations aimed at each AOI
  double road_rate = 0.5;
  double pupil_base_mm = 4.0;
  double pupil_amplitude_mm = 0.1;
};

// What the script put into the stream; the detectors must recover it.
struct ScriptedEvent {
  EventKind kind = EventKind::kFixation;
  std::size_t begin = 0;  // sample range [begin, end)
  std::size_t end = 0;
  std::optional<std::string> aoi;  // fixations
};

// Latent drivers and label terms of one trial.
struct LedgerRow {
  std::string participant_id;
  std::string trial_id;
  double video_length_s = 0.0;
  bool hazard = false;
  double skill = 0.0;
  int num_fixations = 0;
  int num_saccades = 0;
  int num_blinks = 0;
  int back_mirror = 0;
  int road = 0;
  double fixation_mean_s = 0.0;
  double length_term = 0.0;
  double back_mirror_term = 0.0;
  double fixation_term = 0.0;
  double road_term = 0.0;
  double skill_term = 0.0;
  double noise = 0.0;
  double sa_clean = 0.0;  // before noise and clamping
  double sa = 0.0;
};

struct GeneratedTrial {
  std::vector<GazeSample> samples;
  std::vector<ScriptedEvent> events;
  ContextVars context;
  LedgerRow ledger;
};

class Study {
 public:
  // Throws Error(kInvalidArgument) unless participants, trials >= 1 and
  // 0 <= noise_sd <= 0.05.
  explicit Study(SynthConfig config);

  const SynthConfig& config() const { return config_; }
  const std::vector<SimParticipant>& participants() const { return participants_; }
  const std::vector<ScenarioSpec>& scenarios() const { return scenarios_; }
  const AoiLayout& layout() const { return layout_; }

  // Deterministic in (seed, participant, trial) alone.
  GeneratedTrial trial(int participant, int trial) const;

  std::size_t num_trials() const {
    return participants_.size() * scenarios_.size();
  }

 private:
  SynthConfig config_;
  AoiLayout layout_;
  std::vector<SimParticipant> participants_;
  std::vector<ScenarioSpec> scenarios_;
};

std::string participant_id(int participant);
std::string trial_id(int trial);

// Scenario video lengths for `trials` videos: the 33-video pattern
// 6x1, 6x3, 6x6, 6x9, 5x12, 4x20 s, repeated as needed.
std::vector<double> video_lengths(int trials);

// Ledger for every trial, participant-major.
std::vector<LedgerRow> truth_table(const Study& study);

// Generates, detects and extracts every trial in memory (no files). Trials
// run in parallel; output is participant-major and independent of threads.
Dataset extract_study(const Study& study, bool eye_only = false);

// Writes gaze/p{pp}_t{tt}.csv, scenes/t{tt}.json, meta.csv, labels.csv and
// ledger.csv under `dir`. The manifest is written by the caller.
void write_study(const Study& study, const std::string& dir);

void write_ledger_csv(std::ostream& out, const std::vector<LedgerRow>& rows);

}  // namespace gazesa::synth
