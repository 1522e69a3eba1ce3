#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gazesa::cli {

struct Options {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string data;
  std::string model;
  std::string out;
  int folds = 10;
  bool eye_only = false;
  bool group_by_participant = false;
  int threads = 0;

  // synth
  int participants = 32;
  int trials = 33;
  double noise = 0.05;
  // extract
  std::string aoi;
  double pupil_scale = 1.0;
  bool events = false;
  // score
  std::string truth;
  std::string recreation;
  std::string participant_id;
  std::string trial_id;
  // train / evaluate / explain
  std::vector<std::string> features;
  std::string model_kind = "gbdt";
  bool baselines = false;
  std::optional<long long> instance;
  bool svg = true;

  std::vector<std::string> argv;  // echoed into the manifest
};

int cmd_synth(const Options& o);
int cmd_extract(const Options& o);
int cmd_score(const Options& o);
int cmd_train(const Options& o);
int cmd_evaluate(const Options& o);
int cmd_explain(const Options& o);
int cmd_select_features(const Options& o);
int cmd_predict(const Options& o, std::istream& in, std::ostream& out, std::ostream& diag);

}  // namespace gazesa::cli
