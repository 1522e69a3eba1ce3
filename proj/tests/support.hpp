#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gazesa/gaze_events.hpp"
#include "gazesa/gbdt.hpp"
#include "gazesa/rng.hpp"

namespace gazesa::testing {

// Builds 2 kHz traces, t = k / 2000. A `move` starts from the last sample
// already emitted, so the saccade's first pair begins there and its duration
// equals the move length exactly; the fixation before it loses that sample.
class Trace {
 public:
  Trace& hold(double ms, double x, double y);
  Trace& move(double ms, double x, double y);
  // Unusable samples (zero area, flagged invalid).
  Trace& lost(double ms);
  Trace& area(double a) {
    area_ = a;
    return *this;
  }

  const std::vector<GazeSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

 private:
  void push(double x, double y, bool valid);

  std::vector<GazeSample> samples_;
  double x_ = 0.0, y_ = 0.0;
  double area_ = 10.0;
};

std::size_t samples_for_ms(double ms);

// Random tree with conserved integer covers, `depth` <= max_depth.
gbdt::Tree random_tree(Rng& rng, int num_features, int max_depth);
gbdt::TreeEnsemble random_ensemble(Rng& rng, int num_features, int max_trees, int max_depth);

struct Instance {
  std::vector<double> values;
  std::vector<std::uint8_t> present;
};
Instance random_instance(Rng& rng, int num_features, double present_rate = 0.85);

// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const { return path_; }
  std::string operator/(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

std::string read_file(const std::string& path);

}  // namespace gazesa::testing
