#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace gazesa {

enum class Lane { kLeft, kMiddle, kRight };
const char* lane_name(Lane lane);

struct Vehicle {
  Lane lane = Lane::kMiddle;
  double pos_m = 0.0;       // longitudinal, relative to ego (+ ahead)
  double speed_kmh = 100.0; // one of 80 / 100 / 120
};

inline constexpr double kEgoSpeedKmh = 100.0;
inline constexpr double kSceneExtentM = 80.0;

struct Scene {
  std::vector<Vehicle> vehicles;

  static Scene from_json(const std::string& text);
  static Scene load(const std::string& path);
  std::string to_json() const;
};

// Ground-truth scene. Throws Error(kValidation) unless it has 5-6 vehicles
// within 80 m of ego travelling at 80/100/120 km/h.
void validate_truth(const Scene& truth);

struct VehicleMatch {
  std::size_t truth = 0;
  std::size_t placed = 0;
};

// Greedy per-lane matching: within each lane, repeatedly take the closest
// unmatched (truth, placed) pair; ties go to the lower truth index, then the
// lower placed index.
std::vector<VehicleMatch> match_vehicles(const Scene& truth, const Scene& recreation);

enum class SpeedRelation { kSlower, kEqual, kFaster };
SpeedRelation speed_relation(double speed_kmh);

struct SaScore {
  double count_score = 0.0;     // s1
  double distance_score = 0.0;  // s2
  double speed_score = 0.0;     // s3
  double sa = 0.0;
  std::size_t matched = 0;
  bool no_matches = false;
};

// Per-pair distance error is |dpos| / 80 m, capped at 1.
SaScore score_sa(const Scene& truth, const Scene& recreation);

}  // namespace gazesa
