#include "gazesa/sa_score.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gazesa/error.hpp"

namespace gazesa {

const char* lane_name(Lane lane) {
  switch (lane) {
    case Lane::kLeft:
      return "left";
    case Lane::kMiddle:
      return "middle";
    case Lane::kRight:
      return "right";
  }
  return "middle";
}

namespace {

Lane parse_lane(const std::string& s) {
  if (s == "left") return Lane::kLeft;
  if (s == "middle") return Lane::kMiddle;
  if (s == "right") return Lane::kRight;
  throw Error(Error::Kind::kParse, "lane must be left/middle/right, got '" + s + "'");
}

}  // namespace

Scene Scene::from_json(const std::string& text) {
  Scene scene;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& v : doc.at("vehicles")) {
      Vehicle veh;
      veh.lane = parse_lane(v.at("lane").get<std::string>());
      veh.pos_m = v.at("pos_m").get<double>();
      veh.speed_kmh = v.at("speed_kmh").get<double>();
      scene.vehicles.push_back(veh);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::kParse, std::string("scene: ") + e.what());
  }
  return scene;
}

Scene Scene::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::kIo, "cannot open scene", path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(buf.str());
  } catch (const Error& e) {
    throw e.with_file(path);
  }
}

std::string Scene::to_json() const {
  nlohmann::ordered_json doc;
  doc["vehicles"] = nlohmann::ordered_json::array();
  for (const auto& v : vehicles) {
    doc["vehicles"].push_back(
        {{"lane", lane_name(v.lane)}, {"pos_m", v.pos_m}, {"speed_kmh", v.speed_kmh}});
  }
  return doc.dump(2);
}

void validate_truth(const Scene& truth) {
  const std::size_t n = truth.vehicles.size();
  if (n < 5 || n > 6) {
    throw Error(Error::Kind::kValidation, "a truth scene has 5 or 6 vehicles");
  }
  for (const auto& v : truth.vehicles) {
    if (std::fabs(v.pos_m) > kSceneExtentM) {
      throw Error(Error::Kind::kValidation, "vehicle further than 80 m from ego");
    }
    if (v.speed_kmh != 80.0 && v.speed_kmh != 100.0 && v.speed_kmh != 120.0) {
      throw Error(Error::Kind::kValidation, "vehicle speed must be 80, 100 or 120 km/h");
    }
  }
}

std::vector<VehicleMatch> match_vehicles(const Scene& truth, const Scene& recreation) {
  std::vector<VehicleMatch> matches;
  std::vector<bool> truth_used(truth.vehicles.size(), false);
  std::vector<bool> placed_used(recreation.vehicles.size(), false);
  for (Lane lane : {Lane::kLeft, Lane::kMiddle, Lane::kRight}) {
    while (true) {
      std::optional<VehicleMatch> best;
      double best_dist = 0.0;
      for (std::size_t t = 0; t < truth.vehicles.size(); ++t) {
        if (truth_used[t] || truth.vehicles[t].lane != lane) continue;
        for (std::size_t p = 0; p < recreation.vehicles.size(); ++p) {
          if (placed_used[p] || recreation.vehicles[p].lane != lane) continue;
          const double d = std::fabs(truth.vehicles[t].pos_m - recreation.vehicles[p].pos_m);
          if (!best || d < best_dist) {
            best = VehicleMatch{t, p};
            best_dist = d;
          }
        }
      }
      if (!best) break;
      truth_used[best->truth] = true;
      placed_used[best->placed] = true;
      matches.push_back(*best);
    }
  }
  std::sort(matches.begin(), matches.end(),
            [](const VehicleMatch& a, const VehicleMatch& b) { return a.truth < b.truth; });
  return matches;
}

SpeedRelation speed_relation(double speed_kmh) {
  if (speed_kmh < kEgoSpeedKmh) return SpeedRelation::kSlower;
  if (speed_kmh > kEgoSpeedKmh) return SpeedRelation::kFaster;
  return SpeedRelation::kEqual;
}

SaScore score_sa(const Scene& truth, const Scene& recreation) {
  SaScore out;
  const auto n_true = static_cast<double>(truth.vehicles.size());
  const auto n_placed = static_cast<double>(recreation.vehicles.size());
  if (n_true == 0.0) {
    out.count_score = n_placed == 0.0 ? 1.0 : 0.0;
  } else {
    out.count_score = 1.0 - std::min(std::fabs(n_true - n_placed), n_true) / n_true;
  }

  const auto matches = match_vehicles(truth, recreation);
  out.matched = matches.size();
  if (matches.empty()) {
    out.no_matches = true;
    out.distance_score = 0.0;
    out.speed_score = 0.0;
  } else {
    double error_sum = 0.0;
    std::size_t mismatches = 0;
    for (const auto& m : matches) {
      const Vehicle& t = truth.vehicles[m.truth];
      const Vehicle& p = recreation.vehicles[m.placed];
      error_sum += std::min(std::fabs(t.pos_m - p.pos_m) / kSceneExtentM, 1.0);
      if (speed_relation(t.speed_kmh) != speed_relation(p.speed_kmh)) ++mismatches;
    }
    const auto k = static_cast<double>(matches.size());
    out.distance_score = 1.0 - error_sum / k;
    out.speed_score = 1.0 - static_cast<double>(mismatches) / k;
  }
  out.sa = (out.count_score + out.distance_score + out.speed_score) / 3.0;
  return out;
}

}  // namespace gazesa
