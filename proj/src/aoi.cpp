#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gazesa/error.hpp"
#include "gazesa/gaze_events.hpp"

namespace gazesa {

const std::vector<std::string>& aoi_names() {
  static const std::vector<std::string> kNames = {"backMirror", "leftMirror", "rightMirror",
                                                  "road", "sky"};
  return kNames;
}

AoiLayout::AoiLayout(std::vector<AoiRegion> regions) : regions_(std::move(regions)) {
  const auto& names = aoi_names();
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& r = regions_[i];
    if (std::find(names.begin(), names.end(), r.name) == names.end()) {
      throw Error(Error::Kind::kValidation, "unknown AOI region '" + r.name + "'");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (regions_[j].name == r.name) {
        throw Error(Error::Kind::kValidation, "duplicate AOI region '" + r.name + "'");
      }
    }
    if (!(r.x0 <= r.x1 && r.y0 <= r.y1) || r.x0 < 0.0 || r.y0 < 0.0 || r.x1 > kFrameWidthPx ||
        r.y1 > kFrameHeightPx) {
      throw Error(Error::Kind::kValidation,
                  "AOI region '" + r.name + "' must be a rectangle inside the 1920x1080 frame");
    }
  }
  std::sort(regions_.begin(), regions_.end(), [](const AoiRegion& a, const AoiRegion& b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.name < b.name;
  });
}

AoiLayout AoiLayout::default_layout() {
  return AoiLayout({
      {"backMirror", 810, 40, 1110, 160, 5},
      {"leftMirror", 40, 600, 300, 760, 4},
      {"rightMirror", 1620, 600, 1880, 760, 4},
      {"road", 320, 520, 1600, 1080, 2},
      {"sky", 0, 0, 1920, 420, 1},
  });
}

AoiLayout AoiLayout::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::kParse, std::string("AOI layout: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Error::Kind::kParse, "AOI layout must be a JSON object");
  std::vector<AoiRegion> regions;
  for (const auto& [name, body] : doc.items()) {
    AoiRegion r;
    r.name = name;
    try {
      r.x0 = body.at("x0").get<double>();
      r.y0 = body.at("y0").get<double>();
      r.x1 = body.at("x1").get<double>();
      r.y1 = body.at("y1").get<double>();
      r.priority = body.at("priority").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Error::Kind::kParse, "AOI region '" + name + "': " + e.what());
    }
    regions.push_back(r);
  }
  return AoiLayout(std::move(regions));
}

AoiLayout AoiLayout::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::kIo, "cannot open AOI layout", path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(buf.str());
  } catch (const Error& e) {
    throw e.with_file(path);
  }
}

std::string AoiLayout::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& name : aoi_names()) {
    for (const auto& r : regions_) {
      if (r.name != name) continue;
      doc[name] = {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}, {"priority", r.priority}};
    }
  }
  return doc.dump(2);
}

std::optional<std::string> AoiLayout::locate(double x, double y) const {
  for (const auto& r : regions_) {
    if (r.contains(x, y)) return r.name;
  }
  return std::nullopt;
}

void assign_aoi(std::vector<GazeEvent>& fixations, const AoiLayout& layout) {
  for (auto& f : fixations) {
    if (f.kind != EventKind::kFixation) continue;
    f.aoi = layout.locate(f.centroid_x, f.centroid_y);
  }
}

}  // namespace gazesa
