#include "gazesa/gaze_events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "gazesa/csv.hpp"
#include "gazesa/error.hpp"
#include "gazesa/stats.hpp"

namespace gazesa {

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kFixation:
      return "fixation";
    case EventKind::kSaccade:
      return "saccade";
    case EventKind::kBlink:
      return "blink";
  }
  return "unknown";
}

void validate_samples(std::span<const GazeSample> samples) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      throw Error(Error::Kind::kValidation, "timestamps must be strictly increasing", {}, i, "t");
    }
  }
}

double sample_end_time(std::span<const GazeSample> samples, std::size_t index) {
  if (index + 1 < samples.size()) return samples[index + 1].t;
  const double period =
      samples.size() >= 2 ? samples[samples.size() - 1].t - samples[samples.size() - 2].t
                          : 1.0 / kNominalRateHz;
  return samples[index].t + period;
}

double trial_duration(std::span<const GazeSample> samples) {
  if (samples.empty()) return 0.0;
  return sample_end_time(samples, samples.size() - 1) - samples.front().t;
}

BlinkResult detect_blinks(std::span<const GazeSample> samples) {
  BlinkResult out;
  const std::size_t n = samples.size();
  std::size_t i = 0;
  while (i < n) {
    if (samples[i].usable()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !samples[j].usable()) ++j;
    const double onset = samples[i].t;
    const double duration = sample_end_time(samples, j - 1) - onset;
    if (duration <= kMaxBlinkS + kTimeEps) {
      GazeEvent blink;
      blink.kind = EventKind::kBlink;
      blink.onset = onset;
      blink.duration = duration;
      blink.begin = i;
      blink.end = j;
      out.blinks.push_back(blink);
    } else {
      out.gaps.push_back({onset, duration, i, j});
    }
    i = j;
  }
  return out;
}

std::vector<GazeEvent> detect_saccades(std::span<const GazeSample> samples) {
  std::vector<GazeEvent> out;
  const std::size_t n = samples.size();
  if (n < 2) return out;
  const double threshold = kMinSaccadeSpeedPxS * (1.0 - 1e-9);
  auto fast = [&](std::size_t k) {
    const GazeSample& a = samples[k];
    const GazeSample& b = samples[k + 1];
    if (!a.usable() || !b.usable()) return false;
    const double speed = std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
    return speed >= threshold;
  };
  std::size_t k = 0;
  while (k + 1 < n) {
    if (!fast(k)) {
      ++k;
      continue;
    }
    std::size_t m = k;
    while (m + 1 < n && fast(m)) ++m;
    // pairs k..m-1 are fast: samples [k, m) with landing sample m
    const double duration = samples[m].t - samples[k].t;
    if (duration >= kMinSaccadeS - kTimeEps && duration <= kMaxSaccadeS + kTimeEps) {
      GazeEvent s;
      s.kind = EventKind::kSaccade;
      s.onset = samples[k].t;
      s.duration = duration;
      s.begin = k;
      s.end = m;
      s.amplitude = std::hypot(samples[m].x - samples[k].x, samples[m].y - samples[k].y);
      out.push_back(s);
    }
    k = m;
  }
  return out;
}

std::vector<GazeEvent> detect_fixations(std::span<const GazeSample> samples,
                                        std::span<const GazeEvent> saccades,
                                        std::span<const GazeEvent> blinks,
                                        std::span<const InvalidGap> gaps) {
  const std::size_t n = samples.size();
  std::vector<std::uint8_t> covered(n, 0);
  auto cover = [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < std::min(e, n); ++k) covered[k] = 1;
  };
  for (const auto& s : saccades) cover(s.begin, s.end);
  for (const auto& b : blinks) cover(b.begin, b.end);
  for (const auto& g : gaps) cover(g.begin, g.end);

  std::vector<GazeEvent> out;
  std::vector<double> xs, ys;
  std::size_t i = 0;
  while (i < n) {
    if (covered[i] || !samples[i].usable()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !covered[j] && samples[j].usable()) ++j;
    const double onset = samples[i].t;
    const double duration = sample_end_time(samples, j - 1) - onset;
    if (duration >= kMinFixationS - kTimeEps) {
      xs.clear();
      ys.clear();
      for (std::size_t k = i; k < j; ++k) {
        xs.push_back(samples[k].x);
        ys.push_back(samples[k].y);
      }
      GazeEvent f;
      f.kind = EventKind::kFixation;
      f.onset = onset;
      f.duration = duration;
      f.begin = i;
      f.end = j;
      f.centroid_x = stats::anchored_mean(xs);
      f.centroid_y = stats::anchored_mean(ys);
      out.push_back(f);
    }
    i = j;
  }
  return out;
}

std::vector<GazeEvent> TrialEvents::merged() const {
  std::vector<GazeEvent> all;
  all.reserve(fixations.size() + saccades.size() + blinks.size());
  all.insert(all.end(), fixations.begin(), fixations.end());
  all.insert(all.end(), saccades.begin(), saccades.end());
  all.insert(all.end(), blinks.begin(), blinks.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const GazeEvent& a, const GazeEvent& b) { return a.begin < b.begin; });
  return all;
}

TrialEvents detect_events(std::span<const GazeSample> samples, const AoiLayout& layout,
                          double mm_per_unit) {
  validate_samples(samples);
  TrialEvents ev;
  BlinkResult br = detect_blinks(samples);
  ev.blinks = std::move(br.blinks);
  ev.gaps = std::move(br.gaps);
  ev.saccades = detect_saccades(samples);
  ev.fixations = detect_fixations(samples, ev.saccades, ev.blinks, ev.gaps);
  assign_aoi(ev.fixations, layout);
  ev.pupil = pupil_pipeline(samples, ev.blinks, mm_per_unit);
  return ev;
}

// --- CSV -------------------------------------------------------------------------

namespace {

bool parse_bool(std::string_view field, bool& out) {
  if (field == "1" || field == "true") {
    out = true;
    return true;
  }
  if (field == "0" || field == "false") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

std::vector<GazeSample> read_gaze_csv(std::istream& in, const std::string& name) {
  static const std::vector<std::string> kHeader = {"t", "x", "y", "pupil_area", "valid"};
  std::string line;
  if (!csv::next_line(in, line)) throw Error(Error::Kind::kParse, "empty gaze file", name, 1);
  const auto header = csv::split(line);
  if (header.size() != kHeader.size()) {
    throw Error(Error::Kind::kParse, "expected header t,x,y,pupil_area,valid", name, 1);
  }
  for (std::size_t c = 0; c < kHeader.size(); ++c) {
    if (header[c] != kHeader[c]) {
      throw Error(Error::Kind::kParse, "unexpected header column", name, 1, std::string(header[c]));
    }
  }
  std::vector<GazeSample> samples;
  std::size_t row = 1;
  while (csv::next_line(in, line)) {
    ++row;
    const auto fields = csv::split(line);
    if (fields.size() != kHeader.size()) {
      throw Error(Error::Kind::kParse, "expected 5 fields", name, row);
    }
    GazeSample s;
    double* targets[] = {&s.t, &s.x, &s.y, &s.pupil_area};
    for (std::size_t c = 0; c < 4; ++c) {
      const auto v = csv::parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw Error(Error::Kind::kParse, "non-numeric cell", name, row, kHeader[c]);
      }
      *targets[c] = *v;
    }
    if (!parse_bool(fields[4], s.valid)) {
      throw Error(Error::Kind::kParse, "valid must be 0/1/true/false", name, row, "valid");
    }
    if (s.pupil_area < 0.0) {
      throw Error(Error::Kind::kValidation, "pupil_area must be >= 0", name, row, "pupil_area");
    }
    if (!samples.empty() && !(s.t > samples.back().t)) {
      throw Error(Error::Kind::kValidation, "timestamps must be strictly increasing", name, row,
                  "t");
    }
    samples.push_back(s);
  }
  return samples;
}

std::vector<GazeSample> load_gaze_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::kIo, "cannot open gaze file", path);
  return read_gaze_csv(in, path);
}

void write_gaze_csv(std::ostream& out, std::span<const GazeSample> samples) {
  out << "t,x,y,pupil_area,valid\n";
  for (const auto& s : samples) {
    csv::write_double(out, s.t);
    out << ',';
    csv::write_double(out, s.x);
    out << ',';
    csv::write_double(out, s.y);
    out << ',';
    csv::write_double(out, s.pupil_area);
    out << (s.valid ? ",1\n" : ",0\n");
  }
}

void write_events_csv(std::ostream& out, std::span<const GazeEvent> events) {
  out << "kind,onset,duration,centroid_x,centroid_y,amplitude,aoi\n";
  for (const auto& e : events) {
    out << event_kind_name(e.kind) << ',';
    csv::write_double(out, e.onset);
    out << ',';
    csv::write_double(out, e.duration);
    out << ',';
    if (e.kind == EventKind::kFixation) {
      csv::write_double(out, e.centroid_x);
      out << ',';
      csv::write_double(out, e.centroid_y);
    } else {
      out << ',';
    }
    out << ',';
    if (e.kind == EventKind::kSaccade) csv::write_double(out, e.amplitude);
    out << ',';
    if (e.aoi) out << *e.aoi;
    out << '\n';
  }
}

}  // namespace gazesa
