#include "gazesa/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "gazesa/csv.hpp"
#include "gazesa/error.hpp"
#include "gazesa/kernels.hpp"
#include "gazesa/rng.hpp"

namespace gazesa::synth {

using csv::format_double;
using csv::write_double;

namespace {

namespace fs = std::filesystem;

constexpr double kRate = kNominalRateHz;
constexpr double kJitterPx = 0.2;
constexpr double kAoiMarginPx = 5.0;
constexpr double kMinFixScriptS = 0.22;
constexpr double kMaxFixScriptS = 0.42;
constexpr double kMinTailS = 0.06;  // shortest trailing fixation the script allows
constexpr double kMinSaccadeDistPx = 100.0;
constexpr double kPupilPeriodS = 0.25;

// Nearest double to the decimal with `per_unit` steps per unit.
double quantize(double v, double per_unit) { return std::round(v * per_unit) / per_unit; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Scene make_scene(Rng& rng) {
  while (true) {
    Scene s;
    const int n = rng.bernoulli(0.5) ? 5 : 6;
    std::array<int, 3> per_lane{2, 2, 2};
    if (n == 5) per_lane[rng.below(3)] = 1;
    std::array<int, 3> speeds{};
    int front = 0;
    double farthest = 0.0;
    bool ok = true;
    for (int lane = 0; lane < 3 && ok; ++lane) {
      std::vector<double> placed;
      for (int k = 0; k < per_lane[lane]; ++k) {
        double pos = 0.0;
        int tries = 0;
        do {
          pos = quantize(rng.uniform(-kSceneExtentM, kSceneExtentM), 10.0);
          ++tries;
        } while ((std::fabs(pos) < 10.0 ||
                  std::any_of(placed.begin(), placed.end(),
                              [&](double q) { return std::fabs(q - pos) < 10.0; })) &&
                 tries < 100);
        if (tries >= 100) {
          ok = false;
          break;
        }
        placed.push_back(pos);
        const int sp = static_cast<int>(rng.below(3));
        ++speeds[sp];
        front += pos > 0.0 ? 1 : 0;
        farthest = std::max(farthest, std::fabs(pos));
        s.vehicles.push_back({static_cast<Lane>(lane), pos, 80.0 + 20.0 * sp});
      }
    }
    if (!ok || front < 2 || front > 4 || farthest < 50.0) continue;
    if (speeds[0] > 3 || speeds[1] < 1 || speeds[1] > 3 || speeds[2] < 1 || speeds[2] > 3) continue;
    validate_truth(s);
    return s;
  }
}

struct Target {
  double x = 0.0, y = 0.0;
  std::optional<std::string> aoi;
};

class TargetPicker {
 public:
  explicit TargetPicker(const AoiLayout& layout) : layout_(layout) {}

  // Uniform point whose 5 px neighbourhood lies inside the named region and
  // resolves to it; "" picks the unassigned band between sky and road.
  Target pick(Rng& rng, const std::string& aoi) const {
    double x0 = kAoiMarginPx, x1 = kFrameWidthPx - kAoiMarginPx, y0 = 425.0, y1 = 515.0;
    if (!aoi.empty()) {
      const auto& regions = layout_.regions();
      const auto it = std::find_if(regions.begin(), regions.end(),
                                   [&](const AoiRegion& r) { return r.name == aoi; });
      x0 = it->x0 + kAoiMarginPx;
      x1 = it->x1 - kAoiMarginPx;
      y0 = it->y0 + kAoiMarginPx;
      y1 = it->y1 - kAoiMarginPx;
    }
    while (true) {
      const double x = quantize(rng.uniform(x0, x1), 100.0);
      const double y = quantize(rng.uniform(y0, y1), 100.0);
      bool clean = true;
      for (const double dx : {-kAoiMarginPx, 0.0, kAoiMarginPx}) {
        for (const double dy : {-kAoiMarginPx, 0.0, kAoiMarginPx}) {
          const auto hit = layout_.locate(x + dx, y + dy);
          if ((aoi.empty() && hit) || (!aoi.empty() && hit != aoi)) clean = false;
        }
      }
      if (clean) return {x, y, aoi.empty() ? std::nullopt : std::optional<std::string>(aoi)};
    }
  }

 private:
  const AoiLayout& layout_;
};

std::string choose_aoi(Rng& rng, double p_back, double p_road) {
  const double rest = std::max(0.0, 1.0 - p_back - p_road);
  const double u = rng.uniform();
  if (u < p_back) return "backMirror";
  if (u < p_back + p_road) return "road";
  const double v = (u - p_back - p_road) / std::max(rest, 1e-12);
  if (v < 0.3) return "leftMirror";
  if (v < 0.6) return "rightMirror";
  if (v < 0.85) return "sky";
  return "";
}

}  // namespace

std::string participant_id(int participant) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%02d", participant + 1);
  return buf;
}

std::string trial_id(int trial) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%02d", trial + 1);
  return buf;
}

std::vector<double> video_lengths(int trials) {
  static constexpr std::array<std::pair<double, int>, 6> kCounts{
      {{1, 6}, {3, 6}, {6, 6}, {9, 6}, {12, 5}, {20, 4}}};
  std::vector<double> pattern;
  for (int round = 0; round < 6; ++round) {
    for (const auto& [len, count] : kCounts) {
      if (round < count) pattern.push_back(len);
    }
  }
  std::vector<double> out;
  for (int i = 0; i < trials; ++i) out.push_back(pattern[static_cast<std::size_t>(i) % pattern.size()]);
  return out;
}

Study::Study(SynthConfig config) : config_(config), layout_(AoiLayout::default_layout()) {
  if (config_.participants < 1 || config_.trials < 1)
    throw Error(Error::Kind::kInvalidArgument, "participants and trials must be >= 1");
  if (!(config_.noise_sd >= 0.0 && config_.noise_sd <= 0.05))
    throw Error(Error::Kind::kInvalidArgument, "noise_sd must be in [0, 0.05]");

  for (int p = 0; p < config_.participants; ++p) {
    Rng rng = Rng::derive(config_.seed, 0x7061727469ULL, static_cast<std::uint64_t>(p));
    SimParticipant sp;
    sp.index = p;
    sp.skill = rng.uniform();
    sp.age = static_cast<double>(rng.range(22, 29));
    sp.gender = rng.bernoulli(29.0 / 32.0) ? 1.0 : 0.0;
    sp.year_driving = std::max(0.0, sp.age - 18.0 - static_cast<double>(rng.range(0, 3)));
    sp.driving_frequency =
        std::clamp(std::round(1.0 + (1.0 - sp.skill) * 4.0 + rng.uniform(-0.7, 0.7)), 1.0, 6.0);
    sp.fixation_scale_s = rng.uniform(0.24, 0.40);
    sp.back_mirror_rate = 0.06 + 0.20 * sp.skill + rng.uniform(-0.02, 0.02);
    sp.road_rate = 0.55 - 0.25 * sp.skill + rng.uniform(-0.03, 0.03);
    sp.pupil_base_mm = rng.uniform(3.0, 5.0);
    sp.pupil_amplitude_mm = 0.05 + 0.30 * sp.skill;
    participants_.push_back(sp);
  }

  const auto lengths = video_lengths(config_.trials);
  std::vector<int> eligible;
  for (int t = 0; t < config_.trials; ++t) {
    Rng rng = Rng::derive(config_.seed, 0x7363656e65ULL, static_cast<std::uint64_t>(t));
    ScenarioSpec s;
    s.index = t;
    s.video_length_s = lengths[static_cast<std::size_t>(t)];
    s.truth = make_scene(rng);
    scenarios_.push_back(std::move(s));
    if (lengths[static_cast<std::size_t>(t)] <= 9.0) eligible.push_back(t);
  }
  Rng pick = Rng::derive(config_.seed, 0x68617a617264ULL);
  for (std::size_t i = eligible.size(); i > 1; --i) std::swap(eligible[i - 1], eligible[pick.below(i)]);
  const auto hazards = std::min<std::size_t>(
      eligible.size(),
      static_cast<std::size_t>(std::lround(16.0 * config_.trials / 33.0)));
  for (std::size_t i = 0; i < hazards; ++i) scenarios_[static_cast<std::size_t>(eligible[i])].hazard = true;
}

GeneratedTrial Study::trial(int participant, int trial) const {
  const SimParticipant& sp = participants_.at(static_cast<std::size_t>(participant));
  const ScenarioSpec& sc = scenarios_.at(static_cast<std::size_t>(trial));
  Rng rng = Rng::derive(config_.seed, static_cast<std::uint64_t>(participant) + 1,
                        static_cast<std::uint64_t>(trial) + 1);
  const TargetPicker picker(layout_);

  GeneratedTrial out;
  const auto n = static_cast<std::size_t>(std::llround(sc.video_length_s * kRate));
  out.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.samples[k].t = static_cast<double>(k) / kRate;

  const double p_back = std::clamp(sp.back_mirror_rate * rng.uniform(0.8, 1.2), 0.0, 1.0);
  const double p_road = std::clamp(sp.road_rate * rng.uniform(0.9, 1.1), 0.0, 1.0 - p_back);
  const int max_blinks = static_cast<int>(std::floor(sc.video_length_s / 1.5));
  const auto min_fix = static_cast<std::size_t>(std::llround(kMinTailS * kRate));

  auto jitter = [&](const Target& tg, std::size_t k) {
    out.samples[k].x = quantize(tg.x + rng.uniform(-kJitterPx, kJitterPx), 100.0);
    out.samples[k].y = quantize(tg.y + rng.uniform(-kJitterPx, kJitterPx), 100.0);
  };

  Target target = picker.pick(rng, choose_aoi(rng, p_back, p_road));
  std::size_t a = 0;
  int blinks = 0;
  while (true) {
    const double dur =
        std::clamp(sp.fixation_scale_s * rng.uniform(0.92, 1.08), kMinFixScriptS, kMaxFixScriptS);
    std::size_t b = a + static_cast<std::size_t>(std::llround(dur * kRate));

    const bool blink = blinks < max_blinks && rng.bernoulli(0.08);
    const std::size_t transition =
        blink ? static_cast<std::size_t>(rng.range(160, 360)) : static_cast<std::size_t>(0);
    Target next;
    std::size_t sacc = 0;
    if (!blink) {
      next = picker.pick(rng, choose_aoi(rng, p_back, p_road));
      for (int tries = 0; std::hypot(next.x - target.x, next.y - target.y) < kMinSaccadeDistPx;
           ++tries) {
        next = picker.pick(rng, tries < 20 ? next.aoi.value_or("") : "road");
      }
      const double dist = std::hypot(next.x - target.x, next.y - target.y);
      const auto dmax = std::min<long long>(120, static_cast<long long>(std::floor(dist / 2.0)));
      sacc = static_cast<std::size_t>(rng.range(40, dmax));
    } else {
      next = picker.pick(rng, choose_aoi(rng, p_back, p_road));
    }
    const std::size_t gap = blink ? transition : sacc;

    if (b >= n || n - b < gap + min_fix) {
      for (std::size_t k = a; k < n; ++k) jitter(target, k);
      out.events.push_back({EventKind::kFixation, a, n, target.aoi});
      break;
    }
    for (std::size_t k = a; k < b; ++k) jitter(target, k);
    out.events.push_back({EventKind::kFixation, a, b, target.aoi});
    if (blink) {
      for (std::size_t k = b; k < b + gap; ++k) {
        out.samples[k].valid = false;
        out.samples[k].x = 0.0;
        out.samples[k].y = 0.0;
      }
      out.events.push_back({EventKind::kBlink, b, b + gap, std::nullopt});
      ++blinks;
    } else {
      jitter(target, b);
      for (std::size_t j = 1; j < sacc; ++j) {
        const double f = static_cast<double>(j) / static_cast<double>(sacc);
        out.samples[b + j].x = quantize(target.x + f * (next.x - target.x), 100.0);
        out.samples[b + j].y = quantize(target.y + f * (next.y - target.y), 100.0);
      }
      out.events.push_back({EventKind::kSaccade, b, b + sacc, std::nullopt});
    }
    a = b + gap;
    target = next;
  }

  const double base = sp.pupil_base_mm + rng.normal(0.0, 0.1);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (auto& s : out.samples) {
    if (!s.valid) continue;
    const double d = base + sp.pupil_amplitude_mm *
                                std::sin(2.0 * std::numbers::pi * s.t / kPupilPeriodS + phase);
    s.pupil_area = quantize(std::numbers::pi * d * d / 4.0, 100.0);
  }

  // Ledger.
  LedgerRow& lg = out.ledger;
  lg.participant_id = participant_id(participant);
  lg.trial_id = trial_id(trial);
  lg.video_length_s = sc.video_length_s;
  lg.hazard = sc.hazard;
  lg.skill = sp.skill;
  double fix_total = 0.0;
  for (const auto& e : out.events) {
    switch (e.kind) {
      case EventKind::kFixation:
        ++lg.num_fixations;
        fix_total += static_cast<double>(e.end - e.begin) / kRate;
        if (e.aoi == "backMirror") ++lg.back_mirror;
        if (e.aoi == "road") ++lg.road;
        break;
      case EventKind::kSaccade: ++lg.num_saccades; break;
      case EventKind::kBlink: ++lg.num_blinks; break;
    }
  }
  lg.fixation_mean_s = fix_total / lg.num_fixations;
  const Weights& w = config_.weights;
  lg.length_term = w.length * (sc.video_length_s >= 3.0 ? 1.0 : 0.0);
  lg.back_mirror_term = w.back_mirror * std::min(lg.back_mirror, 12) / 12.0;
  lg.fixation_term = w.fixation * clamp01((lg.fixation_mean_s - 0.22) / 0.20);
  lg.road_term = w.road * std::min(std::max(lg.road - 6, 0), 24) / 24.0;
  lg.skill_term = w.skill * sp.skill;
  lg.sa_clean = w.intercept + lg.length_term + lg.back_mirror_term + lg.fixation_term +
                lg.road_term + lg.skill_term;
  lg.noise = config_.noise_sd * rng.normal();
  lg.sa = quantize(clamp01(lg.sa_clean + lg.noise), 1e6);

  // Context variables, in table order.
  const double sa_c = clamp01(lg.sa_clean);
  const double decision_supposed = sc.hazard ? 2.0 + static_cast<double>(
                                                         Rng::derive(config_.seed, 0x6465636964ULL,
                                                                     static_cast<std::uint64_t>(trial))
                                                             .below(3))
                                             : 1.0;
  const bool correct = rng.bernoulli(0.35 + 0.6 * sa_c);
  const bool responded = sc.hazard || rng.bernoulli(0.9);
  const double decision_time = quantize(
      0.6 + 2.4 * (1.0 - sp.skill) * rng.uniform(0.7, 1.3) + (sc.hazard ? 0.0 : 0.5), 1000.0);
  auto placed = [&](Lane lane) {
    double c = 0.0;
    for (const auto& v : sc.truth.vehicles) c += v.lane == lane ? 1.0 : 0.0;
    if (rng.bernoulli(0.6 * (1.0 - sp.skill))) c += rng.bernoulli(0.5) ? 1.0 : -1.0;
    return std::max(0.0, c);
  };
  auto& cv = out.context.values;
  cv[0] = sp.age;
  cv[1] = sp.gender;
  cv[2] = sp.year_driving;
  cv[3] = sp.driving_frequency;
  cv[4] = sc.video_length_s;
  cv[5] = responded ? std::optional<double>(decision_time) : std::nullopt;
  cv[6] = decision_supposed;
  cv[7] = correct && responded ? (decision_supposed == 4.0 ? 5.0 : decision_supposed) : 0.0;
  cv[8] = std::round(sc.hazard ? rng.uniform(55.0, 95.0) : rng.uniform(5.0, 50.0));
  cv[9] = std::clamp(std::round(95.0 - 70.0 * sa_c + rng.normal(0.0, 12.0)), 0.0, 100.0);
  cv[10] = placed(Lane::kLeft);
  cv[11] = placed(Lane::kRight);
  return out;
}

std::vector<LedgerRow> truth_table(const Study& study) {
  const auto np = study.participants().size();
  const auto nt = study.scenarios().size();
  std::vector<LedgerRow> rows(np * nt);
  kernels::parallel_for(rows.size(), [&](std::size_t i) {
    rows[i] = study.trial(static_cast<int>(i / nt), static_cast<int>(i % nt)).ledger;
  });
  return rows;
}

Dataset extract_study(const Study& study, bool eye_only) {
  const auto nt = study.scenarios().size();
  std::vector<TrialRecord> records(study.num_trials());
  std::vector<std::exception_ptr> errors(records.size());
  kernels::parallel_for(records.size(), [&](std::size_t i) {
    try {
      const int p = static_cast<int>(i / nt);
      const int t = static_cast<int>(i % nt);
      const GeneratedTrial g = study.trial(p, t);
      const TrialEvents ev = detect_events(g.samples, study.layout());
      TrialRecord rec = extract_features(ev.merged(), ev.pupil, g.context);
      rec.participant_id = g.ledger.participant_id;
      rec.trial_id = g.ledger.trial_id;
      rec.sa = g.ledger.sa;
      records[i] = std::move(rec);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Dataset data = Dataset::from_records(records);
  return eye_only ? eye_only_view(data) : data;
}

void write_ledger_csv(std::ostream& out, const std::vector<LedgerRow>& rows) {
  out << "participant_id,trial_id,video_length_s,hazard,skill,num_fixations,num_saccades,"
         "num_blinks,back_mirror,road,fixation_mean_s,length_term,back_mirror_term,"
         "fixation_term,road_term,skill_term,noise,sa_clean,sa\n";
  for (const auto& r : rows) {
    out << r.participant_id << ',' << r.trial_id << ',';
    write_double(out, r.video_length_s);
    out << ',' << (r.hazard ? 1 : 0) << ',';
    write_double(out, r.skill);
    out << ',' << r.num_fixations << ',' << r.num_saccades << ',' << r.num_blinks << ','
        << r.back_mirror << ',' << r.road;
    for (const double v : {r.fixation_mean_s, r.length_term, r.back_mirror_term, r.fixation_term,
                           r.road_term, r.skill_term, r.noise, r.sa_clean, r.sa}) {
      out << ',';
      write_double(out, v);
    }
    out << '\n';
  }
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::kIo, "cannot open for writing", path.string());
  return out;
}

}  // namespace

void write_study(const Study& study, const std::string& dir) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "gaze", ec);
  fs::create_directories(root / "scenes", ec);
  if (ec) throw Error(Error::Kind::kIo, "cannot create output directory: " + ec.message(), dir);

  for (const auto& sc : study.scenarios()) {
    auto out = open_out(root / "scenes" / (trial_id(sc.index) + ".json"));
    out << sc.truth.to_json() << '\n';
  }

  const auto nt = study.scenarios().size();
  std::vector<ContextVars> context(study.num_trials());
  std::vector<LedgerRow> ledger(study.num_trials());
  std::vector<std::exception_ptr> errors(study.num_trials());
  kernels::parallel_for(study.num_trials(), [&](std::size_t i) {
    try {
      const int p = static_cast<int>(i / nt);
      const int t = static_cast<int>(i % nt);
      GeneratedTrial g = study.trial(p, t);
      auto out = open_out(root / "gaze" / (participant_id(p) + "_" + trial_id(t) + ".csv"));
      write_gaze_csv(out, g.samples);
      if (!out) throw Error(Error::Kind::kIo, "write failed");
      context[i] = g.context;
      ledger[i] = std::move(g.ledger);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto& table = predictor_table();
  {
    auto out = open_out(root / "meta.csv");
    out << "participant_id,trial_id";
    for (std::size_t c = 0; c < kNumContext; ++c) out << ',' << table[c].name;
    out << '\n';
    for (std::size_t i = 0; i < context.size(); ++i) {
      out << ledger[i].participant_id << ',' << ledger[i].trial_id;
      for (const auto& v : context[i].values) {
        out << ',';
        if (v) write_double(out, *v);
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(root / "labels.csv");
    out << "participant_id,trial_id,sa\n";
    for (const auto& r : ledger) {
      out << r.participant_id << ',' << r.trial_id << ',';
      write_double(out, r.sa);
      out << '\n';
    }
  }
  {
    auto out = open_out(root / "ledger.csv");
    write_ledger_csv(out, ledger);
  }
}

}  // namespace gazesa::synth
