#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gazesa/csv.hpp"
#include "gazesa/dataset.hpp"
#include "gazesa/error.hpp"
#include "gazesa/eval.hpp"
#include "gazesa/features.hpp"
#include "gazesa/gaze_events.hpp"
#include "gazesa/gbdt.hpp"
#include "gazesa/kernels.hpp"
#include "gazesa/model_io.hpp"
#include "gazesa/sa_score.hpp"
#include "gazesa/shap.hpp"
#include "gazesa/synth.hpp"

namespace gazesa::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "gazesa 1.0.0";

class Manifest {
 public:
  Manifest(std::string command, const Options& o) : start_(Clock::now()) {
    doc_["command"] = std::move(command);
    doc_["version"] = kVersion;
    doc_["argv"] = o.argv;
    if (o.seed) doc_["seed"] = *o.seed;
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
    doc_["timings_ms"] = json::object();
    lap_ = start_;
  }

  void input(const std::string& path) { doc_["inputs"].push_back(path); }
  void output(const std::string& path) { doc_["outputs"].push_back(path); }
  json& operator[](const char* key) { return doc_[key]; }

  // Time since the previous lap, stored under `stage`.
  void lap(const std::string& stage) {
    const auto now = Clock::now();
    doc_["timings_ms"][stage] = std::chrono::duration<double, std::milli>(now - lap_).count();
    lap_ = now;
  }

  void write(const std::string& dir) {
    doc_["timings_ms"]["total"] =
        std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw Error(Error::Kind::kIo, "cannot write manifest", dir);
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_;
  Clock::time_point start_, lap_;
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(Error::Kind::kInvalidArgument, std::string(flag) + " is required");
}

void make_dir(const std::string& dir) {
  require(dir, "--out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Error::Kind::kIo, "cannot create directory: " + ec.message(), dir);
}

std::string write_file(Manifest& m, const std::string& dir, const std::string& name,
                       const std::function<void(std::ostream&)>& body) {
  const std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::kIo, "cannot open for writing", path);
  body(out);
  out.flush();
  if (!out) throw Error(Error::Kind::kIo, "write failed", path);
  m.output(path);
  return path;
}

gbdt::TrainConfig train_config(const Options& o, Manifest& m) {
  gbdt::TrainConfig cfg;
  if (!o.config.empty()) {
    cfg = gbdt::load_config(o.config);
    m.input(o.config);
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  m["config"] = gbdt::config_to_json(cfg);
  return cfg;
}

Dataset load_data(const Options& o, Manifest& m) {
  require(o.data, "--data");
  Dataset data = load_dataset(o.data);
  m.input(o.data);
  if (o.eye_only) data = eye_only_view(data);
  if (!o.features.empty()) data = data.select_features(o.features);
  m["features"] = data.feature_names();
  return data;
}

eval::CvOptions cv_options(const Options& o, const gbdt::TrainConfig& cfg) {
  eval::CvOptions cv;
  cv.folds = o.folds;
  cv.seed = o.seed.value_or(cfg.seed);
  cv.group_by_participant = o.group_by_participant;
  cv.model = eval::parse_model_kind(o.model_kind);
  return cv;
}

// ---- meta.csv -------------------------------------------------------------------------

struct MetaRow {
  RowKey key;
  ContextVars context;
  std::size_t line = 0;
};

std::vector<MetaRow> read_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::kIo, "cannot open", path);
  std::string line;
  if (!csv::next_line(in, line)) throw Error(Error::Kind::kParse, "empty file", path);
  const auto header = csv::split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(header[i])] = i;
  const auto& table = predictor_table();
  std::vector<std::string> needed{"participant_id", "trial_id"};
  for (std::size_t c = 0; c < kNumContext; ++c) needed.emplace_back(table[c].name);
  for (const auto& n : needed) {
    if (!col.count(n)) throw Error(Error::Kind::kValidation, "missing column", path, 1, n);
  }
  std::vector<MetaRow> rows;
  std::size_t row = 1;
  while (csv::next_line(in, line)) {
    ++row;
    const auto f = csv::split(line);
    if (f.size() != header.size())
      throw Error(Error::Kind::kParse, "expected " + std::to_string(header.size()) + " fields",
                  path, row);
    MetaRow r;
    r.line = row;
    r.key = {std::string(f[col["participant_id"]]), std::string(f[col["trial_id"]])};
    for (std::size_t c = 0; c < kNumContext; ++c) {
      const auto field = f[col[std::string(table[c].name)]];
      if (field.empty()) continue;
      const auto v = csv::parse_double(field);
      if (!v) throw Error(Error::Kind::kParse, "not a number", path, row, std::string(table[c].name));
      r.context.values[c] = *v;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::map<RowKey, double> read_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::kIo, "cannot open", path);
  std::string line;
  std::map<RowKey, double> out;
  if (!csv::next_line(in, line)) return out;
  const auto header = csv::split(line);
  if (header.size() != 3 || header[0] != "participant_id" || header[1] != "trial_id" ||
      header[2] != "sa")
    throw Error(Error::Kind::kValidation, "header must be participant_id,trial_id,sa", path, 1);
  std::size_t row = 1;
  while (csv::next_line(in, line)) {
    ++row;
    const auto f = csv::split(line);
    if (f.size() != 3) throw Error(Error::Kind::kParse, "expected 3 fields", path, row);
    const auto v = csv::parse_double(f[2]);
    if (!v) throw Error(Error::Kind::kParse, "not a number", path, row, "sa");
    out[{std::string(f[0]), std::string(f[1])}] = *v;
  }
  return out;
}

}  // namespace

// ---- commands ---------------------------------------------------------------------------

int cmd_synth(const Options& o) {
  Manifest m("synth", o);
  make_dir(o.out);
  synth::SynthConfig cfg;
  cfg.participants = o.participants;
  cfg.trials = o.trials;
  cfg.seed = o.seed.value_or(0);
  cfg.noise_sd = o.noise;
  const synth::Study study(cfg);
  synth::write_study(study, o.out);
  m.lap("generate");
  for (const char* f : {"meta.csv", "labels.csv", "ledger.csv"}) m.output((fs::path(o.out) / f).string());
  m.output((fs::path(o.out) / "gaze").string());
  m.output((fs::path(o.out) / "scenes").string());
  m["seed"] = cfg.seed;
  m["generator_version"] = synth::kGeneratorVersion;
  m["counts"] = {{"participants", cfg.participants},
                 {"trials", cfg.trials},
                 {"rows", study.num_trials()}};
  m["noise_sd"] = cfg.noise_sd;
  const auto& w = cfg.weights;
  m["weights"] = {{"intercept", w.intercept},   {"length", w.length},
                  {"back_mirror", w.back_mirror}, {"fixation", w.fixation},
                  {"road", w.road},             {"skill", w.skill}};
  m.write(o.out);
  return 0;
}

int cmd_extract(const Options& o) {
  Manifest m("extract", o);
  require(o.data, "--data");
  make_dir(o.out);
  const fs::path root(o.data);
  const auto meta_path = (root / "meta.csv").string();
  const auto meta = read_meta(meta_path);
  m.input(meta_path);
  std::map<RowKey, double> labels;
  if (fs::exists(root / "labels.csv")) {
    labels = read_labels((root / "labels.csv").string());
    m.input((root / "labels.csv").string());
  }
  const AoiLayout layout = o.aoi.empty() ? AoiLayout::default_layout() : AoiLayout::load(o.aoi);
  if (!o.aoi.empty()) m.input(o.aoi);
  m["aoi_layout"] = json::parse(layout.to_json());
  m["pupil_scale_mm_per_unit"] = o.pupil_scale;
  if (o.events) fs::create_directories(fs::path(o.out) / "events");

  std::vector<TrialRecord> records(meta.size());
  std::vector<std::exception_ptr> errors(meta.size());
  kernels::parallel_for(meta.size(), [&](std::size_t i) {
    try {
      const auto& r = meta[i];
      const auto name = r.key.participant_id + "_" + r.key.trial_id + ".csv";
      const auto samples = load_gaze_csv((root / "gaze" / name).string());
      const TrialEvents ev = detect_events(samples, layout, o.pupil_scale);
      const auto merged = ev.merged();
      TrialRecord rec = extract_features(merged, ev.pupil, r.context);
      rec.participant_id = r.key.participant_id;
      rec.trial_id = r.key.trial_id;
      if (const auto it = labels.find(r.key); it != labels.end()) rec.sa = it->second;
      if (o.events) {
        std::ofstream out(fs::path(o.out) / "events" / name, std::ios::binary);
        write_events_csv(out, merged);
      }
      records[i] = std::move(rec);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  m.input((root / "gaze").string());
  m.lap("extract");
  Dataset data = Dataset::from_records(records);
  if (o.eye_only) data = eye_only_view(data);
  write_file(m, o.out, "features.csv", [&](std::ostream& out) { write_dataset(out, data); });
  if (o.events) m.output((fs::path(o.out) / "events").string());
  m["rows"] = data.rows();
  m.write(o.out);
  return 0;
}

int cmd_score(const Options& o) {
  Manifest m("score", o);
  require(o.truth, "--truth");
  require(o.recreation, "--recreation");
  make_dir(o.out);
  const Scene truth = Scene::load(o.truth);
  const Scene rec = Scene::load(o.recreation);
  m.input(o.truth);
  m.input(o.recreation);
  const SaScore s = score_sa(truth, rec);
  json j;
  j["count_score"] = s.count_score;
  j["distance_score"] = s.distance_score;
  j["speed_score"] = s.speed_score;
  j["sa"] = s.sa;
  j["matched"] = s.matched;
  j["no_matches"] = s.no_matches;
  write_file(m, o.out, "score.json", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  write_file(m, o.out, "score.csv", [&](std::ostream& out) {
    out << "participant_id,trial_id,s1,s2,s3,sa\n" << o.participant_id << ',' << o.trial_id;
    for (double v : {s.count_score, s.distance_score, s.speed_score, s.sa}) {
      out << ',';
      csv::write_double(out, v);
    }
    out << '\n';
  });
  std::cout << "sa=" << csv::format_double(s.sa) << " count=" << csv::format_double(s.count_score)
            << " distance=" << csv::format_double(s.distance_score)
            << " speed=" << csv::format_double(s.speed_score) << '\n';
  m.write(o.out);
  return 0;
}

int cmd_train(const Options& o) {
  Manifest m("train", o);
  make_dir(o.out);
  const auto cfg = train_config(o, m);
  const Dataset data = load_data(o, m);
  m.lap("load");
  const auto fit = gbdt::fit(data, cfg);
  m.lap("fit");
  write_file(m, o.out, "model.json", [&](std::ostream& out) {
    out << gbdt::model_to_json(fit.model).dump(1) << '\n';
  });
  write_file(m, o.out, "training.csv", [&](std::ostream& out) {
    out << "round,train_rmse,valid_l2,valid_l1\n";
    for (std::size_t r = 0; r < fit.state.train_rmse.size(); ++r) {
      out << r + 1 << ',';
      csv::write_double(out, fit.state.train_rmse[r]);
      out << ',';
      if (r < fit.state.valid_l2.size()) csv::write_double(out, fit.state.valid_l2[r]);
      out << ',';
      if (r < fit.state.valid_l1.size()) csv::write_double(out, fit.state.valid_l1[r]);
      out << '\n';
    }
  });
  m["best_round"] = fit.state.best_round;
  m["rounds_run"] = fit.state.rounds_run;
  m["early_stopping_disabled"] = fit.state.early_stopping_disabled;
  m.write(o.out);
  return 0;
}

int cmd_evaluate(const Options& o) {
  Manifest m("evaluate", o);
  make_dir(o.out);
  const auto cfg = train_config(o, m);
  const Dataset data = load_data(o, m);
  const auto cv = cv_options(o, cfg);
  m.lap("load");
  std::vector<eval::EvalReport> reports{eval::cross_validate(data, cfg, cv)};
  m.lap("cross_validate");
  if (o.baselines) {
    for (auto& r : eval::baselines(data, cv)) reports.push_back(std::move(r));
    m.lap("baselines");
  }
  write_file(m, o.out, "report.json",
             [&](std::ostream& out) { eval::write_report_json(out, reports); });
  write_file(m, o.out, "predictions.csv",
             [&](std::ostream& out) { eval::write_predictions_csv(out, data, reports.front()); });
  m["folds"] = cv.folds;
  m["group_by_participant"] = cv.group_by_participant;
  m.write(o.out);
  return 0;
}

int cmd_explain(const Options& o) {
  Manifest m("explain", o);
  make_dir(o.out);
  Dataset data = load_data(o, m);
  std::vector<shap::Explanation> explanations;
  std::vector<std::string> features;
  m.lap("load");
  if (!o.model.empty()) {
    const auto model = gbdt::load_model(o.model);
    m.input(o.model);
    features = model.feature_names;
    data = data.select_features(features);
    explanations = shap::explain_dataset(model, data);
    m["source"] = "model";
  } else {
    const auto cfg = train_config(o, m);
    auto cv = cv_options(o, cfg);
    cv.model = eval::ModelKind::kGbdt;
    cv.compute_shap = true;
    explanations = eval::cross_validate(data, cfg, cv).shap;
    features = data.feature_names();
    m["source"] = "out_of_fold";
  }
  m.lap("explain");

  const auto table = shap::global_importance(explanations, data, features);
  const auto effects = shap::main_effects(explanations, data, features);
  write_file(m, o.out, "shap.csv", [&](std::ostream& out) {
    shap::write_shap_csv(out, explanations, data, features);
  });
  write_file(m, o.out, "importance.csv",
             [&](std::ostream& out) { shap::write_importance_csv(out, table); });
  write_file(m, o.out, "main_effects.csv",
             [&](std::ostream& out) { shap::write_main_effects_csv(out, effects); });
  if (o.svg) {
    write_file(m, o.out, "importance.svg",
               [&](std::ostream& out) { shap::write_importance_svg(out, table); });
  }
  if (o.instance) {
    if (*o.instance < 0 || static_cast<std::size_t>(*o.instance) >= data.rows())
      throw Error(Error::Kind::kInvalidArgument,
                  "--instance out of range (dataset has " + std::to_string(data.rows()) + " rows)");
    const auto i = static_cast<std::size_t>(*o.instance);
    const auto report =
        shap::make_report(explanations[i], features, data.row_values(i), data.row_mask(i));
    std::cout << "instance " << i << " (" << data.key(i).participant_id << ' '
              << data.key(i).trial_id << ")\n";
    shap::print_report(std::cout, report);
    write_file(m, o.out, "instance.csv",
               [&](std::ostream& out) { shap::write_report_csv(out, report); });
  }
  m.write(o.out);
  return 0;
}

int cmd_select_features(const Options& o) {
  Manifest m("select-features", o);
  make_dir(o.out);
  const auto cfg = train_config(o, m);
  const Dataset data = load_data(o, m);
  const auto cv = cv_options(o, cfg);
  m.lap("load");
  const auto ranking = eval::reference_ranking(data, cfg, cv);
  m.lap("ranking");
  const auto curve = eval::select_features(data, cfg, cv, ranking);
  m.lap("curve");
  write_file(m, o.out, "ranking.csv", [&](std::ostream& out) {
    out << "rank,feature\n";
    for (std::size_t r = 0; r < ranking.size(); ++r) out << r + 1 << ',' << ranking[r] << '\n';
  });
  write_file(m, o.out, "curve.csv", [&](std::ostream& out) { eval::write_curve_csv(out, curve); });
  write_file(m, o.out, "selection.json", [&](std::ostream& out) {
    json j;
    j["best_k"] = curve.best_k;
    j["best_subset"] = curve.best_subset();
    out << j.dump(2) << '\n';
  });
  m.write(o.out);
  return 0;
}

int cmd_predict(const Options& o, std::istream& in, std::ostream& out, std::ostream& diag) {
  Manifest m("predict", o);
  require(o.model, "--model");
  const auto model = gbdt::load_model(o.model);
  m.input(o.model);
  if (!o.data.empty() && o.data != "-") m.input(o.data);
  const std::string source = o.data.empty() || o.data == "-" ? "<stdin>" : o.data;

  std::string line;
  std::size_t rows = 0, errors = 0;
  std::vector<double> latencies;
  if (csv::next_line(in, line)) {
    const auto header = csv::split(line);
    std::vector<std::size_t> col(model.feature_names.size());
    for (std::size_t j = 0; j < col.size(); ++j) {
      const auto it = std::find(header.begin(), header.end(), model.feature_names[j]);
      if (it == header.end())
        throw Error(Error::Kind::kRegistry, "input lacks a model feature", source, 1,
                    model.feature_names[j]);
      col[j] = static_cast<std::size_t>(it - header.begin());
    }
    std::vector<double> values(col.size());
    std::vector<std::uint8_t> present(col.size());
    out << "sa_hat,latency_us\n" << std::flush;
    std::size_t row = 1;
    while (csv::next_line(in, line)) {
      ++row;
      try {
        const auto f = csv::split(line);
        if (f.size() != header.size())
          throw Error(Error::Kind::kParse, "expected " + std::to_string(header.size()) + " fields",
                      source, row);
        for (std::size_t j = 0; j < col.size(); ++j) {
          const auto field = f[col[j]];
          present[j] = field.empty() ? 0 : 1;
          values[j] = 0.0;
          if (field.empty()) continue;
          const auto v = csv::parse_double(field);
          if (!v) throw Error(Error::Kind::kParse, "not a number", source, row, model.feature_names[j]);
          values[j] = *v;
        }
      } catch (const Error& e) {
        diag << e.what() << '\n' << std::flush;
        ++errors;
        continue;
      }
      const auto t0 = Clock::now();
      const double y = model.predict(values, present);
      const auto t1 = Clock::now();
      const double us = std::chrono::duration<double, std::micro>(t1 - t0).count();
      latencies.push_back(us);
      csv::write_double(out, y);
      out << ',' << csv::format_double(std::round(us * 1000.0) / 1000.0) << '\n' << std::flush;
      ++rows;
    }
  }
  if (!o.out.empty()) {
    make_dir(o.out);
    m["rows"] = rows;
    m["malformed_rows"] = errors;
    if (!latencies.empty()) {
      std::sort(latencies.begin(), latencies.end());
      const auto at = [&](double q) {
        return latencies[std::min(latencies.size() - 1,
                                  static_cast<std::size_t>(std::ceil(q * latencies.size())) - 1)];
      };
      m["latency_us"] = {{"p50", at(0.50)}, {"p99", at(0.99)}, {"max", latencies.back()}};
    }
    m.write(o.out);
  }
  return 0;
}

}  // namespace gazesa::cli
