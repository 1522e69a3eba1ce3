#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gazesa/error.hpp"
#include "gazesa/kernels.hpp"

using gazesa::Error;
using gazesa::cli::Options;

namespace {

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)");
}

void add_training(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "TrainConfig JSON");
  sub->add_option("--data", o.data, "feature CSV")->required();
  sub->add_option("--out", o.out, "output directory")->required();
  sub->add_flag("--eye-only", o.eye_only, "use the 16 eye-tracking features only");
  sub->add_option("--features", o.features, "explicit feature subset")->delimiter(',');
}

void add_cv(CLI::App* sub, Options& o) {
  sub->add_option("--folds", o.folds, "cross-validation folds");
  sub->add_flag("--group-by-participant", o.group_by_participant,
                "keep each participant's rows in one fold");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  for (int i = 1; i < argc; ++i) o.argv.emplace_back(argv[i]);

  CLI::App app{"Situation-awareness prediction from eye-tracking data"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic study");
  add_common(synth, o);
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--participants", o.participants);
  synth->add_option("--trials", o.trials);
  synth->add_option("--noise", o.noise, "label noise standard deviation (<= 0.05)");

  auto* extract = app.add_subcommand("extract", "gaze streams + meta.csv -> feature CSV");
  add_common(extract, o);
  extract->add_option("--data", o.data, "study directory (meta.csv, gaze/)")->required();
  extract->add_option("--out", o.out, "output directory")->required();
  extract->add_option("--aoi", o.aoi, "AOI layout JSON");
  extract->add_option("--pupil-scale", o.pupil_scale, "mm per pupil-size unit");
  extract->add_flag("--events", o.events, "also write per-trial event lists");
  extract->add_flag("--eye-only", o.eye_only);

  auto* score = app.add_subcommand("score", "SA score of a scene recreation");
  add_common(score, o);
  score->add_option("--truth", o.truth, "ground-truth scene JSON")->required();
  score->add_option("--recreation", o.recreation, "recreated scene JSON")->required();
  score->add_option("--participant-id", o.participant_id, "written to score.csv");
  score->add_option("--trial-id", o.trial_id, "written to score.csv");
  score->add_option("--out", o.out, "output directory")->required();

  auto* train = app.add_subcommand("train", "fit a boosted ensemble");
  add_common(train, o);
  add_training(train, o);

  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation");
  add_common(evaluate, o);
  add_training(evaluate, o);
  add_cv(evaluate, o);
  evaluate->add_option("--model-kind", o.model_kind, "gbdt | linear | tree");
  evaluate->add_flag("--baselines", o.baselines, "also evaluate linear and single-tree baselines");

  auto* explain = app.add_subcommand("explain", "SHAP values, importance, main effects");
  add_common(explain, o);
  add_training(explain, o);
  add_cv(explain, o);
  explain->add_option("--model", o.model, "explain with this model instead of out-of-fold CV");
  explain->add_option("--instance", o.instance, "print the contribution report of one row");
  explain->add_flag("!--no-svg", o.svg, "skip the SVG chart");

  auto* select = app.add_subcommand("select-features", "importance-ordered selection curve");
  add_common(select, o);
  add_training(select, o);
  add_cv(select, o);

  auto* predict = app.add_subcommand("predict", "stream feature rows -> sa_hat,latency_us");
  add_common(predict, o);
  predict->add_option("--model", o.model, "model JSON")->required();
  predict->add_option("--data", o.data, "input CSV (default: stdin)");
  predict->add_option("--out", o.out, "write a manifest to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Error(Error::Kind::kInvalidArgument, e.what()).what() << '\n';
    return 2;
  }

  try {
    gazesa::kernels::set_num_threads(o.threads);
    if (*synth) return gazesa::cli::cmd_synth(o);
    if (*extract) return gazesa::cli::cmd_extract(o);
    if (*score) return gazesa::cli::cmd_score(o);
    if (*train) return gazesa::cli::cmd_train(o);
    if (*evaluate) return gazesa::cli::cmd_evaluate(o);
    if (*explain) return gazesa::cli::cmd_explain(o);
    if (*select) return gazesa::cli::cmd_select_features(o);
    if (*predict) {
      if (o.data.empty() || o.data == "-") return gazesa::cli::cmd_predict(o, std::cin, std::cout, std::cerr);
      std::ifstream in(o.data, std::ios::binary);
      if (!in) throw Error(Error::Kind::kIo, "cannot open", o.data);
      return gazesa::cli::cmd_predict(o, in, std::cout, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Error(Error::Kind::kIo, e.what()).what() << '\n';
    return 1;
  }
  return 0;
}
