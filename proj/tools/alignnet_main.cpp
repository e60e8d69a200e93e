// Command-line workbench: simulate rated-score corpora, train the various
// regimens, evaluate checkpoints, compare runs, and export alignment curves.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alignnet/io.hpp"
#include "alignnet/metrics.hpp"
#include "alignnet/model.hpp"
#include "alignnet/sim.hpp"
#include "alignnet/train.hpp"

namespace fs = std::filesystem;

namespace {

using namespace alignnet;

std::vector<std::string> dataset_names(const DatasetCollection& c) {
  std::vector<std::string> names;
  for (const RatedDataset& d : c.datasets) names.push_back(d.name);
  return names;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] =
        n == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(n - 1);
  }
  return grid;
}

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
};

void run_simulate(const SimulateArgs& args) {
  SimConfig config = read_sim_config(args.config_path);
  if (args.seed_set) config.seed = args.seed;
  ensure_run_dir(args.out_dir, args.force);
  SimResult sim = build_collection(config);

  Manifest manifest;
  manifest.created_by = "alignnet simulate";
  manifest.seed = config.seed;
  manifest.feature_dim = config.feature_dim;
  for (const RatedDataset& ds : sim.collection.datasets) {
    std::string csv_name = ds.name + ".csv";
    write_dataset_csv((fs::path(args.out_dir) / csv_name).string(), ds);
    manifest.datasets.push_back({ds.name, csv_name, ds.is_reference});
  }
  write_manifest((fs::path(args.out_dir) / "manifest.cfg").string(), manifest);
  write_oracle((fs::path(args.out_dir) / "oracle.txt").string(), sim.oracle);
  write_text_file((fs::path(args.out_dir) / "sim.cfg").string(),
                  render_sim_config(config));
  std::printf("wrote %d datasets, manifest.cfg, and oracle.txt to %s\n",
              sim.collection.count(), args.out_dir.c_str());
}

struct TrainArgs {
  std::string manifest_path;
  std::string regimen;
  std::string config_path;
  std::string dataset;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
};

void run_train(const TrainArgs& args) {
  Manifest manifest = read_manifest(args.manifest_path);
  std::string manifest_dir =
      fs::path(args.manifest_path).parent_path().string();
  DatasetCollection collection = load_collection(manifest, manifest_dir);

  TrainConfig config = args.config_path.empty()
                           ? TrainConfig{}
                           : read_train_config(args.config_path);
  if (args.seed_set) config.seed = args.seed;
  config.validate();

  RegimenKind kind = regimen_from_string(args.regimen);
  if (kind == RegimenKind::Individual && args.dataset.empty()) {
    throw ConfigError("regimen individual requires --dataset");
  }
  if (kind != RegimenKind::Individual && !args.dataset.empty()) {
    throw ConfigError("--dataset only applies to regimen individual");
  }

  std::string run_name = args.regimen;
  if (kind == RegimenKind::Individual) run_name += "-" + args.dataset;
  run_name += "-seed" + std::to_string(config.seed);
  fs::path run_dir = fs::path(args.out_dir) / run_name;
  ensure_run_dir(run_dir.string(), args.force);

  Layout audio_layout = Layout::mlp(collection.feature_dim,
                                    config.audio_hidden, 1);
  Checkpoint ckpt;
  ckpt.dataset_names = dataset_names(collection);
  ckpt.reference_index = collection.reference_index;
  std::string log;
  int best_epoch = 0;
  double best_val = 0.0;

  switch (kind) {
    case RegimenKind::Individual: {
      int index = collection.index_of(args.dataset);
      BareTrainResult r =
          train_individual(audio_layout, collection, index, config);
      ckpt.kind = "audio";
      ckpt.audio = r.audio;
      log = render_train_log(r.history, r.dataset_names);
      best_epoch = r.best_epoch;
      best_val = r.best_val_loss;
      break;
    }
    case RegimenKind::All: {
      BareTrainResult r = train_conventional(audio_layout, collection, config);
      ckpt.kind = "audio";
      ckpt.audio = r.audio;
      log = render_train_log(r.history, r.dataset_names);
      best_epoch = r.best_epoch;
      best_val = r.best_val_loss;
      break;
    }
    case RegimenKind::AllBal: {
      BareTrainResult r = train_bal(audio_layout, collection, config);
      ckpt.kind = "audio";
      ckpt.audio = r.audio;
      log = render_train_log(r.history, r.dataset_names);
      best_epoch = r.best_epoch;
      best_val = r.best_val_loss;
      break;
    }
    case RegimenKind::AllMdf:
    case RegimenKind::AllMdfAlignnet: {
      BareTrainResult pre = pretrain(audio_layout, collection, config);
      write_text_file((run_dir / "pretrain.log").string(),
                      render_train_log(pre.history, pre.dataset_names));
      MdfResult fin = finetune_mdf(pre, collection, config,
                                   kind == RegimenKind::AllMdfAlignnet);
      if (fin.bare) {
        ckpt.kind = "audio";
        ckpt.audio = fin.bare->audio;
        log = render_train_log(fin.bare->history, fin.bare->dataset_names);
        best_epoch = fin.bare->best_epoch;
        best_val = fin.bare->best_val_loss;
      } else {
        ckpt.kind = "alignnet";
        ckpt.audio = fin.align->model.audio;
        ckpt.head = fin.align->model.head;
        log = render_train_log(fin.align->history, ckpt.dataset_names);
        best_epoch = fin.align->best_epoch;
        best_val = fin.align->best_val_loss;
      }
      break;
    }
  }

  write_checkpoint((run_dir / "checkpoint.txt").string(), ckpt);
  write_text_file((run_dir / "train.log").string(), log);
  write_text_file((run_dir / "train.cfg").string(),
                  render_train_config(config));
  std::printf("%s: best validation loss %.6g at epoch %d\n",
              run_dir.string().c_str(), best_val, best_epoch);
}

// Builds the estimator (and, for aligned models, the intermediate-score
// accessor) from a checkpoint, mapping the collection's dataset order onto
// the checkpoint's own indices by name.
struct LoadedEstimator {
  ScoreFn score;
  ScoreFn intermediate;
};

LoadedEstimator make_estimator(const Checkpoint& ckpt,
                               const DatasetCollection& collection) {
  LoadedEstimator est;
  if (ckpt.audio.layout.input_width() != collection.feature_dim) {
    throw ConfigError("checkpoint expects feature width " +
                      std::to_string(ckpt.audio.layout.input_width()) +
                      ", datasets have " +
                      std::to_string(collection.feature_dim));
  }
  if (ckpt.kind == "audio") {
    ParamVector audio = ckpt.audio;
    est.score = [audio](const Matrix& x, int) { return mlp_forward(audio, x); };
    est.intermediate = est.score;
    return est;
  }
  AlignModel model = ckpt.to_model();
  model.validate();
  std::vector<int> index_map;
  for (const RatedDataset& d : collection.datasets) {
    auto it = std::find(model.dataset_names.begin(), model.dataset_names.end(),
                        d.name);
    if (it == model.dataset_names.end()) {
      throw ConfigError("checkpoint was not trained on dataset " + d.name);
    }
    index_map.push_back(
        static_cast<int>(it - model.dataset_names.begin()));
  }
  const std::string& ckpt_ref =
      model.dataset_names[static_cast<std::size_t>(model.reference_index)];
  if (ckpt_ref != collection.reference().name) {
    throw ConfigError("checkpoint reference dataset (" + ckpt_ref +
                      ") differs from manifest reference (" +
                      collection.reference().name + ")");
  }
  est.score = [model, index_map](const Matrix& x, int j) {
    return alignnet_forward(
        model, x, model.indicator(index_map[static_cast<std::size_t>(j)]));
  };
  est.intermediate = [model](const Matrix& x, int) {
    return audionet_estimate(model, x);
  };
  return est;
}

struct EvaluateArgs {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string oracle_path;
  std::string out_dir;
  bool force = false;
};

void run_evaluate(const EvaluateArgs& args) {
  Checkpoint ckpt = read_checkpoint(args.checkpoint_path);
  Manifest manifest = read_manifest(args.manifest_path);
  DatasetCollection collection = load_collection(
      manifest, fs::path(args.manifest_path).parent_path().string());
  LoadedEstimator est = make_estimator(ckpt, collection);

  std::optional<OracleBundle> oracle;
  if (!args.oracle_path.empty()) oracle = read_oracle(args.oracle_path);

  EvalReport report =
      evaluate(est.score, collection, oracle ? &*oracle : nullptr,
               &est.intermediate);

  std::string out_dir = args.out_dir.empty()
                            ? fs::path(args.checkpoint_path)
                                  .parent_path()
                                  .string()
                            : args.out_dir;
  if (out_dir.empty()) out_dir = ".";
  fs::create_directories(out_dir);
  for (const char* name : {"report.txt", "report.tsv", "predictions.tsv"}) {
    require_writable((fs::path(out_dir) / name).string(), args.force);
  }
  write_text_file((fs::path(out_dir) / "report.txt").string(),
                  render_eval_report(report));
  write_text_file((fs::path(out_dir) / "report.tsv").string(),
                  render_eval_tsv(report));
  write_text_file((fs::path(out_dir) / "predictions.tsv").string(),
                  render_predictions_tsv(report));
  std::fputs(render_eval_report(report).c_str(), stdout);
}

struct CompareArgs {
  std::string a_path;
  std::string b_path;
  std::string label_a;
  std::string label_b;
  std::string out_dir;
  int n_boot = 2000;
  double level = 0.95;
  std::uint64_t seed = 2024;
  bool force = false;
};

std::string resolve_predictions(const std::string& path) {
  if (fs::is_directory(path)) {
    return (fs::path(path) / "predictions.tsv").string();
  }
  return path;
}

std::string default_label(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) return p.filename().string();
  std::string parent = p.parent_path().filename().string();
  return parent.empty() ? p.filename().string() : parent;
}

void run_compare(const CompareArgs& args) {
  PredictionSet a = read_predictions_tsv(resolve_predictions(args.a_path));
  PredictionSet b = read_predictions_tsv(resolve_predictions(args.b_path));
  std::string label_a =
      args.label_a.empty() ? default_label(args.a_path) : args.label_a;
  std::string label_b =
      args.label_b.empty() ? default_label(args.b_path) : args.label_b;
  Comparison cmp = compare_predictions(a, b, label_a, label_b, args.n_boot,
                                       args.level, args.seed);
  std::fputs(render_comparison(cmp).c_str(), stdout);
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    for (const char* name : {"comparison.txt", "comparison.tsv"}) {
      require_writable((fs::path(args.out_dir) / name).string(), args.force);
    }
    write_text_file((fs::path(args.out_dir) / "comparison.txt").string(),
                    render_comparison(cmp));
    write_text_file((fs::path(args.out_dir) / "comparison.tsv").string(),
                    render_comparison_tsv(cmp));
  }
}

struct ExportArgs {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string oracle_path;
  std::string out_dir;
  int grid = 100;
  bool force = false;
};

void run_export_alignments(const ExportArgs& args) {
  if (args.grid < 2) throw ConfigError("--grid must be at least 2");
  Checkpoint ckpt = read_checkpoint(args.checkpoint_path);
  if (ckpt.kind != "alignnet") {
    throw ConfigError("checkpoint has no alignment head (kind " + ckpt.kind +
                      ")");
  }
  Manifest manifest = read_manifest(args.manifest_path);
  DatasetCollection collection = load_collection(
      manifest, fs::path(args.manifest_path).parent_path().string());
  AlignModel model = ckpt.to_model();
  model.validate();

  std::optional<OracleBundle> oracle;
  if (!args.oracle_path.empty()) oracle = read_oracle(args.oracle_path);

  fs::create_directories(args.out_dir);
  std::vector<AlignmentCurve> curves;
  std::vector<std::vector<std::pair<double, double>>> overlays;
  for (int j = 0; j < collection.count(); ++j) {
    const RatedDataset& d = collection.datasets[static_cast<std::size_t>(j)];
    auto it = std::find(model.dataset_names.begin(), model.dataset_names.end(),
                        d.name);
    if (it == model.dataset_names.end()) {
      throw ConfigError("checkpoint was not trained on dataset " + d.name);
    }
    int model_index = static_cast<int>(it - model.dataset_names.begin());
    // Curves cover only the intermediate scores actually observed on this
    // dataset's training rows.
    Matrix x_train = gather_rows(d.features, d.train_idx);
    std::vector<double> inter = audionet_estimate(model, x_train);
    double lo = *std::min_element(inter.begin(), inter.end());
    double hi = *std::max_element(inter.begin(), inter.end());
    AlignmentCurve curve = sample_alignment_curve(
        model, model.indicator(model_index), linspace(lo, hi, args.grid));
    if (args.grid >= 8) {
      try {
        curve.fitted = fit_monotone_cubic(curve);
      } catch (const StatError&) {
        // A flat or degenerate curve has no meaningful cubic summary.
      }
    }
    std::string csv_name = "curve-" + d.name + ".csv";
    require_writable((fs::path(args.out_dir) / csv_name).string(), args.force);
    write_text_file((fs::path(args.out_dir) / csv_name).string(),
                    render_curve_csv(curve));
    if (oracle) {
      const OracleDataset& od = oracle->for_dataset(d.name);
      std::vector<std::pair<double, double>> truth;
      for (double s : curve.input) truth.emplace_back(s, od.distortion(s));
      overlays.push_back(std::move(truth));
    }
    curves.push_back(std::move(curve));
  }
  std::string svg_path = (fs::path(args.out_dir) / "alignments.svg").string();
  require_writable(svg_path, args.force);
  write_text_file(svg_path, render_curves_svg(curves, overlays));
  std::printf("wrote %zu curves and alignments.svg to %s\n", curves.size(),
              args.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-dataset score alignment workbench"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "generate a synthetic rated-score corpus");
  sim->add_option("--config", sim_args.config_path, "corpus definition file")
      ->required();
  sim->add_option("--out", sim_args.out_dir, "output directory")->required();
  CLI::Option* sim_seed =
      sim->add_option("--seed", sim_args.seed, "override the config seed");
  sim->add_flag("--force", sim_args.force, "reuse a non-empty directory");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train one regimen");
  train->add_option("--manifest", train_args.manifest_path, "dataset roster")
      ->required();
  train
      ->add_option("--regimen", train_args.regimen,
                   "individual | all | all-bal | all-mdf | all-mdf-alignnet")
      ->required();
  train->add_option("--config", train_args.config_path,
                    "training configuration file (defaults apply if omitted)");
  train->add_option("--dataset", train_args.dataset,
                    "dataset name (regimen individual only)");
  train->add_option("--out", train_args.out_dir,
                    "parent directory for the run directory")
      ->required();
  CLI::Option* train_seed =
      train->add_option("--seed", train_args.seed, "training seed");
  train->add_flag("--force", train_args.force, "reuse a non-empty run directory");

  EvaluateArgs eval_args;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score a checkpoint on the test splits");
  evaluate
      ->add_option("--checkpoint", eval_args.checkpoint_path, "trained model")
      ->required();
  evaluate->add_option("--manifest", eval_args.manifest_path, "dataset roster")
      ->required();
  evaluate->add_option("--oracle", eval_args.oracle_path,
                       "simulator ground truth (adds the latent diagnostic)");
  evaluate->add_option("--out", eval_args.out_dir,
                       "report directory (default: checkpoint directory)");
  evaluate->add_flag("--force", eval_args.force, "overwrite existing reports");

  CompareArgs cmp_args;
  CLI::App* compare = app.add_subcommand(
      "compare", "significance tests between two prediction sets");
  compare
      ->add_option("--a", cmp_args.a_path,
                   "first predictions.tsv (or its run directory)")
      ->required();
  compare
      ->add_option("--b", cmp_args.b_path,
                   "second predictions.tsv (or its run directory)")
      ->required();
  compare->add_option("--label-a", cmp_args.label_a, "display name for A");
  compare->add_option("--label-b", cmp_args.label_b, "display name for B");
  compare->add_option("--boot", cmp_args.n_boot,
                      "bootstrap replicates (default 2000)");
  compare->add_option("--level", cmp_args.level,
                      "confidence level (default 0.95)");
  compare->add_option("--seed", cmp_args.seed, "bootstrap seed");
  compare->add_option("--out", cmp_args.out_dir,
                      "directory for comparison.txt / comparison.tsv");
  compare->add_flag("--force", cmp_args.force, "overwrite existing outputs");

  ExportArgs export_args;
  CLI::App* exports = app.add_subcommand(
      "export-alignments", "sample learned alignment curves and plot them");
  exports
      ->add_option("--checkpoint", export_args.checkpoint_path, "trained model")
      ->required();
  exports->add_option("--manifest", export_args.manifest_path, "dataset roster")
      ->required();
  exports->add_option("--oracle", export_args.oracle_path,
                      "overlay the generating distortions");
  exports->add_option("--grid", export_args.grid,
                      "points per curve (default 100)");
  exports->add_option("--out", export_args.out_dir, "output directory")
      ->required();
  exports->add_flag("--force", export_args.force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);
    sim_args.seed_set = sim_seed->count() > 0;
    train_args.seed_set = train_seed->count() > 0;
    if (sim->parsed()) run_simulate(sim_args);
    if (train->parsed()) run_train(train_args);
    if (evaluate->parsed()) run_evaluate(eval_args);
    if (compare->parsed()) run_compare(cmp_args);
    if (exports->parsed()) run_export_alignments(export_args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    int code = e.get_exit_code();
    return code == 0 ? 1 : code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
