// SPDX-License-Identifier: Apache-2.0
//
// tomo-rfid: simulate read logs, calibrate, train the imaging network, run
// the imaging/tracking pipeline, and evaluate labeled scenarios.

#include "tomo/dnn.hpp"
#include "tomo/layout_config.hpp"
#include "tomo/pipeline.hpp"
#include "tomo/read_log.hpp"
#include "tomo/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tomo;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

PipelineConfig load_or_default(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  if (!fs::exists(path)) throw std::runtime_error("config file not found: " + path);
  return load_config(path);
}

// TOMO_RFID_SEED, then --seed, then the fallback.
std::uint64_t effective_seed(const Common& c, std::uint64_t fallback) {
  if (const char* env = std::getenv("TOMO_RFID_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::runtime_error(std::string("TOMO_RFID_SEED is not an unsigned integer: ") + env);
    }
  }
  return c.seed.value_or(fallback);
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw std::runtime_error(std::string("missing --") + what);
  if (!fs::exists(path)) throw std::runtime_error(std::string(what) + " file not found: " + path);
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::string frame_name(int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.pgm", n);
  return buf;
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_simulate(const Common& c, const std::string& scene_path, std::optional<double> duration,
                 std::optional<double> rate, const std::string& out) {
  PipelineConfig cfg = load_or_default(c.config);
  require_file(scene_path, "scene");
  ObstructionScene scene = load_scene(scene_path, cfg.layout);
  if (duration) scene.duration_s = *duration;
  if (rate) cfg.schedule.rate_per_s = *rate;
  scene.seed = effective_seed(c, scene.seed);
  const std::vector<TagRead> reads = simulate(cfg, scene);
  ensure_parent(out);
  save_reads(out, reads);
  std::cout << reads.size() << " reads written to " << out << '\n';
  return 0;
}

int cmd_calibrate(const Common& c, const std::string& log, double duration, const std::string& out) {
  const PipelineConfig cfg = load_or_default(c.config);
  CalibrationProfile profile;
  if (!log.empty()) {
    require_file(log, "log");
    const std::vector<TagRead> reads = load_reads(log);
    profile = run_calibration(reads, cfg.layout.grid.size(), cfg.layout.antennas.size(), cfg.channel.channel_count());
  } else {
    profile = calibrate_environment(cfg, duration, effective_seed(c, 1));
  }
  ensure_parent(out);
  save_calibration(out, profile);
  std::cout << "calibration written to " << out << " (sigma_y = " << fmt(profile.sigma_y, 4) << " dB^2)\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& calib, const std::vector<std::string>& scenes,
              std::optional<int> epochs, std::optional<int> members, const std::string& out,
              const std::string& loss_csv) {
  PipelineConfig cfg = load_or_default(c.config);
  require_file(calib, "calib");
  const CalibrationProfile profile = load_calibration(calib);
  check_calibration(cfg, profile);
  if (epochs) cfg.dnn.epochs = *epochs;
  if (members) cfg.dnn.ensemble = *members;
  cfg.dnn.seed = effective_seed(c, 1);

  TrainingSet set;
  if (scenes.empty()) {
    TrainingPlan plan;
    plan.seed = cfg.dnn.seed + 10;
    set = build_training_set(cfg, profile, plan);
  } else {
    WindowLabeler labeler(cfg, LabelShape{}, set);
    bool has_empty = false;
    for (const std::string& path : scenes) {
      require_file(path, "scene");
      const ObstructionScene scene = load_scene(path, cfg.layout);
      has_empty = has_empty || scene.empty();
      add_scene_samples(set, labeler, cfg, profile, scene, 5.0, true);
    }
    if (!has_empty) {
      std::cerr << "warning: no empty scene given; adding synthesized no-obstruction samples\n";
    }
    add_quiet_samples(set, cfg, profile);
  }
  std::cerr << "training on " << set.size() << " samples, " << cfg.dnn.ensemble << " member(s), " << cfg.dnn.epochs
            << " epoch(s)\n";
  std::ofstream loss;
  if (!loss_csv.empty()) {
    ensure_parent(loss_csv);
    loss.open(loss_csv);
    loss << "member,epoch,loss\n";
  }
  const MlpEnsemble ensemble =
      train_ensemble(network_spec(cfg), set, cfg.dnn.ensemble, nullptr, [&](int m, int e, double l) {
        if (loss.is_open()) loss << m << ',' << e + 1 << ',' << fmt(l, 8) << '\n';
        std::cerr << "member " << m << " epoch " << e + 1 << " loss " << fmt(l, 6) << '\n';
      });
  ensure_parent(out);
  save_checkpoint(out, ensemble);
  std::cout << "model written to " << out << '\n';
  return 0;
}

int cmd_pipeline(const Common& c, const std::string& mode_name, const std::string& log, const std::string& calib,
                 const std::string& model, std::optional<int> k_cw, const std::string& out) {
  PipelineConfig cfg = load_or_default(c.config);
  if (k_cw) {
    cfg.window.k_cw = *k_cw;
    cfg.window.validate(cfg.layout.grid.k_x());
  }
  const ImagingMode mode = parse_imaging_mode(mode_name);
  require_file(log, "log");
  require_file(calib, "calib");
  const CalibrationProfile profile = load_calibration(calib);
  check_calibration(cfg, profile);
  std::optional<MlpEnsemble> ensemble;
  if (mode == ImagingMode::kDnn) {
    require_file(model, "model");
    ensemble = load_checkpoint(model, network_spec(cfg));
  }
  const std::vector<TagRead> reads = load_reads(log);
  const std::vector<TickResult> ticks = monitor_reads(cfg, profile, reads);
  Pipeline pipeline(cfg, profile, mode, ensemble ? &*ensemble : nullptr);

  fs::create_directories(out);
  std::ofstream csv(fs::path(out) / "scores.csv");
  std::ofstream jsonl(fs::path(out) / "scores.jsonl");
  csv << "timestamp_s,gated,frame,blobs,scored";
  for (const Category& cat : cfg.layout.categories.categories()) csv << ",P_" << cat.id;
  csv << '\n';
  int frames = 0;
  for (const TickResult& tick : ticks) {
    const TickOutcome o = pipeline.process(tick);
    std::string frame_file;
    if (o.frame) {
      frame_file = frame_name(++frames);
      save_pgm(fs::path(out) / frame_file, *o.frame);
    }
    std::string scored;
    for (std::size_t i = 0; i < o.scored.size(); ++i) scored += (i ? "+" : "") + std::to_string(o.scored[i]);
    csv << fmt(o.timestamp_s, 3) << ',' << (o.gated ? 1 : 0) << ',' << frame_file << ',' << o.blobs.size() << ','
        << scored;
    for (long n : pipeline.scores().counts()) csv << ',' << n;
    csv << '\n';
    jsonl << score_json_line(o.timestamp_s, o.blobs, pipeline.scores(), cfg.layout.categories) << '\n';
  }
  std::cout << ticks.size() << " ticks, " << frames << " frames written to " << out << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& calib, const std::string& model, const std::string& mode_name,
             std::vector<std::string> scenario_names, const std::vector<int>& k_cws, std::optional<double> rate,
             int windows, const std::vector<double>& sweep, const std::string& out) {
  PipelineConfig cfg = load_or_default(c.config);
  if (k_cws.empty()) throw std::runtime_error("--k-cw needs at least one value");
  if (rate) cfg.schedule.rate_per_s = *rate;
  const ImagingMode mode = parse_imaging_mode(mode_name);
  require_file(calib, "calib");
  const CalibrationProfile profile = load_calibration(calib);
  check_calibration(cfg, profile);
  std::optional<MlpEnsemble> ensemble;
  if (mode == ImagingMode::kDnn) {
    require_file(model, "model");
    ensemble = load_checkpoint(model, network_spec(cfg));
  }
  if (scenario_names.empty()) {
    for (const auto& s : two_person_suite()) scenario_names.push_back(s.name);
    for (const auto& s : three_person_suite()) scenario_names.push_back(s.name);
  }
  std::vector<ScenarioSpec> scenarios;
  for (const std::string& n : scenario_names) scenarios.push_back(scenario_named(n));

  EvalSettings settings;
  settings.mode = mode;
  settings.windows = windows;
  settings.seed = effective_seed(c, 1) + 100;
  const MlpEnsemble* net = ensemble ? &*ensemble : nullptr;

  std::vector<EvalRow> rows;
  for (int k : k_cws) {
    cfg.window.k_cw = k;
    cfg.window.validate(cfg.layout.grid.k_x());
    for (const ScenarioSpec& s : scenarios) {
      rows.push_back(run_scenario(cfg, profile, net, s, settings).row);
      std::cerr << "k_cw " << k << " scenario " << s.name << " done\n";
    }
  }
  fs::create_directories(out);
  {
    std::ofstream f(fs::path(out) / "report.csv");
    write_report_csv(f, rows);
  }
  write_report_table(std::cout, rows);

  if (!sweep.empty()) {
    cfg.window.k_cw = k_cws.front();
    std::ofstream f(fs::path(out) / "rate_sweep.csv");
    f << "scenario,rate_fraction,reads_per_s,tpr,fpr,mr\n";
    for (const ScenarioSpec& s : scenarios) {
      for (double frac : sweep) {
        EvalSettings swept = settings;
        swept.rate_scale = frac;
        const EvalRow r = run_scenario(cfg, profile, net, s, swept).row;
        f << s.name << ',' << fmt(frac, 2) << ',' << fmt(cfg.schedule.rate_per_s * frac, 2) << ',' << fmt(r.tpr, 4)
          << ',' << fmt(r.fpr, 4) << ',' << fmt(r.mr, 4) << '\n';
        std::cerr << "rate " << fmt(frac, 2) << " scenario " << s.name << " done\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tag-array RF tomography: simulation, imaging, tracking and evaluation"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "Layout/pipeline config (INI)");
  app.add_option("--seed", common.seed, "Random seed (TOMO_RFID_SEED overrides)");

  std::string scene, log, calib, model, out, mode = "dnn", loss_csv;
  std::optional<double> duration, rate;
  std::optional<int> k_cw, epochs, members;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic read log from a scene file");
  sim->add_option("--scene", scene, "Scene JSON")->required();
  sim->add_option("--duration", duration, "Override the scene duration (s)");
  sim->add_option("--rate", rate, "Reads per second");
  sim->add_option("--out", out, "Output log (.csv or .jsonl)")->required();

  double calib_duration = 600.0;
  auto* cal = app.add_subcommand("calibrate", "Build a calibration profile from an empty-scene log");
  cal->add_option("--log", log, "Empty-scene read log; simulated when omitted");
  cal->add_option("--duration", calib_duration, "Simulated capture length (s)");
  cal->add_option("--out", out, "Output calibration JSON")->required();

  std::vector<std::string> train_scenes;
  auto* train = app.add_subcommand("train", "Train the imaging network ensemble");
  train->add_option("--calib", calib, "Calibration JSON")->required();
  train->add_option("--scene", train_scenes, "Training scene JSON (repeatable); synthetic suite when omitted");
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--ensemble", members, "Ensemble size (odd)");
  train->add_option("--loss-csv", loss_csv, "Per-epoch loss CSV");
  train->add_option("--out", out, "Output checkpoint")->required();

  auto* pipe = app.add_subcommand("pipeline", "Image and track a read log");
  pipe->add_option("--mode", mode, "analytic or dnn")->check(CLI::IsMember({"analytic", "dnn"}));
  pipe->add_option("--log", log, "Read log")->required();
  pipe->add_option("--calib", calib, "Calibration JSON")->required();
  pipe->add_option("--model", model, "Network checkpoint (dnn mode)");
  pipe->add_option("--k-cw", k_cw, "Window width in tag columns");
  pipe->add_option("--out", out, "Output directory")->required();

  std::vector<std::string> scenario_names;
  std::vector<int> k_cws{6};
  std::vector<double> sweep;
  int windows = 60;
  auto* ev = app.add_subcommand("eval", "Evaluate labeled synthetic scenarios");
  ev->add_option("--calib", calib, "Calibration JSON")->required();
  ev->add_option("--model", model, "Network checkpoint (dnn mode)");
  ev->add_option("--mode", mode, "analytic or dnn")->check(CLI::IsMember({"analytic", "dnn"}));
  ev->add_option("--scenario", scenario_names, "Scenario such as 1+4+6 or cat3 (repeatable)");
  ev->add_option("--k-cw", k_cws, "Window widths to evaluate");
  ev->add_option("--rate", rate, "Base reads per second");
  ev->add_option("--windows", windows, "Evaluation windows per scenario")->check(CLI::PositiveNumber);
  ev->add_option("--rate-sweep", sweep, "Reading-rate fractions to sweep, e.g. 1 0.5 0.25 0.1");
  ev->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(common, scene, duration, rate, out);
    if (*cal) return cmd_calibrate(common, log, calib_duration, out);
    if (*train) return cmd_train(common, calib, train_scenes, epochs, members, out, loss_csv);
    if (*pipe) return cmd_pipeline(common, mode, log, calib, model, k_cw, out);
    if (*ev) return cmd_eval(common, calib, model, mode, scenario_names, k_cws, rate, windows, sweep, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
