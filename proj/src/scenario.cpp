// SPDX-License-Identifier: Apache-2.0

#include "tomo/scenario.hpp"

#include "tomo/multiperson.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tomo {
namespace {

std::string trim_copy(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

}  // namespace

std::vector<BodyProfile> training_profiles() {
  return {
      {"narrow", 0.22, 0.9, 8.0, 0.03},
      {"medium", 0.26, 0.9, 10.0, 0.03},
      {"wide", 0.30, 0.9, 12.0, 0.03},
  };
}

BodyProfile test_profile() { return {"unseen", 0.24, 0.85, 9.0, 0.03}; }

Eigen::Vector2d category_position(const Layout& layout, int category_id) {
  const int idx = layout.categories.index_of_id(category_id);
  if (idx < 0) throw std::invalid_argument("unknown category id " + std::to_string(category_id));
  const Category& c = layout.categories.category(idx);
  const double x = 0.5 * (c.first_column + c.last_column) * layout.grid.spacing_x();
  const double y = 0.5 * (layout.grid.k_y() - 1) * layout.grid.spacing_y();
  return {x, y};
}

Obstacle person_at(const Layout& layout, int category_id, const BodyProfile& body, double start_s, double end_s) {
  const Eigen::Vector2d p = category_position(layout, category_id);
  Obstacle o;
  o.center_x = p.x();
  o.center_y = p.y();
  o.semi_axis_x = body.semi_axis_x;
  o.semi_axis_y = body.semi_axis_y;
  o.max_loss_db = body.max_loss_db;
  o.jitter_sigma_m = body.jitter_sigma_m;
  o.start_s = start_s;
  o.end_s = end_s;
  o.category_id = category_id;
  return o;
}

ObstructionScene scene_from_json(const std::string& text, const Layout& layout) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scene: ") + e.what());
  }
  try {
    ObstructionScene scene;
    scene.duration_s = j.at("duration_s").get<double>();
    scene.seed = j.value("seed", std::uint64_t{1});
    scene.plane_z_m = j.value("plane_z_m", scene.plane_z_m);
    scene.jitter_period_s = j.value("jitter_period_s", scene.jitter_period_s);
    if (scene.duration_s < 0.0) throw std::invalid_argument("scene: duration_s must be >= 0");
    if (!(scene.jitter_period_s > 0.0)) throw std::invalid_argument("scene: jitter_period_s must be > 0");
    for (const auto& o : j.value("obstacles", nlohmann::json::array())) {
      Obstacle ob;
      if (o.contains("category")) {
        ob.category_id = o.at("category").get<int>();
        const Eigen::Vector2d p = category_position(layout, ob.category_id);
        ob.center_x = p.x();
        ob.center_y = p.y();
      }
      ob.center_x = o.value("center_x", ob.center_x);
      ob.center_y = o.value("center_y", ob.center_y);
      if (!o.contains("category") && (!o.contains("center_x") || !o.contains("center_y"))) {
        throw std::invalid_argument("scene: obstacle needs a category or center_x and center_y");
      }
      ob.semi_axis_x = o.value("semi_axis_x", ob.semi_axis_x);
      ob.semi_axis_y = o.value("semi_axis_y", ob.semi_axis_y);
      ob.max_loss_db = o.value("max_loss_db", ob.max_loss_db);
      ob.jitter_sigma_m = o.value("jitter_sigma_m", ob.jitter_sigma_m);
      ob.start_s = o.value("start_s", ob.start_s);
      if (o.contains("end_s") && !o.at("end_s").is_null()) ob.end_s = o.at("end_s").get<double>();
      ob.category_id = o.value("category_id", ob.category_id);
      if (!(ob.semi_axis_x > 0.0 && ob.semi_axis_y > 0.0)) throw std::invalid_argument("scene: semi-axes must be > 0");
      if (ob.max_loss_db < 0.0) throw std::invalid_argument("scene: max_loss_db must be >= 0");
      if (ob.jitter_sigma_m < 0.0) throw std::invalid_argument("scene: jitter_sigma_m must be >= 0");
      scene.obstacles.push_back(ob);
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scene: ") + e.what());
  }
}

std::string scene_to_json(const ObstructionScene& scene) {
  nlohmann::ordered_json j;
  j["duration_s"] = scene.duration_s;
  j["seed"] = scene.seed;
  j["plane_z_m"] = scene.plane_z_m;
  j["jitter_period_s"] = scene.jitter_period_s;
  j["obstacles"] = nlohmann::ordered_json::array();
  for (const Obstacle& o : scene.obstacles) {
    nlohmann::ordered_json e;
    e["center_x"] = o.center_x;
    e["center_y"] = o.center_y;
    e["semi_axis_x"] = o.semi_axis_x;
    e["semi_axis_y"] = o.semi_axis_y;
    e["max_loss_db"] = o.max_loss_db;
    e["jitter_sigma_m"] = o.jitter_sigma_m;
    e["start_s"] = o.start_s;
    if (std::isfinite(o.end_s)) e["end_s"] = o.end_s;
    e["category_id"] = o.category_id;
    j["obstacles"].push_back(e);
  }
  return j.dump(2) + "\n";
}

ObstructionScene load_scene(const std::filesystem::path& path, const Layout& layout) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scene: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return scene_from_json(text.str(), layout);
}

void save_scene(const std::filesystem::path& path, const ObstructionScene& scene) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("scene: cannot write " + path.string());
  out << scene_to_json(scene);
}

std::vector<TagRead> simulate(const PipelineConfig& config, const ObstructionScene& scene, double rate_scale) {
  if (!(rate_scale > 0.0)) throw std::invalid_argument("simulate: rate scale must be > 0");
  ReadSchedule schedule = config.schedule;
  schedule.rate_per_s *= rate_scale;
  return generate_reads(config.layout.grid, config.layout.antennas, config.channel, scene, schedule);
}

CalibrationProfile calibrate_environment(const PipelineConfig& config, double duration_s, std::uint64_t seed) {
  ObstructionScene empty;
  empty.duration_s = duration_s;
  empty.seed = seed;
  const std::vector<TagRead> reads = simulate(config, empty);
  return run_calibration(reads, config.layout.grid.size(), config.layout.antennas.size(),
                         config.channel.channel_count());
}

std::vector<TickResult> monitor_reads(const PipelineConfig& config, const CalibrationProfile& profile,
                                      std::span<const TagRead> reads) {
  check_calibration(config, profile);
  return monitor_stream(reads, profile, config.monitor);
}

WindowLabeler::WindowLabeler(const PipelineConfig& config, LabelShape shape, TrainingSet& set)
    : config_(config), shape_(shape), set_(set) {
  if (!(shape.semi_u > 0.0 && shape.semi_v > 0.0)) throw std::invalid_argument("label semi-axes must be > 0");
}

std::vector<int> WindowLabeler::labels_for(const ObstructionScene& scene, double t) {
  const TagGrid& grid = config_.layout.grid;
  const ImagePlane& plane = config_.layout.reference_plane();
  const int k_cw = config_.window.k_cw;
  const int count = grid.k_x() - k_cw + 1;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::vector<std::pair<long, long>> key;
    std::vector<Eigen::Vector2d> centers;
    for (const Obstacle& o : scene.obstacles) {
      if (!(t >= o.start_s && t < o.end_s)) continue;
      const double col = o.center_x / grid.spacing_x();
      if (col < i - 0.5 || col >= i + k_cw - 0.5) continue;
      const double u = std::clamp(plane.to_voxel_u(o.center_x), 0.0, plane.width() - 1.0);
      const double v = std::clamp(plane.to_voxel_v(o.center_y), 0.0, plane.height() - 1.0);
      key.emplace_back(std::lround(u * 1000.0), std::lround(v * 1000.0));
      centers.emplace_back(u, v);
    }
    const auto hit = std::find_if(cache_.begin(), cache_.end(), [&](const auto& e) { return e.first == key; });
    if (hit != cache_.end()) {
      out.push_back(hit->second);
      continue;
    }
    Eigen::VectorXd label = Eigen::VectorXd::Zero(plane.size());
    for (const Eigen::Vector2d& c : centers) {
      label = label.cwiseMax(rasterize_label(c.x(), c.y(), shape_.semi_u, shape_.semi_v, plane.width(),
                                             plane.height()).values);
    }
    const int id = set_.add_label(std::move(label));
    cache_.emplace_back(std::move(key), id);
    out.push_back(id);
  }
  return out;
}

int add_scene_samples(TrainingSet& set, WindowLabeler& labeler, const PipelineConfig& config,
                      const CalibrationProfile& profile, const ObstructionScene& scene, double warmup_s,
                      bool balance_edges) {
  const std::vector<TagRead> reads = simulate(config, scene);
  const std::vector<TickResult> ticks = monitor_reads(config, profile, reads);
  int used = 0;
  for (const TickResult& tick : ticks) {
    if (tick.timestamp_s <= warmup_s + 1e-9) continue;
    const std::vector<int> labels = labeler.labels_for(scene, tick.timestamp_s - 0.5 * config.monitor.tick_period_s);
    for (const RssDifferenceVector& y : tick.y) {
      const std::size_t first = set.size();
      add_window_samples(set, y, profile, config.layout.grid, config.window, config.dnn.max_rss,
                         [&](int i) { return labels[static_cast<std::size_t>(i)]; });
      if (!balance_edges) continue;
      std::vector<std::size_t> positive;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (set.label(first + i).maxCoeff() > 0.0) positive.push_back(i);
      }
      if (positive.empty()) continue;
      const long extra = std::lround(static_cast<double>(config.window.k_cw) / positive.size()) - 1;
      for (long r = 0; r < extra; ++r) {
        for (std::size_t i : positive) set.add(Eigen::VectorXd(set.input(first + i)), labels[i]);
      }
    }
    ++used;
  }
  return used;
}

void add_quiet_samples(TrainingSet& set, const PipelineConfig& config, const CalibrationProfile& profile) {
  const int zero = set.add_label(Eigen::VectorXd::Zero(config.layout.reference_plane().size()));
  for (int a = 0; a < profile.num_antennas; ++a) {
    set.add(normalize_input(quiet_vector(profile, a).values, config.dnn.max_rss), zero);
  }
}

TrainingSet build_training_set(const PipelineConfig& config, const CalibrationProfile& profile,
                               const TrainingPlan& plan) {
  if (plan.profiles.empty()) throw std::invalid_argument("training plan has no body profiles");
  TrainingSet set;
  WindowLabeler labeler(config, plan.label, set);
  const double tick = config.monitor.tick_period_s;
  for (std::size_t p = 0; p < plan.profiles.size(); ++p) {
    for (const Category& c : config.layout.categories.categories()) {
      ObstructionScene scene;
      scene.seed = plan.seed + 1000 * (p + 1) + static_cast<std::uint64_t>(c.id);
      scene.duration_s = plan.warmup_s + plan.ticks_per_run * tick;
      scene.obstacles.push_back(person_at(config.layout, c.id, plan.profiles[p], 0.0));
      add_scene_samples(set, labeler, config, profile, scene, plan.warmup_s, plan.balance_edges);
    }
  }
  if (plan.quiet_ticks > 0) {
    ObstructionScene quiet;
    quiet.seed = plan.seed;
    quiet.duration_s = plan.warmup_s + plan.quiet_ticks * tick;
    add_scene_samples(set, labeler, config, profile, quiet, plan.warmup_s);
  }
  add_quiet_samples(set, config, profile);
  return set;
}

MlpSpec network_spec(const PipelineConfig& config) {
  const Layout& l = config.layout;
  MlpSpec spec = MlpSpec::for_layout(l.grid.size(), l.grid.k_x(), l.grid.k_y(), l.reference_plane().p_x(),
                                     l.reference_plane().p_y());
  spec.dropout_retain = config.dnn.retain;
  spec.l2_coeff = config.dnn.l2;
  spec.learning_rate = config.dnn.learning_rate;
  spec.batch_size = config.dnn.batch_size;
  spec.epochs = config.dnn.epochs;
  spec.seed = config.dnn.seed;
  return spec;
}

ScenarioSpec scenario_named(const std::string& name) {
  std::string s = name;
  if (s.rfind("cat", 0) == 0) s = s.substr(3);
  std::replace(s.begin(), s.end(), '+', ',');
  std::replace(s.begin(), s.end(), '{', ' ');
  std::replace(s.begin(), s.end(), '}', ' ');
  ScenarioSpec spec;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    const std::string t = trim_copy(tok);
    if (t.empty() || t.size() > 6 || !std::all_of(t.begin(), t.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
      throw std::invalid_argument("unknown scenario '" + name + "'");
    }
    spec.categories.push_back(std::stoi(t));
  }
  if (spec.categories.empty()) throw std::invalid_argument("unknown scenario '" + name + "'");
  for (std::size_t i = 0; i < spec.categories.size(); ++i) {
    spec.name += (i ? "+" : "") + std::to_string(spec.categories[i]);
  }
  if (spec.categories.size() == 1) spec.name = "cat" + spec.name;
  return spec;
}

std::vector<ScenarioSpec> single_person_suite(const Layout& layout) {
  std::vector<ScenarioSpec> out;
  for (const Category& c : layout.categories.categories()) out.push_back({"cat" + std::to_string(c.id), {c.id}});
  return out;
}

std::vector<ScenarioSpec> two_person_suite() {
  return {{"1+3", {1, 3}}, {"1+4", {1, 4}}, {"1+5", {1, 5}}, {"1+6", {1, 6}}, {"3+6", {3, 6}}, {"4+6", {4, 6}}};
}

std::vector<ScenarioSpec> three_person_suite() { return {{"1+4+6", {1, 4, 6}}, {"2+4+6", {2, 4, 6}}}; }

ObstructionScene scenario_scene(const PipelineConfig& config, const ScenarioSpec& scenario,
                                const EvalSettings& settings) {
  ObstructionScene scene;
  std::uint64_t seed = settings.seed;
  for (int id : scenario.categories) seed = seed * 31 + static_cast<std::uint64_t>(id);
  scene.seed = seed;
  scene.duration_s = settings.lead_in_s + settings.settle_s + settings.windows * config.monitor.tick_period_s;
  for (int id : scenario.categories) scene.obstacles.push_back(person_at(config.layout, id, settings.body, settings.lead_in_s));
  return scene;
}

ScenarioRun run_scenario(const PipelineConfig& config, const CalibrationProfile& profile,
                         const MlpEnsemble* ensemble, const ScenarioSpec& scenario, const EvalSettings& settings) {
  if (settings.windows <= 0) throw std::invalid_argument("run_scenario: window count must be > 0");
  for (int id : scenario.categories) {
    if (config.layout.categories.index_of_id(id) < 0) {
      throw std::invalid_argument("scenario '" + scenario.name + "' names unknown category " + std::to_string(id));
    }
  }
  const ObstructionScene scene = scenario_scene(config, scenario, settings);
  const std::vector<TagRead> reads = simulate(config, scene, settings.rate_scale);
  const std::vector<TickResult> ticks = monitor_reads(config, profile, reads);
  Pipeline pipeline(config, profile, settings.mode, ensemble);
  ScenarioRun run;
  const double eval_start = settings.lead_in_s + settings.settle_s;
  for (const TickResult& tick : ticks) {
    TickOutcome outcome = pipeline.process(tick);
    if (tick.timestamp_s > eval_start + 1e-9) run.windows.push_back({scenario.categories, outcome.scored});
    run.ticks.push_back(std::move(outcome));
  }
  const EvalReport report = evaluate(run.windows);
  run.row = {scenario.name, config.window.k_cw, settings.training_users, report.tpr, report.fpr, report.mr,
             report.windows};
  return run;
}

}  // namespace tomo
