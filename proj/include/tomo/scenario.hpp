// SPDX-License-Identifier: Apache-2.0
//
// Synthetic sessions: body profiles standing in for shoppers, scene files,
// background calibration, training-set construction, and the labeled
// evaluation harness.

#pragma once

#include "tomo/dnn.hpp"
#include "tomo/layout_config.hpp"
#include "tomo/pipeline.hpp"
#include "tomo/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace tomo {

struct BodyProfile {
  std::string name;
  double semi_axis_x = 0.26;
  double semi_axis_y = 0.9;
  double max_loss_db = 10.0;
  double jitter_sigma_m = 0.03;
};

// Three profiles used for training, narrow to wide.
std::vector<BodyProfile> training_profiles();
// A profile between the training ones, never seen during training.
BodyProfile test_profile();

// Plane-local position of a person browsing the given category: centered on
// the category's columns, at mid-height of the tag mesh.
Eigen::Vector2d category_position(const Layout& layout, int category_id);

Obstacle person_at(const Layout& layout, int category_id, const BodyProfile& body, double start_s,
                   double end_s = std::numeric_limits<double>::infinity());

// Scene file (JSON). Obstacles may give "category" instead of explicit
// center coordinates; "start_s"/"end_s" bound when each one is present.
ObstructionScene scene_from_json(const std::string& text, const Layout& layout);
std::string scene_to_json(const ObstructionScene& scene);
ObstructionScene load_scene(const std::filesystem::path& path, const Layout& layout);
void save_scene(const std::filesystem::path& path, const ObstructionScene& scene);

std::vector<TagRead> simulate(const PipelineConfig& config, const ObstructionScene& scene, double rate_scale = 1.0);

// Empty-scene capture followed by run_calibration.
CalibrationProfile calibrate_environment(const PipelineConfig& config, double duration_s, std::uint64_t seed);

std::vector<TickResult> monitor_reads(const PipelineConfig& config, const CalibrationProfile& profile,
                                      std::span<const TagRead> reads);

struct LabelShape {
  double semi_u = 12.0;  // voxels
  double semi_v = 7.5;
};

// Labels per window: every obstacle active at the tick whose center column
// lies in [i - 0.5, i + k_cw - 0.5) contributes its ellipse; otherwise the
// window label is the zero image.
class WindowLabeler {
 public:
  WindowLabeler(const PipelineConfig& config, LabelShape shape, TrainingSet& set);

  std::vector<int> labels_for(const ObstructionScene& scene, double t);

 private:
  const PipelineConfig& config_;
  LabelShape shape_;
  TrainingSet& set_;
  std::vector<std::pair<std::vector<std::pair<long, long>>, int>> cache_;
};

struct TrainingPlan {
  std::vector<BodyProfile> profiles = training_profiles();
  double warmup_s = 5.0;
  int ticks_per_run = 15;
  int quiet_ticks = 15;
  LabelShape label;
  // Positive windows of a tick are repeated until the tick holds about k_cw
  // of them, so edge categories (fewer covering windows) are not drowned out.
  bool balance_edges = true;
  std::uint64_t seed = 11;
};

// Runs one scene per (profile, category) plus an empty scene and adds every
// window variant of every post-warm-up tick.
TrainingSet build_training_set(const PipelineConfig& config, const CalibrationProfile& profile,
                               const TrainingPlan& plan);

// Adds the windows of an arbitrary scene; returns the number of ticks used.
int add_scene_samples(TrainingSet& set, WindowLabeler& labeler, const PipelineConfig& config,
                      const CalibrationProfile& profile, const ObstructionScene& scene, double warmup_s,
                      bool balance_edges = false);

// Zero-label samples from the 2 sigma vector of every antenna.
void add_quiet_samples(TrainingSet& set, const PipelineConfig& config, const CalibrationProfile& profile);

MlpSpec network_spec(const PipelineConfig& config);

struct ScenarioSpec {
  std::string name;
  std::vector<int> categories;
};

ScenarioSpec scenario_named(const std::string& name);  // "1,4,6" or "cat3"
std::vector<ScenarioSpec> single_person_suite(const Layout& layout);
std::vector<ScenarioSpec> two_person_suite();
std::vector<ScenarioSpec> three_person_suite();

struct EvalSettings {
  double lead_in_s = 10.0;
  double settle_s = 8.0;
  int windows = 60;
  double rate_scale = 1.0;
  BodyProfile body = test_profile();
  ImagingMode mode = ImagingMode::kDnn;
  int training_users = 3;
  std::uint64_t seed = 101;
};

ObstructionScene scenario_scene(const PipelineConfig& config, const ScenarioSpec& scenario,
                                const EvalSettings& settings);

struct ScenarioRun {
  EvalRow row;
  std::vector<WindowOutcome> windows;
  std::vector<TickOutcome> ticks;
};

ScenarioRun run_scenario(const PipelineConfig& config, const CalibrationProfile& profile,
                         const MlpEnsemble* ensemble, const ScenarioSpec& scenario, const EvalSettings& settings);

}  // namespace tomo
