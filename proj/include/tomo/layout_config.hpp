// SPDX-License-Identifier: Apache-2.0
//
// INI-style configuration. The [layout] section describes the shelf; the
// optional sections tune the simulator, monitor, solver, network, windowing
// and tracker. Unknown keys are rejected so typos surface early.
//
//   [layout]
//   k_x = 29
//   k_y = 4
//   spacing_m = 0.127
//   origin = 0 1.372 0
//   antenna_positions = 1.524 1.372 4.2 | 2.032 1.372 4.2
//   z_planes = 0.3 0.6
//   p_x = 5
//   p_y = 5
//   categories = 0-3, 5-8, 10-13, 15-18, 20-23, 25-28

#pragma once

#include "tomo/analytic_imaging.hpp"
#include "tomo/channel_sim.hpp"
#include "tomo/geometry.hpp"
#include "tomo/multiperson.hpp"
#include "tomo/preprocess.hpp"
#include "tomo/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tomo {

struct DnnSettings {
  int ensemble = 3;
  int epochs = 200;
  double l2 = 1e-6;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double retain = 0.7;
  double max_rss = 30.0;
  std::uint64_t seed = 1;
};

struct TrackingSettings {
  BlobParams blobs;
  double eta2 = 10.0;
};

struct PipelineConfig {
  Layout layout = Layout::standard_shelf();
  ChannelModel channel;
  ReadSchedule schedule;
  MonitorConfig monitor;
  ImagingParams imaging;
  DnnSettings dnn;
  WindowConfig window;
  TrackingSettings tracking;
};

// "0-3, 5-8" -> categories 1 and 2 spanning those columns.
std::vector<Category> parse_categories(const std::string& text);

PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const PipelineConfig& config);

}  // namespace tomo
