// SPDX-License-Identifier: Apache-2.0
//
// Synthetic monostatic read streams. Links follow the log-distance backscatter
// model; people are elliptical absorbers on a plane between shelf and reader,
// attenuating each link by the fraction of its first Fresnel zone they cover.

#pragma once

#include "tomo/geometry.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace tomo {

struct ChannelModel {
  double tx_power_dbm = 30.0;
  double antenna_gain_db = 6.0;
  double tag_gain_db = 2.0;
  double backscatter_loss_db = 10.0;
  double env_constant_db = -5.0;
  double baseline_exponent = 4.0;
  double noise_sigma_db = 0.8;
  double cable_phase_offset_rad = 0.0;
  double tag_backscatter_phase_rad = 0.0;
  double multipath_phase_sigma_rad = 0.05;
  std::vector<double> subcarriers_hz = default_subcarriers();

  // Constant term of the log-distance model: transmit power, both antenna gains
  // twice (forward and reverse), backscatter loss and the environment offset.
  double a0_db() const {
    return tx_power_dbm + 2.0 * antenna_gain_db + 2.0 * tag_gain_db - backscatter_loss_db + env_constant_db;
  }
  int channel_count() const { return static_cast<int>(subcarriers_hz.size()); }
  double wavelength(int channel) const;
  double average_wavelength() const;

  // 50 channels, 902.75 MHz to 927.25 MHz.
  static std::vector<double> default_subcarriers();
};

struct Obstacle {
  double center_x = 0.0;  // plane-local meters from the bottom-left tag
  double center_y = 0.0;
  double semi_axis_x = 0.25;
  double semi_axis_y = 0.9;
  double max_loss_db = 10.0;  // one-way loss at full blockage
  double jitter_sigma_m = 0.0;
  double start_s = 0.0;
  double end_s = std::numeric_limits<double>::infinity();
  int category_id = 0;  // ground truth for evaluation, 0 if none
};

struct ObstructionScene {
  std::vector<Obstacle> obstacles;
  double duration_s = 0.0;
  std::uint64_t seed = 1;
  double plane_z_m = 0.5;
  double jitter_period_s = 1.0;

  bool empty() const { return obstacles.empty(); }
};

struct ObstaclePosition {
  double x = 0.0;
  double y = 0.0;
  bool active = false;
};

struct TagRead {
  double timestamp_s = 0.0;
  int tag_id = 0;
  int antenna_id = 0;
  int channel_index = 0;
  double rss_dbm = 0.0;
  double phase_rad = 0.0;

  bool operator==(const TagRead&) const = default;
};

double free_space_rss(const ChannelModel& model, double lambda, double d, double beta);

// Phase for an explicit multipath term; wrapped into [0, 2*pi).
double phase_with_multipath(const ChannelModel& model, double f, double d, double multipath_rad);

// Draws the multipath jitter from N(0, multipath_phase_sigma^2) when the sigma is positive.
double phase_at(const ChannelModel& model, double f, double d, std::mt19937_64& rng);

// Obstacle centers at time t; jitter is redrawn every jitter period and
// depends only on (seed, obstacle, period index).
std::vector<ObstaclePosition> positions_at(const ObstructionScene& scene, double t);

// Point where the tag-antenna segment crosses the plane at world height z.
Point3 plane_crossing(const Point3& tag, const Point3& antenna, double plane_z_world);

struct LinkObstruction {
  double loss_db = 0.0;      // summed over obstacles
  double max_overlap = 0.0;  // largest single-obstacle overlap fraction
};

// Overlap is the fraction of the first Fresnel zone disk, taken where the link
// crosses the obstacle plane, that falls inside each active obstacle ellipse.
LinkObstruction link_obstruction(const ObstructionScene& scene, std::span<const ObstaclePosition> positions,
                                 const Point3& tag, const Point3& antenna, const Point3& plane_origin,
                                 double lambda);

// Two-way loss in dB: 2 * max_loss_db * overlap, summed over obstacles.
double obstruction_loss(const ObstructionScene& scene, std::span<const ObstaclePosition> positions,
                        const Point3& tag, const Point3& antenna, const ImagePlane& plane, double lambda);

// Deterministic uniform samples of the unit disk (sunflower pattern).
const std::vector<Eigen::Vector2d>& unit_disk_samples();

struct ReadSchedule {
  double rate_per_s = 475.0;
  int reads_per_cycle = 16;  // reads per interrogation cycle (one antenna, one channel)
};

class ReadGenerator {
 public:
  ReadGenerator(const TagGrid& grid, const AntennaArray& array, const ChannelModel& model,
                const ObstructionScene& scene, ReadSchedule schedule);

  std::size_t total_reads() const { return total_; }
  bool done() const { return next_ >= total_; }
  TagRead next();

 private:
  const TagGrid& grid_;
  const AntennaArray& array_;
  const ChannelModel& model_;
  const ObstructionScene& scene_;
  ReadSchedule schedule_;
  std::size_t total_ = 0;
  std::size_t next_ = 0;
  std::mt19937_64 rng_;
  int channel_ = 0;
  long cycle_ = -1;
  long jitter_period_ = -1;
  std::vector<ObstaclePosition> positions_;
  std::vector<double> distances_;  // [antenna * K + tag]
  Point3 plane_origin_;
  double lambda_avg_;
};

std::vector<TagRead> generate_reads(const TagGrid& grid, const AntennaArray& array, const ChannelModel& model,
                                    const ObstructionScene& scene, ReadSchedule schedule);

}  // namespace tomo
