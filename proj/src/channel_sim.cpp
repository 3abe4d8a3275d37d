// SPDX-License-Identifier: Apache-2.0

#include "tomo/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tomo {
namespace {

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kPhaseFilterOverlap = 0.0625;

}  // namespace

double ChannelModel::wavelength(int channel) const {
  return kSpeedOfLight / subcarriers_hz.at(static_cast<std::size_t>(channel));
}

double ChannelModel::average_wavelength() const {
  if (subcarriers_hz.empty()) throw std::invalid_argument("ChannelModel: no subcarriers");
  const auto [lo, hi] = std::minmax_element(subcarriers_hz.begin(), subcarriers_hz.end());
  return tomo::average_wavelength(*lo, *hi);
}

std::vector<double> ChannelModel::default_subcarriers() {
  std::vector<double> f(50);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 902.75e6 + 0.5e6 * static_cast<double>(i);
  return f;
}

double free_space_rss(const ChannelModel& model, double lambda, double d, double beta) {
  if (!(d > 0.0)) throw std::invalid_argument("free_space_rss: distance must be > 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("free_space_rss: wavelength must be > 0");
  return model.a0_db() + 10.0 * beta * std::log10(lambda / (4.0 * kPi * d));
}

double phase_with_multipath(const ChannelModel& model, double f, double d, double multipath_rad) {
  const double kappa = kTwoPi * f / kSpeedOfLight;
  return wrap_phase(2.0 * kappa * d + multipath_rad + model.cable_phase_offset_rad +
                    model.tag_backscatter_phase_rad);
}

double phase_at(const ChannelModel& model, double f, double d, std::mt19937_64& rng) {
  double jitter = 0.0;
  if (model.multipath_phase_sigma_rad > 0.0) {
    jitter = std::normal_distribution<double>(0.0, model.multipath_phase_sigma_rad)(rng);
  }
  return phase_with_multipath(model, f, d, jitter);
}

std::vector<ObstaclePosition> positions_at(const ObstructionScene& scene, double t) {
  std::vector<ObstaclePosition> out;
  out.reserve(scene.obstacles.size());
  const auto period = static_cast<std::uint64_t>(std::max(0.0, std::floor(t / scene.jitter_period_s)));
  for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
    const Obstacle& ob = scene.obstacles[o];
    ObstaclePosition p{ob.center_x, ob.center_y, t >= ob.start_s && t < ob.end_s};
    if (p.active && ob.jitter_sigma_m > 0.0) {
      std::mt19937_64 rng(splitmix64(scene.seed ^ splitmix64(o * 0x100000001b3ULL + period)));
      std::normal_distribution<double> n(0.0, ob.jitter_sigma_m);
      p.x += n(rng);
      p.y += n(rng);
    }
    out.push_back(p);
  }
  return out;
}

Point3 plane_crossing(const Point3& tag, const Point3& antenna, double plane_z_world) {
  const double dz = antenna.z() - tag.z();
  if (dz == 0.0) return tag;
  const double s = std::clamp((plane_z_world - tag.z()) / dz, 0.0, 1.0);
  return tag + s * (antenna - tag);
}

const std::vector<Eigen::Vector2d>& unit_disk_samples() {
  static const std::vector<Eigen::Vector2d> samples = [] {
    constexpr int kCount = 256;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Eigen::Vector2d> s;
    s.reserve(kCount);
    for (int i = 0; i < kCount; ++i) {
      const double r = std::sqrt((i + 0.5) / kCount);
      const double a = i * golden;
      s.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return s;
  }();
  return samples;
}

LinkObstruction link_obstruction(const ObstructionScene& scene, std::span<const ObstaclePosition> positions,
                                 const Point3& tag, const Point3& antenna, const Point3& plane_origin,
                                 double lambda) {
  LinkObstruction result;
  if (scene.obstacles.empty()) return result;
  const Point3 cross = plane_crossing(tag, antenna, plane_origin.z());
  const double d1 = (cross - tag).norm();
  const double d2 = (antenna - cross).norm();
  if (d1 + d2 <= 0.0) return result;
  const double radius = fresnel_width(1.0, lambda, d1, d2);
  const double cx = cross.x() - plane_origin.x();
  const double cy = cross.y() - plane_origin.y();
  const auto& disk = unit_disk_samples();
  for (std::size_t o = 0; o < scene.obstacles.size() && o < positions.size(); ++o) {
    const ObstaclePosition& p = positions[o];
    if (!p.active) continue;
    const Obstacle& ob = scene.obstacles[o];
    // Cheap reject: disk entirely outside the ellipse's bounding box.
    if (std::abs(cx - p.x) > ob.semi_axis_x + radius || std::abs(cy - p.y) > ob.semi_axis_y + radius) continue;
    int inside = 0;
    for (const auto& s : disk) {
      const double ex = (cx + radius * s.x() - p.x) / ob.semi_axis_x;
      const double ey = (cy + radius * s.y() - p.y) / ob.semi_axis_y;
      if (ex * ex + ey * ey <= 1.0) ++inside;
    }
    const double overlap = static_cast<double>(inside) / static_cast<double>(disk.size());
    result.loss_db += 2.0 * ob.max_loss_db * overlap;
    result.max_overlap = std::max(result.max_overlap, overlap);
  }
  return result;
}

double obstruction_loss(const ObstructionScene& scene, std::span<const ObstaclePosition> positions,
                        const Point3& tag, const Point3& antenna, const ImagePlane& plane, double lambda) {
  return link_obstruction(scene, positions, tag, antenna, plane.origin(), lambda).loss_db;
}

ReadGenerator::ReadGenerator(const TagGrid& grid, const AntennaArray& array, const ChannelModel& model,
                             const ObstructionScene& scene, ReadSchedule schedule)
    : grid_(grid),
      array_(array),
      model_(model),
      scene_(scene),
      schedule_(schedule),
      rng_(scene.seed),
      plane_origin_(grid.origin() + Point3(0.0, 0.0, scene.plane_z_m)),
      lambda_avg_(model.average_wavelength()) {
  if (!(schedule.rate_per_s > 0.0)) throw std::invalid_argument("ReadGenerator: rate must be > 0");
  if (schedule.reads_per_cycle < 1) throw std::invalid_argument("ReadGenerator: reads_per_cycle must be >= 1");
  if (array.size() < 1) throw std::invalid_argument("ReadGenerator: no antennas");
  if (model.channel_count() < 1) throw std::invalid_argument("ReadGenerator: no subcarriers");
  total_ = static_cast<std::size_t>(std::floor(schedule.rate_per_s * std::max(0.0, scene.duration_s) + 1e-9));
  distances_.resize(static_cast<std::size_t>(array.size() * grid.size()));
  for (int a = 0; a < array.size(); ++a) {
    for (int k = 0; k < grid.size(); ++k) {
      distances_[static_cast<std::size_t>(a * grid.size() + k)] = link_distance(k, a, grid, array);
    }
  }
}

TagRead ReadGenerator::next() {
  if (done()) throw std::out_of_range("ReadGenerator: stream exhausted");
  const std::size_t i = next_++;
  TagRead r;
  r.timestamp_s = static_cast<double>(i) / schedule_.rate_per_s;
  const long cycle = static_cast<long>(i / static_cast<std::size_t>(schedule_.reads_per_cycle));
  if (cycle != cycle_) {
    cycle_ = cycle;
    channel_ = std::uniform_int_distribution<int>(0, model_.channel_count() - 1)(rng_);
  }
  r.antenna_id = static_cast<int>(cycle % array_.size());
  r.channel_index = channel_;
  r.tag_id = std::uniform_int_distribution<int>(0, grid_.size() - 1)(rng_);

  const long period = static_cast<long>(std::floor(r.timestamp_s / scene_.jitter_period_s));
  if (period != jitter_period_) {
    jitter_period_ = period;
    positions_ = positions_at(scene_, r.timestamp_s);
  }

  const double d = distances_[static_cast<std::size_t>(r.antenna_id * grid_.size() + r.tag_id)];
  const double lambda = model_.wavelength(r.channel_index);
  const LinkObstruction obs = link_obstruction(scene_, positions_, grid_.position(r.tag_id),
                                               array_.position(r.antenna_id), plane_origin_, lambda_avg_);
  double rss = free_space_rss(model_, lambda, d, model_.baseline_exponent) - obs.loss_db;
  if (model_.noise_sigma_db > 0.0) rss += std::normal_distribution<double>(0.0, model_.noise_sigma_db)(rng_);
  r.rss_dbm = rss;

  const double f = model_.subcarriers_hz[static_cast<std::size_t>(r.channel_index)];
  if (obs.max_overlap > kPhaseFilterOverlap) {
    const double shift = std::uniform_real_distribution<double>(kPi / 4.0, kPi)(rng_);
    r.phase_rad = phase_with_multipath(model_, f, d, shift);
  } else {
    r.phase_rad = phase_at(model_, f, d, rng_);
  }
  return r;
}

std::vector<TagRead> generate_reads(const TagGrid& grid, const AntennaArray& array, const ChannelModel& model,
                                    const ObstructionScene& scene, ReadSchedule schedule) {
  ReadGenerator gen(grid, array, model, scene, schedule);
  std::vector<TagRead> reads;
  reads.reserve(gen.total_reads());
  while (!gen.done()) reads.push_back(gen.next());
  return reads;
}

}  // namespace tomo
