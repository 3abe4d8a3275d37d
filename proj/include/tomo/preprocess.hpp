// SPDX-License-Identifier: Apache-2.0
//
// Read-stream preprocessing: background capture (calibration mode) and the
// per-tick monitoring chain that turns buffered reads into one RSS difference
// vector per antenna.
//
//   smooth -> phase-difference filter -> per-(channel, tag) median
//          -> |calibrated - monitored| -> median over channels -> power gate

#pragma once

#include "tomo/channel_sim.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace tomo {

// Median of a non-empty set; mean of the two middle values for even sizes.
double median_of(std::vector<double> values);

// Moving median (window 5) followed by moving average (window 5). Windows
// shrink symmetrically at the edges.
std::vector<double> smooth(std::span<const double> series);

struct CalibrationProfile {
  int num_antennas = 0;
  int num_channels = 0;
  int num_tags = 0;
  std::vector<Eigen::MatrixXd> rss_cal;    // per antenna, F x K, dBm
  std::vector<Eigen::MatrixXd> phase_cal;  // per antenna, F x K, rad
  Eigen::MatrixXd diff_mean;               // K x A
  Eigen::MatrixXd diff_sigma;              // K x A
  double sigma_y = 0.0;                    // variance of calibration RSS deviations, dB^2

  bool operator==(const CalibrationProfile&) const = default;
};

struct MissingPair {
  int antenna;
  int channel;
  int tag;
};

class CalibrationIncomplete : public std::runtime_error {
 public:
  explicit CalibrationIncomplete(std::vector<MissingPair> missing);
  const std::vector<MissingPair>& missing() const { return missing_; }

 private:
  std::vector<MissingPair> missing_;
};

// Every (antenna, channel, tag) needs at least one read. The per-pair
// deviation statistics are fitted to the individual reads' offsets from the
// calibrated cell value.
CalibrationProfile run_calibration(std::span<const TagRead> stream, int num_tags, int num_antennas,
                                   int num_channels);

void save_calibration(const std::filesystem::path& path, const CalibrationProfile& profile);
CalibrationProfile load_calibration(const std::filesystem::path& path);
std::string calibration_to_json(const CalibrationProfile& profile);
CalibrationProfile calibration_from_json(const std::string& text);

struct MonitorConfig {
  std::size_t buffer_reads = 2000;
  double tick_period_s = 1.0;
  double phase_threshold_rad = kPi / 4.0;
  double power_threshold = 10.0;
};

class MonitorBuffer {
 public:
  explicit MonitorBuffer(std::size_t capacity = 2000) : capacity_(capacity) {}

  void push(const TagRead& read);
  void clear() { reads_.clear(); }
  std::size_t size() const { return reads_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<TagRead>& reads() const { return reads_; }

 private:
  std::size_t capacity_;
  std::deque<TagRead> reads_;
};

enum class CellState : std::uint8_t {
  kMissing,   // no read for the pair in the buffer; calibrated value substituted
  kFiltered,  // reads present, none passed the phase filter; calibrated value substituted
  kObserved,  // median of the surviving smoothed reads
};

struct MonitoredMatrix {
  Eigen::MatrixXd rss;            // F x K
  std::vector<CellState> state;   // F * K, index f * K + k

  CellState at(int f, int k) const { return state[static_cast<std::size_t>(f * rss.cols() + k)]; }
};

MonitoredMatrix tick(const MonitorBuffer& buffer, const CalibrationProfile& profile, int antenna,
                     double phase_threshold_rad = kPi / 4.0);

struct RssDifferenceVector {
  int antenna_id = 0;
  double timestamp_s = 0.0;
  Eigen::VectorXd values;  // K entries, dB, >= 0
};

// Median over channels of |calibrated - monitored|. Channels with no read at
// all for a tag are left out of the median; a tag with no reads gives 0.
RssDifferenceVector freq_median(const CalibrationProfile& profile, const MonitoredMatrix& monitored, int antenna);

double rss_power(const RssDifferenceVector& y);
bool power_gate(const RssDifferenceVector& y, double threshold = 10.0);

struct TickResult {
  double timestamp_s = 0.0;
  std::vector<RssDifferenceVector> y;  // one per antenna
  bool gated = false;                  // true if any antenna passed the power gate
};

// Drives ticks off the read timestamps: tick n covers reads with
// timestamp < n * tick_period_s.
class Monitor {
 public:
  Monitor(const CalibrationProfile& profile, MonitorConfig config = {});

  std::vector<TickResult> feed(const TagRead& read);
  // Emits the pending tick if reads arrived since the last one.
  std::optional<TickResult> finish();

  const MonitorBuffer& buffer() const { return buffer_; }

 private:
  TickResult run_tick(double t) const;

  const CalibrationProfile& profile_;
  MonitorConfig config_;
  MonitorBuffer buffer_;
  long next_tick_ = 1;
  bool pending_ = false;
};

std::vector<TickResult> monitor_stream(std::span<const TagRead> reads, const CalibrationProfile& profile,
                                       MonitorConfig config = {});

}  // namespace tomo
