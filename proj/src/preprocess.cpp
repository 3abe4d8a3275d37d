// SPDX-License-Identifier: Apache-2.0

#include "tomo/preprocess.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tomo {
namespace {

using nlohmann::json;

constexpr int kSmoothWindow = 5;

double round6(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

// Mean relative to the first element so that constant windows come back bit-exact.
double window_mean(std::span<const double> v) {
  const double base = v.front();
  double acc = 0.0;
  for (double x : v) acc += x - base;
  return base + acc / static_cast<double>(v.size());
}

struct Sample {
  double rss;
  double phase;
};

// Buckets the reads of one antenna by (channel, tag), keeping timestamp order.
template <typename Range>
std::vector<std::vector<Sample>> bucket(const Range& reads, int antenna, int channels, int tags) {
  std::vector<std::vector<Sample>> cells(static_cast<std::size_t>(channels * tags));
  for (const TagRead& r : reads) {
    if (r.antenna_id != antenna) continue;
    if (r.channel_index < 0 || r.channel_index >= channels || r.tag_id < 0 || r.tag_id >= tags) {
      throw std::out_of_range("read references a channel or tag outside the calibration profile");
    }
    cells[static_cast<std::size_t>(r.channel_index * tags + r.tag_id)].push_back({r.rss_dbm, r.phase_rad});
  }
  return cells;
}

std::pair<std::vector<double>, std::vector<double>> smoothed(const std::vector<Sample>& cell) {
  std::vector<double> rss(cell.size());
  std::vector<double> phase(cell.size());
  for (std::size_t i = 0; i < cell.size(); ++i) {
    rss[i] = cell[i].rss;
    phase[i] = cell[i].phase;
  }
  return {smooth(rss), smooth(phase)};
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(round6(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw std::runtime_error("calibration file: matrix has wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::runtime_error("calibration file: matrix has wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

std::string describe_missing(const std::vector<MissingPair>& missing) {
  std::ostringstream os;
  os << "calibration incomplete: " << missing.size() << " (antenna, channel, tag) pair(s) without reads:";
  const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    os << " (" << missing[i].antenna << "," << missing[i].channel << "," << missing[i].tag << ")";
  }
  if (shown < missing.size()) os << " ...";
  return os.str();
}

}  // namespace

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median_of: empty input");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return lower + 0.5 * (upper - lower);
}

std::vector<double> smooth(std::span<const double> series) {
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  constexpr std::ptrdiff_t half = kSmoothWindow / 2;
  std::vector<double> med(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t h = std::min({half, i, n - 1 - i});
    med[static_cast<std::size_t>(i)] =
        median_of(std::vector<double>(series.begin() + (i - h), series.begin() + (i + h + 1)));
  }
  std::vector<double> out(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t h = std::min({half, i, n - 1 - i});
    out[static_cast<std::size_t>(i)] =
        window_mean(std::span<const double>(med.data() + (i - h), static_cast<std::size_t>(2 * h + 1)));
  }
  return out;
}

CalibrationIncomplete::CalibrationIncomplete(std::vector<MissingPair> missing)
    : std::runtime_error(describe_missing(missing)), missing_(std::move(missing)) {}

CalibrationProfile run_calibration(std::span<const TagRead> stream, int num_tags, int num_antennas,
                                   int num_channels) {
  if (num_tags < 1 || num_antennas < 1 || num_channels < 1) {
    throw std::invalid_argument("run_calibration: dimensions must be positive");
  }
  CalibrationProfile p;
  p.num_antennas = num_antennas;
  p.num_channels = num_channels;
  p.num_tags = num_tags;
  for (const TagRead& r : stream) {
    if (r.antenna_id < 0 || r.antenna_id >= num_antennas) {
      throw std::out_of_range("run_calibration: antenna id outside the layout");
    }
  }
  std::vector<MissingPair> missing;
  for (int a = 0; a < num_antennas; ++a) {
    Eigen::MatrixXd rss(num_channels, num_tags);
    Eigen::MatrixXd phase(num_channels, num_tags);
    const auto cells = bucket(stream, a, num_channels, num_tags);
    for (int f = 0; f < num_channels; ++f) {
      for (int k = 0; k < num_tags; ++k) {
        const auto& cell = cells[static_cast<std::size_t>(f * num_tags + k)];
        if (cell.empty()) {
          missing.push_back({a, f, k});
          rss(f, k) = phase(f, k) = 0.0;
          continue;
        }
        auto [s_rss, s_phase] = smoothed(cell);
        rss(f, k) = median_of(std::move(s_rss));
        phase(f, k) = median_of(std::move(s_phase));
      }
    }
    p.rss_cal.push_back(std::move(rss));
    p.phase_cal.push_back(std::move(phase));
  }
  if (!missing.empty()) throw CalibrationIncomplete(std::move(missing));

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(num_tags, num_antennas);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(num_tags, num_antennas);
  for (const TagRead& r : stream) {
    const double d = r.rss_dbm - p.rss_cal[static_cast<std::size_t>(r.antenna_id)](r.channel_index, r.tag_id);
    sum(r.tag_id, r.antenna_id) += d;
    count(r.tag_id, r.antenna_id) += 1.0;
  }
  p.diff_mean = sum.cwiseQuotient(count);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(num_tags, num_antennas);
  double pooled = 0.0;
  for (const TagRead& r : stream) {
    const double d = r.rss_dbm - p.rss_cal[static_cast<std::size_t>(r.antenna_id)](r.channel_index, r.tag_id);
    const double c = d - p.diff_mean(r.tag_id, r.antenna_id);
    sq(r.tag_id, r.antenna_id) += c * c;
    pooled += d * d;
  }
  p.diff_sigma = sq.cwiseQuotient(count).cwiseSqrt();
  p.sigma_y = stream.empty() ? 0.0 : pooled / static_cast<double>(stream.size());
  return p;
}

std::string calibration_to_json(const CalibrationProfile& p) {
  json j;
  j["num_antennas"] = p.num_antennas;
  j["num_channels"] = p.num_channels;
  j["num_tags"] = p.num_tags;
  j["sigma_y"] = round6(p.sigma_y);
  json rss = json::array();
  json phase = json::array();
  for (int a = 0; a < p.num_antennas; ++a) {
    rss.push_back(matrix_to_json(p.rss_cal[static_cast<std::size_t>(a)]));
    phase.push_back(matrix_to_json(p.phase_cal[static_cast<std::size_t>(a)]));
  }
  j["rss_cal"] = std::move(rss);
  j["phase_cal"] = std::move(phase);
  // Stored antenna-major: [antenna][tag].
  j["diff_mean"] = matrix_to_json(p.diff_mean.transpose());
  j["diff_sigma"] = matrix_to_json(p.diff_sigma.transpose());
  return j.dump(1) + "\n";
}

CalibrationProfile calibration_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    CalibrationProfile p;
    p.num_antennas = j.at("num_antennas").get<int>();
    p.num_channels = j.at("num_channels").get<int>();
    p.num_tags = j.at("num_tags").get<int>();
    if (p.num_antennas < 1 || p.num_channels < 1 || p.num_tags < 1) {
      throw std::runtime_error("calibration file: non-positive dimensions");
    }
    p.sigma_y = j.at("sigma_y").get<double>();
    const json& rss = j.at("rss_cal");
    const json& phase = j.at("phase_cal");
    if (static_cast<int>(rss.size()) != p.num_antennas || static_cast<int>(phase.size()) != p.num_antennas) {
      throw std::runtime_error("calibration file: antenna count mismatch");
    }
    for (int a = 0; a < p.num_antennas; ++a) {
      p.rss_cal.push_back(matrix_from_json(rss[static_cast<std::size_t>(a)], p.num_channels, p.num_tags));
      p.phase_cal.push_back(matrix_from_json(phase[static_cast<std::size_t>(a)], p.num_channels, p.num_tags));
    }
    p.diff_mean = matrix_from_json(j.at("diff_mean"), p.num_antennas, p.num_tags).transpose();
    p.diff_sigma = matrix_from_json(j.at("diff_sigma"), p.num_antennas, p.num_tags).transpose();
    return p;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("calibration file: ") + e.what());
  }
}

void save_calibration(const std::filesystem::path& path, const CalibrationProfile& profile) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << calibration_to_json(profile);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CalibrationProfile load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open calibration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return calibration_from_json(ss.str());
}

void MonitorBuffer::push(const TagRead& read) {
  reads_.push_back(read);
  while (reads_.size() > capacity_) reads_.pop_front();
}

MonitoredMatrix tick(const MonitorBuffer& buffer, const CalibrationProfile& profile, int antenna,
                     double phase_threshold_rad) {
  if (antenna < 0 || antenna >= profile.num_antennas) throw std::out_of_range("tick: antenna out of range");
  const int F = profile.num_channels;
  const int K = profile.num_tags;
  const Eigen::MatrixXd& rss_cal = profile.rss_cal[static_cast<std::size_t>(antenna)];
  const Eigen::MatrixXd& phase_cal = profile.phase_cal[static_cast<std::size_t>(antenna)];
  MonitoredMatrix m{rss_cal, std::vector<CellState>(static_cast<std::size_t>(F * K), CellState::kMissing)};
  const auto cells = bucket(buffer.reads(), antenna, F, K);
  for (int f = 0; f < F; ++f) {
    for (int k = 0; k < K; ++k) {
      const auto& cell = cells[static_cast<std::size_t>(f * K + k)];
      if (cell.empty()) continue;
      const auto [s_rss, s_phase] = smoothed(cell);
      std::vector<double> survivors;
      for (std::size_t i = 0; i < s_rss.size(); ++i) {
        // Raw difference: phase wraps are not unwrapped.
        if (std::abs(s_phase[i] - phase_cal(f, k)) >= phase_threshold_rad) survivors.push_back(s_rss[i]);
      }
      auto& state = m.state[static_cast<std::size_t>(f * K + k)];
      if (survivors.empty()) {
        state = CellState::kFiltered;
      } else {
        state = CellState::kObserved;
        m.rss(f, k) = median_of(std::move(survivors));
      }
    }
  }
  return m;
}

RssDifferenceVector freq_median(const CalibrationProfile& profile, const MonitoredMatrix& monitored, int antenna) {
  const Eigen::MatrixXd& cal = profile.rss_cal.at(static_cast<std::size_t>(antenna));
  if (cal.rows() != monitored.rss.rows() || cal.cols() != monitored.rss.cols()) {
    throw std::invalid_argument("freq_median: matrix shapes differ");
  }
  const bool has_state = monitored.state.size() == static_cast<std::size_t>(cal.size());
  RssDifferenceVector y;
  y.antenna_id = antenna;
  y.values = Eigen::VectorXd::Zero(cal.cols());
  std::vector<double> diffs;
  for (Eigen::Index k = 0; k < cal.cols(); ++k) {
    diffs.clear();
    for (Eigen::Index f = 0; f < cal.rows(); ++f) {
      if (has_state && monitored.at(static_cast<int>(f), static_cast<int>(k)) == CellState::kMissing) continue;
      diffs.push_back(std::abs(cal(f, k) - monitored.rss(f, k)));
    }
    if (!diffs.empty()) y.values[k] = median_of(diffs);
  }
  return y;
}

double rss_power(const RssDifferenceVector& y) { return y.values.squaredNorm(); }

bool power_gate(const RssDifferenceVector& y, double threshold) { return rss_power(y) >= threshold; }

Monitor::Monitor(const CalibrationProfile& profile, MonitorConfig config)
    : profile_(profile), config_(config), buffer_(config.buffer_reads) {
  if (!(config.tick_period_s > 0.0)) throw std::invalid_argument("Monitor: tick period must be > 0");
}

TickResult Monitor::run_tick(double t) const {
  TickResult out;
  out.timestamp_s = t;
  for (int a = 0; a < profile_.num_antennas; ++a) {
    RssDifferenceVector y = freq_median(profile_, tick(buffer_, profile_, a, config_.phase_threshold_rad), a);
    y.timestamp_s = t;
    out.gated = out.gated || power_gate(y, config_.power_threshold);
    out.y.push_back(std::move(y));
  }
  return out;
}

std::vector<TickResult> Monitor::feed(const TagRead& read) {
  std::vector<TickResult> out;
  while (read.timestamp_s >= static_cast<double>(next_tick_) * config_.tick_period_s) {
    out.push_back(run_tick(static_cast<double>(next_tick_) * config_.tick_period_s));
    ++next_tick_;
    pending_ = false;
  }
  buffer_.push(read);
  pending_ = true;
  return out;
}

std::optional<TickResult> Monitor::finish() {
  if (!pending_) return std::nullopt;
  pending_ = false;
  TickResult r = run_tick(static_cast<double>(next_tick_) * config_.tick_period_s);
  ++next_tick_;
  return r;
}

std::vector<TickResult> monitor_stream(std::span<const TagRead> reads, const CalibrationProfile& profile,
                                       MonitorConfig config) {
  Monitor monitor(profile, config);
  std::vector<TickResult> ticks;
  for (const TagRead& r : reads) {
    for (auto& t : monitor.feed(r)) ticks.push_back(std::move(t));
  }
  if (auto last = monitor.finish()) ticks.push_back(std::move(*last));
  return ticks;
}

}  // namespace tomo
