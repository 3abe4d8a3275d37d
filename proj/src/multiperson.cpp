// SPDX-License-Identifier: Apache-2.0

#include "tomo/multiperson.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tomo {
namespace {

void check_kernel(int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("filter kernel must be odd and >= 1");
}

void check_stats(const CalibrationProfile& profile, int antenna, int num_tags) {
  if (antenna < 0 || antenna >= profile.num_antennas || profile.diff_sigma.cols() <= antenna ||
      profile.diff_sigma.rows() != num_tags) {
    throw std::invalid_argument("calibration has no deviation statistics for this antenna and tag set");
  }
}

}  // namespace

void WindowConfig::validate(int k_x) const {
  if (k_cw < 1 || k_cw > k_x) throw std::invalid_argument("WindowConfig: k_cw must be in [1, k_x]");
  check_kernel(median_kernel);
  check_kernel(average_kernel);
}

WindowMerge parse_window_merge(const std::string& name) {
  if (name == "covered") return WindowMerge::kCovered;
  if (name == "mean") return WindowMerge::kMean;
  if (name == "median") return WindowMerge::kMedian;
  if (name == "max") return WindowMerge::kMax;
  throw std::invalid_argument("unknown window merge '" + name + "' (expected covered, mean, median or max)");
}

std::string to_string(WindowMerge merge) {
  switch (merge) {
    case WindowMerge::kCovered:
      return "covered";
    case WindowMerge::kMean:
      return "mean";
    case WindowMerge::kMedian:
      return "median";
    case WindowMerge::kMax:
      return "max";
  }
  return "mean";
}

std::vector<RssDifferenceVector> window_vectors(const RssDifferenceVector& y, const CalibrationProfile& profile,
                                                const TagGrid& grid, const WindowConfig& cfg,
                                                std::mt19937_64* rng) {
  cfg.validate(grid.k_x());
  if (y.values.size() != grid.size()) throw std::invalid_argument("window_vectors: y length must equal the tag count");
  check_stats(profile, y.antenna_id, grid.size());
  if (cfg.sample_outside && rng == nullptr) throw std::invalid_argument("window_vectors: sampling needs an rng");
  const int count = grid.k_x() - cfg.k_cw + 1;
  std::vector<RssDifferenceVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    RssDifferenceVector w;
    w.antenna_id = y.antenna_id;
    w.timestamp_s = y.timestamp_s;
    w.values.resize(grid.size());
    for (int k = 0; k < grid.size(); ++k) {
      const int col = grid.column_of(k);
      if (col >= i && col < i + cfg.k_cw) {
        w.values[k] = y.values[k];
      } else if (cfg.sample_outside) {
        std::normal_distribution<double> noise(profile.diff_mean(k, y.antenna_id), profile.diff_sigma(k, y.antenna_id));
        w.values[k] = std::abs(noise(*rng));
      } else {
        w.values[k] = 2.0 * profile.diff_sigma(k, y.antenna_id);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

RssDifferenceVector quiet_vector(const CalibrationProfile& profile, int antenna) {
  check_stats(profile, antenna, profile.num_tags);
  RssDifferenceVector y;
  y.antenna_id = antenna;
  y.values = 2.0 * profile.diff_sigma.col(antenna);
  return y;
}

ImageFrame median_filter(const ImageFrame& frame, int kernel) {
  check_kernel(kernel);
  const int r = kernel / 2;
  ImageFrame out(frame.width, frame.height);
  out.timestamp_s = frame.timestamp_s;
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>(kernel * kernel));
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      window.clear();
      for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
          const int uu = u + du;
          const int vv = v + dv;
          if (uu >= 0 && uu < frame.width && vv >= 0 && vv < frame.height) window.push_back(frame.at(uu, vv));
        }
      }
      out.at(u, v) = median_of(window);
    }
  }
  return out;
}

ImageFrame average_filter(const ImageFrame& frame, int kernel) {
  check_kernel(kernel);
  const int r = kernel / 2;
  ImageFrame out(frame.width, frame.height);
  out.timestamp_s = frame.timestamp_s;
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      double sum = 0.0;
      int n = 0;
      for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
          const int uu = u + du;
          const int vv = v + dv;
          if (uu >= 0 && uu < frame.width && vv >= 0 && vv < frame.height) {
            sum += frame.at(uu, vv);
            ++n;
          }
        }
      }
      out.at(u, v) = sum / n;
    }
  }
  return out;
}

Eigen::MatrixXd window_coverage(const TagGrid& grid, const ImagePlane& plane, int k_cw) {
  const int count = grid.k_x() - k_cw + 1;
  if (k_cw < 1 || count < 1) throw std::invalid_argument("window_coverage: k_cw out of range");
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(plane.size(), count);
  for (int u = 0; u < plane.width(); ++u) {
    const double col = plane.to_local_x(u) / grid.spacing_x();
    for (int i = 0; i < count; ++i) {
      if (col < i - 0.5 || col >= i + k_cw - 0.5) continue;
      for (int v = 0; v < plane.height(); ++v) mask(plane.index(u, v), i) = 1.0;
    }
  }
  return mask;
}

Eigen::VectorXd merge_windows(const Eigen::MatrixXd& predictions, WindowMerge merge, const Eigen::MatrixXd* coverage) {
  if (predictions.cols() == 0) throw std::invalid_argument("merge_windows: no window predictions");
  switch (merge) {
    case WindowMerge::kCovered: {
      if (coverage == nullptr || coverage->rows() != predictions.rows() || coverage->cols() != predictions.cols()) {
        throw std::invalid_argument("merge_windows: covered merge needs a matching coverage mask");
      }
      const Eigen::VectorXd n = coverage->rowwise().sum();
      return (predictions.cwiseProduct(*coverage).rowwise().sum().array() / n.array().max(1.0)).matrix();
    }
    case WindowMerge::kMean:
      return predictions.rowwise().mean();
    case WindowMerge::kMax:
      return predictions.rowwise().maxCoeff();
    case WindowMerge::kMedian: {
      Eigen::VectorXd out(predictions.rows());
      std::vector<double> row(static_cast<std::size_t>(predictions.cols()));
      for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
        for (Eigen::Index c = 0; c < predictions.cols(); ++c) row[static_cast<std::size_t>(c)] = predictions(r, c);
        out[r] = median_of(row);
      }
      return out;
    }
  }
  throw std::invalid_argument("merge_windows: unknown merge");
}

ImageFrame image_multiperson(const std::vector<RssDifferenceVector>& y_per_antenna, const MlpEnsemble& ensemble,
                             const CalibrationProfile& profile, const TagGrid& grid, const ImagePlane& plane,
                             const WindowConfig& cfg, double max_rss) {
  if (y_per_antenna.empty()) throw std::invalid_argument("image_multiperson: need at least one antenna");
  ImageFrame frame(plane.width(), plane.height());
  Eigen::MatrixXd coverage;
  if (cfg.merge == WindowMerge::kCovered) coverage = window_coverage(grid, plane, cfg.k_cw);
  std::mt19937_64 rng(0);
  for (const RssDifferenceVector& y : y_per_antenna) {
    if (cfg.sample_outside) rng.seed(static_cast<std::uint64_t>(std::llround(y.timestamp_s * 1000.0)) * 31u +
                                     static_cast<std::uint64_t>(y.antenna_id));
    const std::vector<RssDifferenceVector> windows = window_vectors(y, profile, grid, cfg, &rng);
    Eigen::MatrixXd inputs(grid.size(), static_cast<Eigen::Index>(windows.size()));
    for (std::size_t i = 0; i < windows.size(); ++i) {
      inputs.col(static_cast<Eigen::Index>(i)) = normalize_input(windows[i].values, max_rss);
    }
    const Eigen::MatrixXd predictions = ensemble.predict_batch(inputs);
    if (predictions.rows() != frame.size()) {
      throw std::invalid_argument("image_multiperson: network output does not match the image plane");
    }
    ImageFrame merged(plane.width(), plane.height());
    merged.values = merge_windows(predictions, cfg.merge, &coverage);
    frame.values += average_filter(median_filter(merged, cfg.median_kernel), cfg.average_kernel).values;
  }
  frame.values /= static_cast<double>(y_per_antenna.size());
  frame.timestamp_s = y_per_antenna.front().timestamp_s;
  normalize_frame(frame);
  return frame;
}

void add_window_samples(TrainingSet& set, const RssDifferenceVector& y, const CalibrationProfile& profile,
                        const TagGrid& grid, const WindowConfig& cfg, double max_rss,
                        const std::function<int(int)>& label_for_window) {
  const std::vector<RssDifferenceVector> windows = window_vectors(y, profile, grid, cfg);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    set.add(normalize_input(windows[i].values, max_rss), label_for_window(static_cast<int>(i)));
  }
}

}  // namespace tomo
