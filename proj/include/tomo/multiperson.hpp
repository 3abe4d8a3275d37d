// SPDX-License-Identifier: Apache-2.0
//
// Moving-window imaging for several people at once. A person only disturbs
// the tag columns near them, so each y vector is split into k_x - k_cw + 1
// windowed variants: columns inside the window keep their measured values,
// all other tags are set to twice their calibration deviation. Each variant
// is imaged by the network and the window images are merged, filtered and
// averaged over antennas.

#pragma once

#include "tomo/dnn.hpp"
#include "tomo/geometry.hpp"
#include "tomo/image_frame.hpp"
#include "tomo/preprocess.hpp"

#include <functional>
#include <random>
#include <vector>

namespace tomo {

// kCovered averages each voxel over the windows whose columns contain it,
// the others over all windows.
enum class WindowMerge { kCovered, kMean, kMedian, kMax };

struct WindowConfig {
  int k_cw = 6;
  int median_kernel = 3;
  int average_kernel = 3;
  WindowMerge merge = WindowMerge::kCovered;
  // Draw outside-window entries as |N(mean, sigma)| instead of 2 sigma.
  bool sample_outside = false;

  void validate(int k_x) const;
};

WindowMerge parse_window_merge(const std::string& name);
std::string to_string(WindowMerge merge);

// Window i keeps tags in columns [i, i + k_cw). `rng` is only used when
// cfg.sample_outside is set.
std::vector<RssDifferenceVector> window_vectors(const RssDifferenceVector& y, const CalibrationProfile& profile,
                                                const TagGrid& grid, const WindowConfig& cfg,
                                                std::mt19937_64* rng = nullptr);

// y value seen with nobody in front of the shelf: 2 sigma for every tag.
RssDifferenceVector quiet_vector(const CalibrationProfile& profile, int antenna);

// Square kernels, windows clipped at the border.
ImageFrame median_filter(const ImageFrame& frame, int kernel);
ImageFrame average_filter(const ImageFrame& frame, int kernel);

// N x windows 0/1 mask: window i covers voxel u when the voxel's column
// position lies in [i - 0.5, i + k_cw - 0.5), the same rule the training
// labels use.
Eigen::MatrixXd window_coverage(const TagGrid& grid, const ImagePlane& plane, int k_cw);

// Stack of window predictions (columns) reduced to one image per voxel.
// kCovered needs the coverage mask.
Eigen::VectorXd merge_windows(const Eigen::MatrixXd& predictions, WindowMerge merge,
                              const Eigen::MatrixXd* coverage = nullptr);

ImageFrame image_multiperson(const std::vector<RssDifferenceVector>& y_per_antenna, const MlpEnsemble& ensemble,
                             const CalibrationProfile& profile, const TagGrid& grid, const ImagePlane& plane,
                             const WindowConfig& cfg, double max_rss);

// Adds every window variant of `y`; `label_for_window(i)` returns the label
// id to pair with window i.
void add_window_samples(TrainingSet& set, const RssDifferenceVector& y, const CalibrationProfile& profile,
                        const TagGrid& grid, const WindowConfig& cfg, double max_rss,
                        const std::function<int(int)>& label_for_window);

}  // namespace tomo
