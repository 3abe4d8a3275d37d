// SPDX-License-Identifier: Apache-2.0
//
// Per-tick driver: monitor output -> image (analytic or network) -> blob
// tracker -> category popularity.

#pragma once

#include "tomo/analytic_imaging.hpp"
#include "tomo/dnn.hpp"
#include "tomo/layout_config.hpp"
#include "tomo/tracking.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tomo {

enum class ImagingMode { kAnalytic, kDnn };

ImagingMode parse_imaging_mode(const std::string& name);

struct TickOutcome {
  double timestamp_s = 0.0;
  bool gated = false;
  std::optional<ImageFrame> frame;  // set for gated ticks
  std::vector<Blob> blobs;
  std::vector<int> scored;  // category ids credited this tick
};

// Throws std::invalid_argument when the calibration was taken with a
// different tag, antenna or channel count than the configuration.
void check_calibration(const PipelineConfig& config, const CalibrationProfile& profile);

class Pipeline {
 public:
  // `ensemble` is required for kDnn and must outlive the pipeline.
  Pipeline(const PipelineConfig& config, const CalibrationProfile& profile, ImagingMode mode,
           const MlpEnsemble* ensemble = nullptr);

  // Ticks that fail the power gate feed a blank frame to the tracker.
  TickOutcome process(const TickResult& tick);

  const PopularityScores& scores() const { return scores_; }

 private:
  ImageFrame make_frame(const TickResult& tick) const;

  const PipelineConfig& config_;
  const CalibrationProfile& profile_;
  ImagingMode mode_;
  const MlpEnsemble* ensemble_;
  std::unique_ptr<AnalyticImager> analytic_;
  BlobTracker tracker_;
  PopularityScores scores_;
};

}  // namespace tomo
