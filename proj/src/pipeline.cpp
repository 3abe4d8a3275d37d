// SPDX-License-Identifier: Apache-2.0

#include "tomo/pipeline.hpp"

#include "tomo/multiperson.hpp"

#include <stdexcept>

namespace tomo {

ImagingMode parse_imaging_mode(const std::string& name) {
  if (name == "analytic") return ImagingMode::kAnalytic;
  if (name == "dnn") return ImagingMode::kDnn;
  throw std::invalid_argument("unknown imaging mode '" + name + "' (expected analytic or dnn)");
}

void check_calibration(const PipelineConfig& config, const CalibrationProfile& profile) {
  const int k = config.layout.grid.size();
  const int a = config.layout.antennas.size();
  const int f = config.channel.channel_count();
  if (profile.num_tags != k || profile.num_antennas != a || profile.num_channels != f) {
    throw std::invalid_argument("calibration does not match the layout: calibration has K=" +
                                std::to_string(profile.num_tags) + ", A=" + std::to_string(profile.num_antennas) +
                                ", F=" + std::to_string(profile.num_channels) + "; layout has K=" + std::to_string(k) +
                                ", A=" + std::to_string(a) + ", F=" + std::to_string(f));
  }
}

Pipeline::Pipeline(const PipelineConfig& config, const CalibrationProfile& profile, ImagingMode mode,
                   const MlpEnsemble* ensemble)
    : config_(config),
      profile_(profile),
      mode_(mode),
      ensemble_(ensemble),
      tracker_(config.tracking.blobs),
      scores_(config.layout.categories.size()) {
  check_calibration(config, profile);
  if (mode_ == ImagingMode::kDnn) {
    if (ensemble_ == nullptr || ensemble_->size() == 0) throw std::invalid_argument("dnn mode needs a trained model");
    if (ensemble_->spec().input_dim() != config.layout.grid.size() ||
        ensemble_->spec().output_dim() != config.layout.reference_plane().size()) {
      throw std::invalid_argument("model dimensions do not match the layout");
    }
  } else {
    analytic_ = std::make_unique<AnalyticImager>(config.layout, config.imaging, profile.sigma_y,
                                                 config.channel.average_wavelength());
  }
}

ImageFrame Pipeline::make_frame(const TickResult& tick) const {
  if (mode_ == ImagingMode::kAnalytic) return analytic_->image(tick.y);
  return image_multiperson(tick.y, *ensemble_, profile_, config_.layout.grid, config_.layout.reference_plane(),
                           config_.window, config_.dnn.max_rss);
}

TickOutcome Pipeline::process(const TickResult& tick) {
  TickOutcome out;
  out.timestamp_s = tick.timestamp_s;
  out.gated = tick.gated;
  const ImagePlane& plane = config_.layout.reference_plane();
  ImageFrame frame(plane.width(), plane.height());
  frame.timestamp_s = tick.timestamp_s;
  if (tick.gated) {
    frame = make_frame(tick);
    frame.timestamp_s = tick.timestamp_s;
    out.frame = frame;
  }
  out.blobs = tracker_.push(frame);
  const std::vector<int> delta =
      update_popularity(out.blobs, config_.layout.categories, config_.tracking.eta2, scores_);
  for (int j = 0; j < static_cast<int>(delta.size()); ++j) {
    if (delta[static_cast<std::size_t>(j)] > 0) out.scored.push_back(config_.layout.categories.category(j).id);
  }
  return out;
}

}  // namespace tomo
