// SPDX-License-Identifier: Apache-2.0
//
// Blob tracking over reconstructed frames, category popularity, and the
// TPR / FPR / MR evaluation used for labeled runs.

#pragma once

#include "tomo/geometry.hpp"
#include "tomo/image_frame.hpp"

#include <Eigen/Core>

#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tomo {

struct Blob {
  int area = 0;
  int min_u = 0;
  int max_u = 0;
  int min_v = 0;
  int max_v = 0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();  // voxel coordinates
};

struct BlobParams {
  double threshold = 0.1;
  int min_area = 20;
  int buffer_frames = 5;
  int background_frames = 10;
};

// Per-voxel median of equally sized frames.
ImageFrame median_frame(std::span<const ImageFrame> frames);

// Voxels >= threshold form 8-connected components; smaller components than
// min_area are dropped. Blobs come out in raster order of their first voxel.
std::vector<Blob> label_blobs(const ImageFrame& frame, double threshold, int min_area);

// Median of the buffered frames, then thresholding and labeling. Returns no
// blobs until `buffer_frames` frames are available.
std::vector<Blob> detect_blobs(std::span<const ImageFrame> frames, const BlobParams& params = {});

// Learns a background from the first frames (per-voxel mean), subtracts it
// from later frames with clamping at zero, and keeps the rolling buffer.
class BlobTracker {
 public:
  explicit BlobTracker(BlobParams params = {});

  std::vector<Blob> push(const ImageFrame& frame);
  bool background_ready() const { return background_count_ >= params_.background_frames; }
  const std::deque<ImageFrame>& buffer() const { return buffer_; }
  const BlobParams& params() const { return params_; }

 private:
  BlobParams params_;
  std::optional<ImageFrame> background_;
  int background_count_ = 0;
  std::deque<ImageFrame> buffer_;
};

class PopularityScores {
 public:
  explicit PopularityScores(int categories = 0) : counts_(static_cast<std::size_t>(categories), 0) {}

  int size() const { return static_cast<int>(counts_.size()); }
  long count(int index) const { return counts_.at(static_cast<std::size_t>(index)); }
  const std::vector<long>& counts() const { return counts_; }
  void increment(int index) { ++counts_.at(static_cast<std::size_t>(index)); }

 private:
  std::vector<long> counts_;
};

// Indices of the categories whose centroid lies within eta2 voxels of the blob centroid.
std::vector<int> proximate_categories(const Blob& blob, const CategoryLayout& layout, double eta2);

// Every blob credits each proximate category once. Returns the per-category
// increments applied in this call.
std::vector<int> update_popularity(std::span<const Blob> blobs, const CategoryLayout& layout, double eta2,
                                   PopularityScores& scores);

// Ground truth and detections for one evaluation window (category ids).
struct WindowOutcome {
  std::vector<int> tested;
  std::vector<int> scored;
};

struct EvalReport {
  double tpr = 0.0;
  double fpr = 0.0;
  double mr = 1.0;
  int windows = 0;
};

// TPR: windows where every tested category scored. FPR: windows where any
// untested category scored. MR = 1 - TPR.
EvalReport evaluate(std::span<const WindowOutcome> windows);

struct EvalRow {
  std::string scenario;
  int k_cw = 0;
  int training_users = 0;
  double tpr = 0.0;
  double fpr = 0.0;
  double mr = 1.0;
  int windows = 0;
};

void write_report_csv(std::ostream& out, std::span<const EvalRow> rows);
void write_report_table(std::ostream& out, std::span<const EvalRow> rows);

// One JSON object per tick: timestamp, blob centroids and cumulative scores.
std::string score_json_line(double timestamp_s, std::span<const Blob> blobs, const PopularityScores& scores,
                            const CategoryLayout& layout);

}  // namespace tomo
