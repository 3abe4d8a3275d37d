// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace tomo {

// Voxel image, row-major with v = 0 at the bottom of the shelf.
struct ImageFrame {
  int width = 0;
  int height = 0;
  Eigen::VectorXd values;
  double timestamp_s = 0.0;

  ImageFrame() = default;
  ImageFrame(int w, int h) : width(w), height(h), values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w) * h)) {}

  int size() const { return width * height; }
  double& at(int u, int v) { return values[static_cast<Eigen::Index>(v) * width + u]; }
  double at(int u, int v) const { return values[static_cast<Eigen::Index>(v) * width + u]; }
};

// Clamps negatives to zero and scales by the maximum; an all-zero frame stays zero.
void normalize_frame(ImageFrame& frame);

// Binary PGM (P5), 8-bit, round(255 * value), first row is the top of the shelf.
void write_pgm(std::ostream& out, const ImageFrame& frame);
void save_pgm(const std::filesystem::path& path, const ImageFrame& frame);
ImageFrame read_pgm(std::istream& in);

// {"width":..,"height":..,"timestamp_s":..,"values":[[row v=0], [row v=1], ...]}
std::string frame_to_json(const ImageFrame& frame);

}  // namespace tomo
