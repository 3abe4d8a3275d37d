// SPDX-License-Identifier: Apache-2.0

#include "tomo/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace tomo {

TagGrid::TagGrid(int k_x, int k_y, double spacing_x, double spacing_y, Point3 origin)
    : k_x_(k_x), k_y_(k_y), spacing_x_(spacing_x), spacing_y_(spacing_y), origin_(std::move(origin)) {
  if (k_x < 1 || k_y < 1) throw std::invalid_argument("TagGrid: k_x and k_y must be >= 1");
  if (!(spacing_x > 0.0) || !(spacing_y > 0.0)) throw std::invalid_argument("TagGrid: spacing must be > 0");
  positions_.reserve(static_cast<std::size_t>(k_x) * static_cast<std::size_t>(k_y));
  for (int row = 0; row < k_y; ++row) {
    for (int col = 0; col < k_x; ++col) {
      positions_.push_back(origin_ + Point3(col * spacing_x, row * spacing_y, 0.0));
    }
  }
}

const Point3& TagGrid::position(int tag) const {
  if (tag < 0 || tag >= size()) throw std::out_of_range("TagGrid: tag index out of range");
  return positions_[static_cast<std::size_t>(tag)];
}

const Point3& AntennaArray::position(int antenna) const {
  if (antenna < 0 || antenna >= size()) throw std::out_of_range("AntennaArray: antenna index out of range");
  return positions[static_cast<std::size_t>(antenna)];
}

ImagePlane::ImagePlane(const TagGrid& grid, double z_offset, int p_x, int p_y)
    : z_offset_(z_offset),
      p_x_(p_x),
      p_y_(p_y),
      width_(p_x * (grid.k_x() - 1)),
      height_(p_y * (grid.k_y() - 1)),
      pitch_x_(grid.spacing_x() / p_x),
      pitch_y_(grid.spacing_y() / p_y),
      origin_(grid.origin() + Point3(0.0, 0.0, z_offset)) {
  if (p_x < 1 || p_y < 1) throw std::invalid_argument("ImagePlane: p_x and p_y must be >= 1");
  if (grid.k_x() < 2 || grid.k_y() < 2) throw std::invalid_argument("ImagePlane: needs at least 2x2 tags");
  if (z_offset < 0.0) throw std::invalid_argument("ImagePlane: z_offset must be >= 0");
  centers_.reserve(static_cast<std::size_t>(size()));
  for (int v = 0; v < height_; ++v) {
    for (int u = 0; u < width_; ++u) {
      centers_.push_back(origin_ + Point3(to_local_x(u), to_local_y(v), 0.0));
    }
  }
}

CategoryLayout::CategoryLayout(std::vector<Category> categories, const TagGrid& grid, const ImagePlane& plane)
    : categories_(std::move(categories)) {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    const Category& c = categories_[i];
    if (c.first_column < 0 || c.last_column >= grid.k_x() || c.first_column > c.last_column) {
      throw std::invalid_argument("CategoryLayout: column range outside the tag grid");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const Category& o = categories_[j];
      if (c.first_column <= o.last_column && o.first_column <= c.last_column) {
        throw std::invalid_argument("CategoryLayout: overlapping column ranges");
      }
    }
    const double x_lo = c.first_column * grid.spacing_x();
    const double x_hi = c.last_column * grid.spacing_x();
    double sum_u = 0.0;
    double sum_v = 0.0;
    int count = 0;
    for (int v = 0; v < plane.height(); ++v) {
      for (int u = 0; u < plane.width(); ++u) {
        const double x = plane.to_local_x(u);
        if (x >= x_lo && x <= x_hi) {
          sum_u += u;
          sum_v += v;
          ++count;
        }
      }
    }
    if (count == 0) {
      // Single-column category: no voxel center falls strictly inside the span.
      centroids_.emplace_back(plane.to_voxel_u(x_lo), (plane.height() - 1) / 2.0);
    } else {
      centroids_.emplace_back(sum_u / count, sum_v / count);
    }
  }
}

CategoryLayout CategoryLayout::with_separators(int count, int columns_each, const TagGrid& grid,
                                               const ImagePlane& plane) {
  std::vector<Category> cats;
  for (int i = 0; i < count; ++i) {
    const int first = i * (columns_each + 1);
    cats.push_back({i + 1, first, first + columns_each - 1});
  }
  return CategoryLayout(std::move(cats), grid, plane);
}

int CategoryLayout::index_of_id(int id) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

Layout Layout::standard_shelf() {
  constexpr double kInch = 0.0254;
  const double spacing = 5.0 * kInch;      // 0.127 m
  const double tag_height = 1.372;         // 4.5 ft
  const double antenna_distance = 4.2;     // 13.78 ft
  const double antenna_gap = 20.0 * kInch; // 0.508 m
  TagGrid grid(29, 4, spacing, spacing, Point3(0.0, tag_height, 0.0));
  const double center_x = 0.5 * (grid.k_x() - 1) * spacing;
  AntennaArray antennas{{Point3(center_x - 0.5 * antenna_gap, tag_height, antenna_distance),
                         Point3(center_x + 0.5 * antenna_gap, tag_height, antenna_distance)}};
  std::vector<ImagePlane> planes{ImagePlane(grid, 0.3, 5, 5), ImagePlane(grid, 0.6, 5, 5)};
  CategoryLayout cats = CategoryLayout::with_separators(6, 4, grid, planes.front());
  return Layout{std::move(grid), std::move(antennas), std::move(planes), std::move(cats)};
}

double link_distance(int tag, int antenna, const TagGrid& grid, const AntennaArray& array) {
  return (grid.position(tag) - array.position(antenna)).norm();
}

double fresnel_width(double theta0, double lambda_avg, double d1, double d2) {
  if (d1 < 0.0 || d2 < 0.0) throw std::invalid_argument("fresnel_width: negative distance");
  const double sum = d1 + d2;
  if (sum <= 0.0) throw std::invalid_argument("fresnel_width: d1 + d2 must be > 0");
  return theta0 * std::sqrt(lambda_avg * d1 * d2 / sum);
}

bool inside_ellipsoid(const Point3& voxel, const Point3& tag, const Point3& antenna, double theta) {
  const double path = (voxel - tag).norm() + (voxel - antenna).norm();
  return path < (tag - antenna).norm() + theta;
}

double average_wavelength(double f_low, double f_high) {
  if (!(f_low > 0.0) || !(f_high > 0.0)) throw std::invalid_argument("average_wavelength: frequency must be > 0");
  if (f_low > f_high) throw std::invalid_argument("average_wavelength: f_low > f_high");
  return kSpeedOfLight / (0.5 * (f_low + f_high));
}

}  // namespace tomo
