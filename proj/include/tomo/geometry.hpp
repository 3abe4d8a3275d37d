// SPDX-License-Identifier: Apache-2.0
//
// Physical layout of a tagged shelf: tag mesh, reader antennas, image planes,
// item categories, and the Fresnel-zone geometry shared by the simulator and
// the analytic solver. All lengths are meters.

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace tomo {

using Point3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 2.998e8;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

class TagGrid {
 public:
  // `origin` is the bottom-left tag; rows grow along +y, columns along +x.
  TagGrid(int k_x, int k_y, double spacing_x, double spacing_y, Point3 origin);

  int k_x() const { return k_x_; }
  int k_y() const { return k_y_; }
  int size() const { return k_x_ * k_y_; }
  double spacing_x() const { return spacing_x_; }
  double spacing_y() const { return spacing_y_; }
  const Point3& origin() const { return origin_; }

  // Row-major: index = row * k_x + column.
  int index(int column, int row) const { return row * k_x_ + column; }
  int column_of(int tag) const { return tag % k_x_; }
  int row_of(int tag) const { return tag / k_x_; }

  const Point3& position(int tag) const;
  const std::vector<Point3>& positions() const { return positions_; }

 private:
  int k_x_;
  int k_y_;
  double spacing_x_;
  double spacing_y_;
  Point3 origin_;
  std::vector<Point3> positions_;
};

struct AntennaArray {
  std::vector<Point3> positions;

  int size() const { return static_cast<int>(positions.size()); }
  const Point3& position(int antenna) const;
};

// Voxelized plane parallel to the tag mesh, `z_offset` meters toward the antennas.
// Voxel (u, v) has its center at ((u + 0.5) * pitch_x, (v + 0.5) * pitch_y) in
// plane-local coordinates measured from the bottom-left tag.
class ImagePlane {
 public:
  ImagePlane(const TagGrid& grid, double z_offset, int p_x, int p_y);

  double z_offset() const { return z_offset_; }
  int p_x() const { return p_x_; }
  int p_y() const { return p_y_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int size() const { return width_ * height_; }
  double pitch_x() const { return pitch_x_; }
  double pitch_y() const { return pitch_y_; }
  // World position of the plane-local origin (bottom-left tag projected onto the plane).
  const Point3& origin() const { return origin_; }

  int index(int u, int v) const { return v * width_ + u; }
  const Point3& voxel_center(int j) const { return centers_[static_cast<std::size_t>(j)]; }
  const std::vector<Point3>& voxel_centers() const { return centers_; }

  // Conversions between plane-local meters and continuous voxel coordinates.
  double to_voxel_u(double local_x) const { return local_x / pitch_x_ - 0.5; }
  double to_voxel_v(double local_y) const { return local_y / pitch_y_ - 0.5; }
  double to_local_x(double u) const { return (u + 0.5) * pitch_x_; }
  double to_local_y(double v) const { return (v + 0.5) * pitch_y_; }

 private:
  double z_offset_;
  int p_x_;
  int p_y_;
  int width_;
  int height_;
  double pitch_x_;
  double pitch_y_;
  Point3 origin_;
  std::vector<Point3> centers_;
};

struct Category {
  int id;            // 1-based display id
  int first_column;  // inclusive
  int last_column;   // inclusive
};

class CategoryLayout {
 public:
  CategoryLayout() = default;
  // Centroids are the mean voxel coordinate of the voxel centers spanned by
  // each category's tag columns.
  CategoryLayout(std::vector<Category> categories, const TagGrid& grid, const ImagePlane& plane);

  // `count` categories of `columns_each` consecutive columns, one separator
  // column between neighbours.
  static CategoryLayout with_separators(int count, int columns_each, const TagGrid& grid,
                                        const ImagePlane& plane);

  int size() const { return static_cast<int>(categories_.size()); }
  const std::vector<Category>& categories() const { return categories_; }
  const Category& category(int index) const { return categories_.at(static_cast<std::size_t>(index)); }
  const Eigen::Vector2d& centroid(int index) const { return centroids_.at(static_cast<std::size_t>(index)); }
  // Index of the category with the given 1-based id, or -1.
  int index_of_id(int id) const;

 private:
  std::vector<Category> categories_;
  std::vector<Eigen::Vector2d> centroids_;
};

// Everything the pipeline needs to know about a deployment.
struct Layout {
  TagGrid grid;
  AntennaArray antennas;
  std::vector<ImagePlane> planes;
  CategoryLayout categories;

  const ImagePlane& reference_plane() const { return planes.front(); }

  // 29 x 4 tags at 5 in pitch, two antennas 13.78 ft away and 20 in apart,
  // 5 x 5 voxels per tag gap, image planes at 0.3 m and 0.6 m.
  static Layout standard_shelf();
};

double link_distance(int tag, int antenna, const TagGrid& grid, const AntennaArray& array);

// First-Fresnel-zone radius at a point splitting a link into d1 and d2, scaled by theta0.
double fresnel_width(double theta0, double lambda_avg, double d1, double d2);

bool inside_ellipsoid(const Point3& voxel, const Point3& tag, const Point3& antenna, double theta);

double average_wavelength(double f_low, double f_high);

}  // namespace tomo
