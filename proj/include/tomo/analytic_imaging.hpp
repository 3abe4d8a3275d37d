// SPDX-License-Identifier: Apache-2.0
//
// Regularized least-squares imaging. Each link's weight row is nonzero inside
// its Fresnel ellipsoid, with the distance exponent shifted by the observed
// change in path-loss exponent; the image solves
//
//   (W^T W + sigma_N C_x^-1 + alpha (D_X^T D_X + D_Y^T D_Y)) x = W^T y
//
// per antenna and per image plane, then averages planes and antennas.

#pragma once

#include "tomo/geometry.hpp"
#include "tomo/image_frame.hpp"
#include "tomo/preprocess.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <vector>

namespace tomo {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ImagingParams {
  double alpha = 15.0;
  double theta0 = 1.0;
  double c_n = 1.0;
  double c_x = 1.0;
  double delta_vox = 3.0;  // correlation length in voxel pitches
};

// Change in path-loss exponent implied by an RSS change of y_db on a link of length d.
double delta_beta(double y_db, double lambda_avg, double d);

struct WeightMatrix {
  Eigen::MatrixXd entries;  // M x N
  double theta0 = 1.0;
  Eigen::VectorXd delta_beta;  // per link
};

WeightMatrix build_weights(const TagGrid& grid, const Point3& antenna, const ImagePlane& plane,
                           const Eigen::VectorXd& y, double theta0, double lambda_avg);

using SparseMatrix = Eigen::SparseMatrix<double>;

// Forward differences on a width x height row-major grid; rows at the right
// (for X) and top (for Y) boundary are zero.
SparseMatrix forward_difference_x(int width, int height);
SparseMatrix forward_difference_y(int width, int height);

class PriorSet {
 public:
  // `corr` is C_x; it is inverted once (after adding 1e-8 I) when sigma_n > 0.
  PriorSet(double alpha, SparseMatrix diff_x, SparseMatrix diff_y, Eigen::MatrixXd corr, double sigma_n);

  // Exponential correlation over voxel distances: C_x = (sigma_x / delta) exp(-D_p / delta)
  // with sigma_N = c_n sigma_y and sigma_x = c_x sigma_y.
  static PriorSet for_plane(const ImagePlane& plane, const ImagingParams& params, double sigma_y);

  double alpha() const { return alpha_; }
  double sigma_n() const { return sigma_n_; }
  const SparseMatrix& diff_x() const { return diff_x_; }
  const SparseMatrix& diff_y() const { return diff_y_; }
  const Eigen::MatrixXd& corr() const { return corr_; }
  int size() const { return static_cast<int>(corr_.rows()); }

  // sigma_N C_x^-1 + alpha (D_X^T D_X + D_Y^T D_Y)
  const Eigen::MatrixXd& regularizer() const { return regularizer_; }

 private:
  double alpha_;
  double sigma_n_;
  SparseMatrix diff_x_;
  SparseMatrix diff_y_;
  Eigen::MatrixXd corr_;
  Eigen::MatrixXd regularizer_;
};

// W^T W + regularizer.
Eigen::MatrixXd normal_matrix(const Eigen::MatrixXd& w, const PriorSet& priors);

// Cholesky solve of the regularized normal equations.
Eigen::VectorXd solve(const Eigen::VectorXd& y, const Eigen::MatrixXd& w, const PriorSet& priors);

// `priors` holds one entry per plane. Planes are averaged, then antennas;
// negatives are clamped and the frame is scaled to a peak of 1.
ImageFrame image(const TagGrid& grid, const AntennaArray& array, const std::vector<ImagePlane>& planes,
                 const std::vector<RssDifferenceVector>& y_per_antenna, const std::vector<PriorSet>& priors,
                 double theta0, double lambda_avg);

// Caches the per-plane priors for a layout.
class AnalyticImager {
 public:
  AnalyticImager(const Layout& layout, const ImagingParams& params, double sigma_y, double lambda_avg);

  ImageFrame image(const std::vector<RssDifferenceVector>& y_per_antenna) const;

 private:
  const Layout& layout_;
  ImagingParams params_;
  double lambda_avg_;
  std::vector<PriorSet> priors_;
};

}  // namespace tomo
