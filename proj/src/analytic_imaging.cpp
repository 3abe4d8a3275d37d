// SPDX-License-Identifier: Apache-2.0

#include "tomo/analytic_imaging.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>

namespace tomo {
namespace {

constexpr double kCorrConditioning = 1e-8;

SparseMatrix forward_difference(int width, int height, int du, int dv) {
  const int n = width * height;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(2 * n));
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const int u2 = u + du;
      const int v2 = v + dv;
      if (u2 >= width || v2 >= height) continue;
      const int row = v * width + u;
      t.emplace_back(row, row, -1.0);
      t.emplace_back(row, v2 * width + u2, 1.0);
    }
  }
  SparseMatrix d(n, n);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

}  // namespace

double delta_beta(double y_db, double lambda_avg, double d) {
  if (!(d > 0.0)) throw GeometryError("delta_beta: link distance must be > 0");
  const double log_term = 10.0 * std::log10(lambda_avg / (4.0 * kPi * d));
  if (std::abs(log_term) < 1e-12) throw GeometryError("delta_beta: singular geometry (d = lambda / 4 pi)");
  return y_db / log_term;
}

WeightMatrix build_weights(const TagGrid& grid, const Point3& antenna, const ImagePlane& plane,
                           const Eigen::VectorXd& y, double theta0, double lambda_avg) {
  const int m = grid.size();
  const int n = plane.size();
  if (y.size() != m) throw std::invalid_argument("build_weights: y length must equal the tag count");
  WeightMatrix w;
  w.theta0 = theta0;
  w.entries = Eigen::MatrixXd::Zero(m, n);
  w.delta_beta.resize(m);
  for (int k = 0; k < m; ++k) {
    const Point3& tag = grid.position(k);
    const double d = (tag - antenna).norm();
    const double db = delta_beta(y[k], lambda_avg, d);
    w.delta_beta[k] = db;
    const double weight = std::pow(d, -(4.0 - db));
    for (int j = 0; j < n; ++j) {
      const Point3& voxel = plane.voxel_center(j);
      const double d1 = (voxel - tag).norm();
      const double d2 = (voxel - antenna).norm();
      const double theta = fresnel_width(theta0, lambda_avg, d1, d2);
      if (d1 + d2 < d + theta) w.entries(k, j) = weight;
    }
  }
  return w;
}

SparseMatrix forward_difference_x(int width, int height) { return forward_difference(width, height, 1, 0); }
SparseMatrix forward_difference_y(int width, int height) { return forward_difference(width, height, 0, 1); }

PriorSet::PriorSet(double alpha, SparseMatrix diff_x, SparseMatrix diff_y, Eigen::MatrixXd corr, double sigma_n)
    : alpha_(alpha), sigma_n_(sigma_n), diff_x_(std::move(diff_x)), diff_y_(std::move(diff_y)), corr_(std::move(corr)) {
  if (alpha < 0.0) throw std::invalid_argument("PriorSet: alpha must be >= 0");
  if (sigma_n < 0.0) throw std::invalid_argument("PriorSet: sigma_n must be >= 0");
  const Eigen::Index n = corr_.rows();
  if (corr_.cols() != n || diff_x_.rows() != n || diff_x_.cols() != n || diff_y_.rows() != n || diff_y_.cols() != n) {
    throw std::invalid_argument("PriorSet: operator dimensions disagree");
  }
  const SparseMatrix smooth = SparseMatrix(diff_x_.transpose() * diff_x_) + SparseMatrix(diff_y_.transpose() * diff_y_);
  regularizer_ = alpha_ * Eigen::MatrixXd(smooth);
  if (sigma_n_ > 0.0) {
    Eigen::MatrixXd conditioned = corr_;
    conditioned.diagonal().array() += kCorrConditioning;
    Eigen::LLT<Eigen::MatrixXd> llt(conditioned);
    if (llt.info() != Eigen::Success) throw SolverError("PriorSet: spatial correlation is not positive definite");
    regularizer_.noalias() += sigma_n_ * llt.solve(Eigen::MatrixXd::Identity(n, n));
    // Symmetrize away round-off from the triangular solves.
    regularizer_ = 0.5 * (regularizer_ + regularizer_.transpose()).eval();
  }
}

PriorSet PriorSet::for_plane(const ImagePlane& plane, const ImagingParams& params, double sigma_y) {
  if (!(params.delta_vox > 0.0)) throw std::invalid_argument("PriorSet: delta must be > 0");
  const int w = plane.width();
  const int h = plane.height();
  const int n = w * h;
  const double sigma_n = params.c_n * sigma_y;
  const double sigma_x = params.c_x * sigma_y;
  Eigen::MatrixXd corr(n, n);
  for (int a = 0; a < n; ++a) {
    const double ua = a % w;
    const double va = a / w;
    for (int b = 0; b < n; ++b) {
      const double du = ua - b % w;
      const double dv = va - b / w;
      corr(a, b) = std::exp(-std::sqrt(du * du + dv * dv) / params.delta_vox);
    }
  }
  if (sigma_n > 0.0 && !(sigma_x > 0.0)) throw std::invalid_argument("PriorSet: sigma_x must be > 0");
  corr *= (sigma_x > 0.0 ? sigma_x : 1.0) / params.delta_vox;
  return PriorSet(params.alpha, forward_difference_x(w, h), forward_difference_y(w, h), std::move(corr), sigma_n);
}

Eigen::MatrixXd normal_matrix(const Eigen::MatrixXd& w, const PriorSet& priors) {
  if (w.cols() != priors.size()) throw std::invalid_argument("normal_matrix: W has the wrong number of columns");
  Eigen::MatrixXd a = priors.regularizer();
  a.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  return a;
}

Eigen::VectorXd solve(const Eigen::VectorXd& y, const Eigen::MatrixXd& w, const PriorSet& priors) {
  if (y.size() != w.rows()) throw std::invalid_argument("solve: y length must equal the number of links");
  const Eigen::LLT<Eigen::MatrixXd> llt(normal_matrix(w, priors));
  if (llt.info() != Eigen::Success) throw SolverError("solve: regularized normal matrix is not positive definite");
  return llt.solve(w.transpose() * y);
}

ImageFrame image(const TagGrid& grid, const AntennaArray& array, const std::vector<ImagePlane>& planes,
                 const std::vector<RssDifferenceVector>& y_per_antenna, const std::vector<PriorSet>& priors,
                 double theta0, double lambda_avg) {
  if (planes.empty()) throw std::invalid_argument("image: at least one image plane is required");
  if (array.size() < 1 || static_cast<int>(y_per_antenna.size()) != array.size()) {
    throw std::invalid_argument("image: need one RSS difference vector per antenna");
  }
  if (priors.size() != planes.size()) throw std::invalid_argument("image: need one prior set per plane");
  ImageFrame frame(planes.front().width(), planes.front().height());
  for (int a = 0; a < array.size(); ++a) {
    const Eigen::VectorXd& y = y_per_antenna[static_cast<std::size_t>(a)].values;
    Eigen::VectorXd per_antenna = Eigen::VectorXd::Zero(frame.size());
    for (std::size_t p = 0; p < planes.size(); ++p) {
      if (planes[p].width() != frame.width || planes[p].height() != frame.height) {
        throw std::invalid_argument("image: planes must share voxel dimensions");
      }
      const WeightMatrix w = build_weights(grid, array.position(a), planes[p], y, theta0, lambda_avg);
      per_antenna += solve(y, w.entries, priors[p]);
    }
    frame.values += per_antenna / static_cast<double>(planes.size());
  }
  frame.values /= static_cast<double>(array.size());
  if (!y_per_antenna.empty()) frame.timestamp_s = y_per_antenna.front().timestamp_s;
  normalize_frame(frame);
  return frame;
}

AnalyticImager::AnalyticImager(const Layout& layout, const ImagingParams& params, double sigma_y, double lambda_avg)
    : layout_(layout), params_(params), lambda_avg_(lambda_avg) {
  for (const ImagePlane& plane : layout.planes) priors_.push_back(PriorSet::for_plane(plane, params, sigma_y));
}

ImageFrame AnalyticImager::image(const std::vector<RssDifferenceVector>& y_per_antenna) const {
  return tomo::image(layout_.grid, layout_.antennas, layout_.planes, y_per_antenna, priors_, params_.theta0,
                     lambda_avg_);
}

}  // namespace tomo
