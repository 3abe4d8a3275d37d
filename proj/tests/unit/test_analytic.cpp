#include "tomo/analytic_imaging.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace tomo;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

// Closed form with explicit inverses, used only as an oracle.
Eigen::VectorXd dense_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& w, const Eigen::MatrixXd& c,
                             double sigma_n, double alpha, const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy) {
  const int n = static_cast<int>(c.rows());
  const Eigen::MatrixXd c_inv = (c + 1e-8 * Eigen::MatrixXd::Identity(n, n)).fullPivLu().inverse();
  const Eigen::MatrixXd a = w.transpose() * w + sigma_n * c_inv + alpha * (dx.transpose() * dx + dy.transpose() * dy);
  return a.fullPivLu().inverse() * (w.transpose() * y);
}

}  // namespace

TEST_CASE("delta_beta") {
  CHECK(delta_beta(0.0, 0.32765, 4.2) == 0.0);
  CHECK(delta_beta(10.0, 0.32765, 4.2) == doctest::Approx(-0.4531).epsilon(1e-3));
  CHECK(delta_beta(20.0, 0.32765, 4.2) == doctest::Approx(-0.9062).epsilon(1e-3));
  CHECK_THROWS_AS(delta_beta(1.0, 4.0 * kPi, 1.0), GeometryError);
}

TEST_CASE("forward differences") {
  const Eigen::MatrixXd dx = Eigen::MatrixXd(forward_difference_x(3, 2));
  const Eigen::MatrixXd dy = Eigen::MatrixXd(forward_difference_y(3, 2));
  // x laid out row-major: index v * 3 + u.
  Eigen::VectorXd x(6);
  x << 1, 4, 9, 2, 3, 7;
  Eigen::VectorXd ex(6);
  ex << 3, 5, 0, 1, 4, 0;
  Eigen::VectorXd ey(6);
  ey << 1, -1, -2, 0, 0, 0;
  CHECK((dx * x - ex).norm() == 0.0);
  CHECK((dy * x - ey).norm() == 0.0);
}

TEST_CASE("build_weights") {
  // One tag straight below one antenna; a 4.2 m link.
  const TagGrid grid(2, 2, 0.127, 0.127, Point3(0, 0, 0));
  const Point3 antenna(0.0635, 0.0635, 4.2);
  const ImagePlane plane(grid, 0.3, 5, 5);
  const double lambda = 0.32765;

  const WeightMatrix zero = build_weights(grid, antenna, plane, Eigen::VectorXd::Zero(4), 1.0, lambda);
  REQUIRE(zero.entries.rows() == 4);
  REQUIRE(zero.entries.cols() == 25);
  for (int k = 0; k < 4; ++k) {
    const double d = (grid.position(k) - antenna).norm();
    for (int j = 0; j < 25; ++j) {
      const double w = zero.entries(k, j);
      if (w != 0.0) CHECK(w == doctest::Approx(std::pow(d, -4.0)));
      const bool inside = inside_ellipsoid(
          plane.voxel_center(j), grid.position(k), antenna,
          fresnel_width(1.0, lambda, (plane.voxel_center(j) - grid.position(k)).norm(),
                        (antenna - plane.voxel_center(j)).norm()));
      CHECK((w != 0.0) == inside);
    }
  }

  TagGrid one(2, 2, 0.127, 0.127, Point3(0, 0, 0));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  const Point3 above(0.0, 0.0, 4.2);
  y[0] = 10.0;
  const WeightMatrix shifted = build_weights(one, above, plane, y, 1.0, lambda);
  CHECK(shifted.delta_beta[0] == doctest::Approx(-0.4531).epsilon(1e-3));
  int nonzero = 0;
  for (int j = 0; j < 25; ++j) {
    if (shifted.entries(0, j) == 0.0) continue;
    ++nonzero;
    CHECK(shifted.entries(0, j) == doctest::Approx(0.001674).epsilon(1e-3));
  }
  CHECK(nonzero > 0);

  // A voxel far outside every ellipsoid: zero column.
  const TagGrid wide(29, 4, 0.127, 0.127, Point3(0, 0, 0));
  const ImagePlane wide_plane(wide, 0.3, 5, 5);
  const WeightMatrix narrow = build_weights(wide, Point3(0, 0, 4.2), wide_plane, Eigen::VectorXd::Zero(116), 0.01,
                                            lambda);
  CHECK(narrow.entries.col(wide_plane.index(139, 14)).isZero());
  CHECK(narrow.entries.minCoeff() >= 0.0);
}

TEST_CASE("solve against the dense closed form") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::MatrixXd w = random_matrix(10, 20, rng);
    const Eigen::MatrixXd b = random_matrix(20, 20, rng);
    const Eigen::MatrixXd c = b * b.transpose() + 20.0 * Eigen::MatrixXd::Identity(20, 20);
    const SparseMatrix dx = forward_difference_x(5, 4);
    const SparseMatrix dy = forward_difference_y(5, 4);
    const PriorSet priors(15.0, dx, dy, c, 0.7);
    const Eigen::VectorXd y = random_vector(10, rng);
    const Eigen::VectorXd x = solve(y, w, priors);
    const Eigen::VectorXd oracle = dense_oracle(y, w, c, 0.7, 15.0, Eigen::MatrixXd(dx), Eigen::MatrixXd(dy));
    CHECK((x - oracle).norm() / oracle.norm() < 1e-8);
  }
}

TEST_CASE("solve edge cases") {
  const int n = 6;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const PriorSet none(0.0, forward_difference_x(3, 2), forward_difference_y(3, 2), eye, 0.0);
  Eigen::VectorXd y(n);
  y << 1, -2, 3, 0.5, 4, 7;
  CHECK((solve(y, eye, none) - y).norm() < 1e-12);
  CHECK(solve(Eigen::VectorXd::Zero(n), eye, none).isZero());

  const PriorSet singular(0.0, forward_difference_x(3, 2), forward_difference_y(3, 2), eye, 0.0);
  CHECK_THROWS_AS(solve(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, n), singular), SolverError);
}

TEST_CASE("solver is linear and its normal matrix symmetric") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd w = random_matrix(10, 20, rng);
  const Eigen::MatrixXd b = random_matrix(20, 20, rng);
  const PriorSet priors(15.0, forward_difference_x(5, 4), forward_difference_y(5, 4),
                        b * b.transpose() + Eigen::MatrixXd::Identity(20, 20), 1.3);
  const Eigen::MatrixXd a = normal_matrix(w, priors);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  CHECK(ldlt.vectorD().minCoeff() > 0.0);

  const Eigen::VectorXd y1 = random_vector(10, rng);
  const Eigen::VectorXd y2 = random_vector(10, rng);
  const Eigen::VectorXd lhs = solve(2.5 * y1 - 0.75 * y2, w, priors);
  const Eigen::VectorXd rhs = 2.5 * solve(y1, w, priors) - 0.75 * solve(y2, w, priors);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("larger alpha smooths") {
  std::mt19937_64 rng(99);
  const SparseMatrix dx = forward_difference_x(5, 4);
  const SparseMatrix dy = forward_difference_y(5, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd w = random_matrix(10, 20, rng);
    const Eigen::MatrixXd b = random_matrix(20, 20, rng);
    const Eigen::MatrixXd c = b * b.transpose() + Eigen::MatrixXd::Identity(20, 20);
    const Eigen::VectorXd y = random_vector(10, rng);
    auto energy = [&](double alpha) {
      const Eigen::VectorXd x = solve(y, w, PriorSet(alpha, dx, dy, c, 0.5));
      return (dx * x).squaredNorm() + (dy * x).squaredNorm();
    };
    CHECK(energy(30.0) < energy(15.0));
    CHECK(energy(15.0) < energy(1.0));
  }
}

TEST_CASE("prior correlation") {
  const Layout l = Layout::standard_shelf();
  const TagGrid small(3, 2, 0.127, 0.127, Point3(0, 0, 0));
  const ImagePlane plane(small, 0.3, 2, 2);
  ImagingParams params;
  const PriorSet p = PriorSet::for_plane(plane, params, 0.5);
  CHECK(p.sigma_n() == doctest::Approx(0.5));
  // C_x(i, j) = (sigma_x / delta) exp(-D / delta), D in voxel pitches.
  const double sx = 0.5;
  const double delta = params.delta_vox;
  CHECK(p.corr()(0, 0) == doctest::Approx(sx / delta));
  CHECK(p.corr()(0, 1) == doctest::Approx(sx / delta * std::exp(-1.0 / delta)));
  CHECK(p.corr()(0, plane.index(1, 1)) == doctest::Approx(sx / delta * std::exp(-std::sqrt(2.0) / delta)));
  CHECK((p.regularizer() - p.regularizer().transpose()).cwiseAbs().maxCoeff() < 1e-9);
  (void)l;
}

TEST_CASE("image fusion") {
  const Layout l = Layout::standard_shelf();
  ImagingParams params;
  AnalyticImager imager(l, params, 0.6, 0.32765);

  std::vector<RssDifferenceVector> zeros(2);
  for (int a = 0; a < 2; ++a) zeros[static_cast<std::size_t>(a)].values = Eigen::VectorXd::Zero(116);
  const ImageFrame blank = imager.image(zeros);
  CHECK(blank.width == 140);
  CHECK(blank.height == 15);
  CHECK(blank.values.isZero());

  RssDifferenceVector y;
  y.values = Eigen::VectorXd::Zero(116);
  for (int row = 0; row < 4; ++row) {
    for (int col = 10; col <= 13; ++col) y.values[row * 29 + col] = 8.0;
  }
  std::vector<PriorSet> priors;
  for (const ImagePlane& p : l.planes) priors.push_back(PriorSet::for_plane(p, params, 0.6));
  AntennaArray one{{l.antennas.position(0)}};
  AntennaArray twice{{l.antennas.position(0), l.antennas.position(0)}};
  const ImageFrame single = image(l.grid, one, l.planes, {y}, priors, 1.0, 0.32765);
  const ImageFrame doubled = image(l.grid, twice, l.planes, {y, y}, priors, 1.0, 0.32765);
  CHECK((single.values - doubled.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(single.values.maxCoeff() == doctest::Approx(1.0));
  CHECK(single.values.minCoeff() >= 0.0);
  Eigen::Index peak = 0;
  single.values.maxCoeff(&peak);
  const int u = static_cast<int>(peak % 140);
  CHECK(u >= 5 * 10);
  CHECK(u <= 5 * 13);
}
