#include "tomo/multiperson.hpp"

#include <doctest.h>

#include <random>

using namespace tomo;

namespace {

CalibrationProfile profile_for(const TagGrid& grid, int antennas, double sigma) {
  CalibrationProfile p;
  p.num_antennas = antennas;
  p.num_channels = 1;
  p.num_tags = grid.size();
  for (int a = 0; a < antennas; ++a) {
    p.rss_cal.push_back(Eigen::MatrixXd::Constant(1, grid.size(), -60.0));
    p.phase_cal.push_back(Eigen::MatrixXd::Zero(1, grid.size()));
  }
  p.diff_mean = Eigen::MatrixXd::Zero(grid.size(), antennas);
  p.diff_sigma = Eigen::MatrixXd::Constant(grid.size(), antennas, sigma);
  return p;
}

RssDifferenceVector random_y(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 20.0);
  RssDifferenceVector y;
  y.values.resize(k);
  for (int i = 0; i < k; ++i) y.values[i] = u(rng);
  return y;
}

}  // namespace

TEST_CASE("window counts and contents") {
  const TagGrid grid(29, 4, 0.127, 0.127, Point3(0, 0, 0));
  CalibrationProfile p = profile_for(grid, 1, 0.2);
  p.diff_sigma(3, 0) = 0.35;
  std::mt19937_64 rng(4);
  const RssDifferenceVector y = random_y(116, rng);
  for (int k_cw : {4, 6, 8}) {
    WindowConfig cfg;
    cfg.k_cw = k_cw;
    const auto w = window_vectors(y, p, grid, cfg);
    REQUIRE(static_cast<int>(w.size()) == 29 - k_cw + 1);
    for (int i = 0; i < static_cast<int>(w.size()); ++i) {
      for (int k = 0; k < 116; ++k) {
        const int col = k % 29;
        const double got = w[static_cast<std::size_t>(i)].values[k];
        if (col >= i && col < i + k_cw) {
          REQUIRE(got == y.values[k]);
        } else {
          REQUIRE(got == 2.0 * p.diff_sigma(k, 0));
        }
      }
    }
  }
  WindowConfig cfg;
  CHECK(window_vectors(y, p, grid, cfg)[20].values[3] == doctest::Approx(0.7));
  CHECK(window_vectors(y, p, grid, cfg)[0].values[40] == doctest::Approx(0.4));

  cfg.k_cw = 29;
  const auto whole = window_vectors(y, p, grid, cfg);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].values == y.values);

  cfg.k_cw = 30;
  CHECK_THROWS(window_vectors(y, p, grid, cfg));
  cfg.k_cw = 0;
  CHECK_THROWS(window_vectors(y, p, grid, cfg));
  cfg.k_cw = 6;
  cfg.median_kernel = 2;
  CHECK_THROWS(cfg.validate(29));

  CalibrationProfile stale = p;
  stale.diff_sigma.resize(0, 0);
  WindowConfig ok;
  CHECK_THROWS(window_vectors(y, stale, grid, ok));
}

TEST_CASE("sampled outside entries") {
  const TagGrid grid(10, 2, 0.127, 0.127, Point3(0, 0, 0));
  const CalibrationProfile p = profile_for(grid, 1, 0.5);
  std::mt19937_64 rng(1);
  const RssDifferenceVector y = random_y(20, rng);
  WindowConfig cfg;
  cfg.k_cw = 4;
  cfg.sample_outside = true;
  CHECK_THROWS(window_vectors(y, p, grid, cfg));
  std::mt19937_64 a(9), b(9);
  const auto wa = window_vectors(y, p, grid, cfg, &a);
  const auto wb = window_vectors(y, p, grid, cfg, &b);
  for (std::size_t i = 0; i < wa.size(); ++i) {
    CHECK(wa[i].values == wb[i].values);
    CHECK(wa[i].values.minCoeff() >= 0.0);
  }
}

TEST_CASE("quiet vector") {
  const TagGrid grid(5, 2, 0.127, 0.127, Point3(0, 0, 0));
  CalibrationProfile p = profile_for(grid, 2, 0.3);
  p.diff_sigma(4, 1) = 1.1;
  const RssDifferenceVector q = quiet_vector(p, 1);
  CHECK(q.antenna_id == 1);
  CHECK(q.values[0] == doctest::Approx(0.6));
  CHECK(q.values[4] == doctest::Approx(2.2));
}

TEST_CASE("image filters") {
  ImageFrame f(5, 4);
  f.at(2, 2) = 9.0;
  const ImageFrame med = median_filter(f, 3);
  CHECK(med.values.isZero());

  ImageFrame block(6, 5);
  for (int v = 1; v <= 3; ++v) {
    for (int u = 1; u <= 3; ++u) block.at(u, v) = 1.0;
  }
  const ImageFrame mb = median_filter(block, 3);
  CHECK(mb.at(2, 2) == 1.0);
  CHECK(mb.at(5, 4) == 0.0);

  ImageFrame ones(4, 3);
  ones.values.setOnes();
  const ImageFrame avg = average_filter(ones, 3);
  for (Eigen::Index i = 0; i < avg.values.size(); ++i) CHECK(avg.values[i] == doctest::Approx(1.0));

  ImageFrame spike(3, 3);
  spike.at(0, 0) = 4.0;
  const ImageFrame as = average_filter(spike, 3);
  CHECK(as.at(0, 0) == doctest::Approx(1.0));  // clipped 2x2 window
  CHECK(as.at(1, 1) == doctest::Approx(4.0 / 9.0));
  CHECK(as.at(2, 2) == 0.0);
}

TEST_CASE("merge windows") {
  Eigen::MatrixXd p(2, 3);
  p << 0.1, 0.9, 0.5,
       0.0, 0.0, 0.6;
  const Eigen::VectorXd mean = merge_windows(p, WindowMerge::kMean);
  CHECK(mean[0] == doctest::Approx(0.5));
  CHECK(mean[1] == doctest::Approx(0.2));
  const Eigen::VectorXd med = merge_windows(p, WindowMerge::kMedian);
  CHECK(med[0] == 0.5);
  CHECK(med[1] == 0.0);
  const Eigen::VectorXd mx = merge_windows(p, WindowMerge::kMax);
  CHECK(mx[0] == 0.9);
  CHECK(mx[1] == 0.6);
  CHECK(parse_window_merge("median") == WindowMerge::kMedian);
  CHECK(to_string(WindowMerge::kMax) == "max");
  CHECK_THROWS(parse_window_merge("mode"));
  CHECK(parse_window_merge("covered") == WindowMerge::kCovered);
  CHECK(WindowConfig{}.merge == WindowMerge::kCovered);
  CHECK_THROWS(merge_windows(p, WindowMerge::kCovered));
}

TEST_CASE("covered merge ignores windows away from the voxel") {
  const TagGrid grid(10, 2, 0.127, 0.127, Point3(0, 0, 0));
  const ImagePlane plane(grid, 0.3, 3, 2);
  const Eigen::MatrixXd mask = window_coverage(grid, plane, 4);
  REQUIRE(mask.rows() == plane.size());
  REQUIRE(mask.cols() == 7);
  // first and last voxel columns sit under one window, the middle under k_cw
  CHECK(mask.row(plane.index(0, 0)).sum() == 1.0);
  CHECK(mask(plane.index(0, 0), 0) == 1.0);
  CHECK(mask.row(plane.index(plane.width() - 1, 1)).sum() == 1.0);
  CHECK(mask(plane.index(plane.width() - 1, 1), 6) == 1.0);
  CHECK(mask.row(plane.index(plane.width() / 2, 0)).sum() == 4.0);
  for (int u = 0; u < plane.width(); ++u) CHECK(mask.row(plane.index(u, 0)) == mask.row(plane.index(u, 1)));

  // window 0 predicts 1 everywhere, the rest 0: only voxels under window 0 light up
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(plane.size(), 7);
  p.col(0).setOnes();
  const Eigen::VectorXd merged = merge_windows(p, WindowMerge::kCovered, &mask);
  CHECK(merged[plane.index(0, 0)] == 1.0);
  CHECK(merged[plane.index(plane.width() - 1, 0)] == 0.0);
  CHECK(merged[plane.index(plane.width() / 2, 0)] == 0.0);
  CHECK_THROWS(window_coverage(grid, plane, 11));
}

TEST_CASE("multi-person imaging") {
  const TagGrid grid(8, 2, 0.127, 0.127, Point3(0, 0, 0));
  const ImagePlane plane(grid, 0.3, 2, 2);
  const CalibrationProfile p = profile_for(grid, 2, 0.25);
  MlpSpec s = MlpSpec::for_layout(grid.size(), 8, 2, 2, 2);
  const MlpEnsemble e(s, {Mlp::initialized(s, 1), Mlp::initialized(s, 2), Mlp::initialized(s, 3)});
  std::mt19937_64 rng(5);
  const RssDifferenceVector y0 = random_y(16, rng);
  RssDifferenceVector y1 = random_y(16, rng);
  y1.antenna_id = 1;
  WindowConfig cfg;
  cfg.k_cw = 3;
  const ImageFrame f = image_multiperson({y0, y1}, e, p, grid, plane, cfg, 30.0);
  CHECK(f.width == plane.width());
  CHECK(f.height == plane.height());
  CHECK(f.values.maxCoeff() == doctest::Approx(1.0));
  CHECK(f.values.minCoeff() >= 0.0);
  const ImageFrame swapped = image_multiperson({y1, y0}, e, p, grid, plane, cfg, 30.0);
  CHECK((f.values - swapped.values).cwiseAbs().maxCoeff() < 1e-12);

  // A full-width window is the single prediction, filtered and normalized.
  cfg.k_cw = 8;
  const ImageFrame one = image_multiperson({y0}, e, p, grid, plane, cfg, 30.0);
  ImageFrame direct = e.predict(normalize_input(y0.values, 30.0), plane.width(), plane.height());
  direct = average_filter(median_filter(direct, 3), 3);
  normalize_frame(direct);
  CHECK((one.values - direct.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("window training samples") {
  const TagGrid grid(8, 2, 0.127, 0.127, Point3(0, 0, 0));
  const CalibrationProfile p = profile_for(grid, 1, 0.25);
  std::mt19937_64 rng(6);
  const RssDifferenceVector y = random_y(16, rng);
  TrainingSet set;
  const int zero = set.add_label(Eigen::VectorXd::Zero(4));
  const int one = set.add_label(Eigen::VectorXd::Ones(4));
  WindowConfig cfg;
  cfg.k_cw = 3;
  add_window_samples(set, y, p, grid, cfg, 30.0, [&](int i) { return i == 2 ? one : zero; });
  REQUIRE(set.size() == 6);
  CHECK(set.label(2).sum() == 4.0);
  CHECK(set.label(3).sum() == 0.0);
  CHECK(set.input(0)[0] == doctest::Approx(std::min(y.values[0] / 30.0, 1.0)));
  CHECK(set.input(0)[5] == doctest::Approx(0.5 / 30.0));
}
