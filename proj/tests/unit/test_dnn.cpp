#include "tomo/dnn.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace tomo;

namespace {

MlpSpec toy_spec(int width = 5, int in = 4, int out = 3) {
  MlpSpec s;
  s.layer_dims = {in, width, width, width, width, width, out};
  s.activations = {Activation::kRelu, Activation::kRelu,    Activation::kTanh,
                   Activation::kTanh, Activation::kSigmoid, Activation::kSigmoid};
  s.dropout_retain = 1.0;
  s.l2_coeff = 0.0;
  s.batch_size = 8;
  return s;
}

Eigen::MatrixXd uniform01(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

double act(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return 0.0;
}

// Plain loops, no Eigen products.
std::vector<double> hand_forward(const Mlp& net, std::vector<double> x) {
  for (const DenseLayer& l : net.layers()) {
    std::vector<double> y(static_cast<std::size_t>(l.weight.rows()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      double z = l.bias[r];
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) z += l.weight(r, c) * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = act(l.activation, z);
    }
    x = std::move(y);
  }
  return x;
}

bool same_parameters(const Mlp& a, const Mlp& b) {
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    if (a.layers()[l].weight != b.layers()[l].weight || a.layers()[l].bias != b.layers()[l].bias) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("layer dimensions for the standard shelf") {
  const MlpSpec s = MlpSpec::for_layout(116, 29, 4, 5, 5);
  CHECK(s.layer_dims == std::vector<int>{116, 174, 348, 348, 232, 232, 2100});
  CHECK(s.layer_count() == 6);
  CHECK(s.activations[0] == Activation::kRelu);
  CHECK(s.activations[3] == Activation::kTanh);
  CHECK(s.activations[5] == Activation::kSigmoid);
  CHECK(MlpSpec::for_layout(15, 5, 3, 2, 2).layer_dims[1] == 23);
  const Mlp net(s);
  CHECK(net.input_dim() == 116);
  CHECK(net.output_dim() == 2100);
}

TEST_CASE("spec validation") {
  MlpSpec s = toy_spec();
  CHECK_NOTHROW(s.validate());
  s.dropout_retain = 0.0;
  CHECK_THROWS(s.validate());
  s = toy_spec();
  s.layer_dims.pop_back();
  CHECK_THROWS(s.validate());
}

TEST_CASE("forward") {
  const MlpSpec s = toy_spec();
  const Mlp zero(s);
  const Eigen::VectorXd out = zero.forward(Eigen::VectorXd::Constant(4, 0.3));
  for (Eigen::Index i = 0; i < out.size(); ++i) CHECK(out[i] == 0.5);

  std::mt19937_64 rng(1);
  const Mlp net = Mlp::initialized(toy_spec(3, 3, 3), 42);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = uniform01(3, 1, rng).col(0);
    const Eigen::VectorXd y = net.forward(x);
    CHECK(y == net.forward(x));
    const auto oracle = hand_forward(net, {x[0], x[1], x[2]});
    for (int i = 0; i < 3; ++i) CHECK(std::abs(y[i] - oracle[static_cast<std::size_t>(i)]) < 1e-12);
    for (int i = 0; i < 3; ++i) {
      CHECK(y[i] > 0.0);
      CHECK(y[i] < 1.0);
    }
  }
  CHECK_THROWS(net.forward(Eigen::VectorXd::Zero(5)));
}

TEST_CASE("initialization bounds") {
  const MlpSpec s = toy_spec(7, 6, 2);
  const Mlp a = Mlp::initialized(s, 3);
  const Mlp b = Mlp::initialized(s, 3);
  const Mlp c = Mlp::initialized(s, 4);
  CHECK(same_parameters(a, b));
  CHECK_FALSE(same_parameters(a, c));
  for (const DenseLayer& l : a.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    CHECK(l.weight.cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("gradient check against central differences") {
  std::mt19937_64 rng(11);
  MlpSpec s = toy_spec(5, 4, 3);
  Mlp net = Mlp::initialized(s, 8);
  const Eigen::MatrixXd x = uniform01(4, 5, rng);
  const Eigen::MatrixXd y = uniform01(3, 5, rng);
  for (double l2 : {0.0, 1e-2}) {
    Gradients g;
    loss_and_gradient(net, x, y, l2, nullptr, &g);
    double worst = 0.0;
    const double eps = 1e-5;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto probe = [&](double& param, double analytic) {
        const double keep = param;
        param = keep + eps;
        const double up = loss_and_gradient(net, x, y, l2, nullptr, nullptr);
        param = keep - eps;
        const double down = loss_and_gradient(net, x, y, l2, nullptr, nullptr);
        param = keep;
        const double numeric = (up - down) / (2.0 * eps);
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
      };
      DenseLayer& layer = net.layers()[l];
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) probe(layer.weight.data()[i], g.weight[l].data()[i]);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias[i], g.bias[l][i]);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("gradient with fixed dropout masks") {
  std::mt19937_64 rng(12);
  MlpSpec s = toy_spec(6, 4, 3);
  Mlp net = Mlp::initialized(s, 9);
  const Eigen::MatrixXd x = uniform01(4, 4, rng);
  const Eigen::MatrixXd y = uniform01(3, 4, rng);
  const DropoutMasks masks = net.sample_masks(4, 0.7, rng);
  Gradients g;
  loss_and_gradient(net, x, y, 0.0, &masks, &g);
  double& w = net.layers()[2].weight(1, 2);
  const double keep = w;
  w = keep + 1e-5;
  const double up = loss_and_gradient(net, x, y, 0.0, &masks, nullptr);
  w = keep - 1e-5;
  const double down = loss_and_gradient(net, x, y, 0.0, &masks, nullptr);
  w = keep;
  const double numeric = (up - down) / 2e-5;
  CHECK(std::abs(g.weight[2](1, 2) - numeric) <= 1e-4 * std::max(std::abs(numeric), 1e-7));
}

TEST_CASE("perfect fit leaves parameters unchanged") {
  std::mt19937_64 rng(5);
  MlpSpec s = toy_spec();
  Mlp net = Mlp::initialized(s, 2);
  const Eigen::MatrixXd x = uniform01(4, 6, rng);
  const Eigen::MatrixXd y = net.forward_batch(x);
  const Mlp before = net;
  Trainer trainer(net, s, 1);
  CHECK(trainer.train_step(x, y) == 0.0);
  CHECK(same_parameters(before, net));
}

TEST_CASE("training lowers the loss") {
  std::mt19937_64 rng(21);
  MlpSpec s = toy_spec(8, 4, 3);
  s.batch_size = 50;
  Mlp net = Mlp::initialized(s, 4);
  const Eigen::MatrixXd x = uniform01(4, 50, rng);
  Eigen::MatrixXd y(3, 50);
  for (int i = 0; i < 50; ++i) {
    y(0, i) = 0.5 * (x(0, i) + x(1, i));
    y(1, i) = x(2, i) * x(3, i);
    y(2, i) = 1.0 - x(0, i);
  }
  Trainer trainer(net, s, 7);
  std::vector<double> losses;
  for (int step = 0; step < 200; ++step) losses.push_back(trainer.train_step(x, y));
  for (std::size_t t = 0; t + 20 < losses.size(); ++t) CHECK(losses[t + 20] < losses[t]);
}

TEST_CASE("non-finite loss is reported") {
  MlpSpec s = toy_spec();
  Mlp net = Mlp::initialized(s, 2);
  Trainer trainer(net, s, 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(4, 2, 0.5);
  x(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(trainer.train_step(x, Eigen::MatrixXd::Zero(3, 2)), TrainingDiverged);
}

TEST_CASE("inverted dropout keeps hidden expectations") {
  std::mt19937_64 rng(33);
  MlpSpec s = toy_spec(6, 4, 3);
  const Mlp net = Mlp::initialized(s, 17);
  Eigen::VectorXd x(4);
  x << 0.9, 0.8, 0.7, 0.95;
  const int n = 10000;
  const Eigen::MatrixXd batch = x.replicate(1, n);
  const auto clean = net.trace(x, nullptr);
  const DropoutMasks masks = net.sample_masks(n, 0.7, rng);
  const auto dropped = net.trace(batch, &masks);
  // First hidden layer: the only one whose inputs are undisturbed by earlier masks.
  const Eigen::VectorXd mean = dropped[0].rowwise().mean();
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (clean[0](i, 0) > 1e-3) CHECK(std::abs(mean[i] / clean[0](i, 0) - 1.0) < 0.02);
  }
  for (std::size_t l = 0; l + 1 < masks.size(); ++l) {
    for (Eigen::Index i = 0; i < masks[l].size(); ++i) {
      const double m = masks[l].data()[i];
      REQUIRE((m == 0.0 || std::abs(m - 1.0 / 0.7) < 1e-15));
    }
  }
  std::mt19937_64 a(1);
  const Eigen::VectorXd train_out = net.forward(x, true, a, 0.7);
  CHECK(train_out.size() == 3);
}

TEST_CASE("ensemble median") {
  const MlpSpec s = toy_spec();
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = uniform01(4, 7, rng);
  const Mlp m1 = Mlp::initialized(s, 1);
  const Mlp m2 = Mlp::initialized(s, 2);
  Mlp corrupt(s);
  corrupt.layers().back().bias.setConstant(60.0);

  const MlpEnsemble single(s, {m1});
  CHECK(single.predict_batch(x) == m1.forward_batch(x));
  const MlpEnsemble same(s, {m1, m1, m1});
  CHECK(same.predict_batch(x) == m1.forward_batch(x));

  const MlpEnsemble three(s, {m1, corrupt, m2});
  const Eigen::MatrixXd p = three.predict_batch(x);
  const Eigen::MatrixXd h1 = m1.forward_batch(x);
  const Eigen::MatrixXd h2 = m2.forward_batch(x);
  CHECK(corrupt.forward_batch(x).minCoeff() == 1.0);
  CHECK(p == h1.cwiseMax(h2));
  CHECK(MlpEnsemble(s, {corrupt, m2, m1}).predict_batch(x) == p);
  CHECK(MlpEnsemble(s, {m2, m1, corrupt}).predict_batch(x) == p);

  const MlpEnsemble pair(s, {m1, m2});
  CHECK((pair.predict_batch(x) - 0.5 * (h1 + h2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS(MlpEnsemble(s, {Mlp(toy_spec(4))}));
  CHECK_THROWS(MlpEnsemble().predict_batch(x));
}

TEST_CASE("rasterize_label") {
  const ImageFrame dot = rasterize_label(20.0, 5.0, 0.5, 0.5, 140, 15);
  CHECK(dot.values.sum() == 1.0);
  CHECK(dot.at(20, 5) == 1.0);

  const double cu = 70.0, cv = 7.0, a = 10.0, b = 7.0;
  const ImageFrame e = rasterize_label(cu, cv, a, b, 140, 15);
  int brute = 0;
  for (int v = 0; v < 15; ++v) {
    for (int u = 0; u < 140; ++u) {
      const double du = (u - cu) / a;
      const double dv = (v - cv) / b;
      const bool in = du * du + dv * dv <= 1.0;
      brute += in;
      REQUIRE(e.at(u, v) == (in ? 1.0 : 0.0));
    }
  }
  CHECK(e.values.sum() == brute);

  const ImageFrame edge = rasterize_label(139.0, 0.0, 12.0, 7.5, 140, 15);
  CHECK(edge.values.size() == 2100);
  CHECK(edge.at(139, 0) == 1.0);
  CHECK(edge.at(126, 0) == 0.0);
  CHECK_THROWS(rasterize_label(141.0, 3.0, 2.0, 2.0, 140, 15));
  CHECK_THROWS(rasterize_label(10.0, -1.0, 2.0, 2.0, 140, 15));
  CHECK_THROWS(rasterize_label(10.0, 3.0, 0.0, 2.0, 140, 15));
}

TEST_CASE("normalize_input") {
  Eigen::VectorXd y(4);
  y << 0.0, 15.0, 45.0, 30.0;
  const Eigen::VectorXd n = normalize_input(y, 30.0);
  CHECK(n[0] == 0.0);
  CHECK(n[1] == 0.5);
  CHECK(n[2] == 1.0);
  CHECK(n[3] == 1.0);
  CHECK_THROWS(normalize_input(y, 0.0));
}

TEST_CASE("training set") {
  TrainingSet set;
  const int zero = set.add_label(Eigen::VectorXd::Zero(3));
  set.add(Eigen::VectorXd::Constant(2, 0.2), zero);
  set.add(Eigen::VectorXd::Constant(2, 0.4), Eigen::VectorXd::Constant(3, 1.0));
  CHECK(set.size() == 2);
  CHECK(set.label(1).sum() == 3.0);
  CHECK_THROWS(set.add(Eigen::VectorXd::Constant(2, 1.5), zero));
  CHECK_THROWS(set.add(Eigen::VectorXd::Constant(3, 0.5), zero));
  CHECK_THROWS(set.add(Eigen::VectorXd::Constant(2, 0.5), 7));
  std::vector<std::size_t> idx{1, 0};
  Eigen::MatrixXd x, y;
  set.gather(idx, x, y);
  CHECK(x(0, 0) == 0.4);
  CHECK(y(0, 1) == 0.0);
}

TEST_CASE("ensemble training and checkpoints") {
  std::mt19937_64 rng(8);
  MlpSpec s = toy_spec(6, 4, 3);
  s.epochs = 3;
  s.dropout_retain = 0.7;
  TrainingSet set;
  for (int i = 0; i < 40; ++i) set.add(uniform01(4, 1, rng).col(0), uniform01(3, 1, rng).col(0));
  TrainingReport report;
  const MlpEnsemble e = train_ensemble(s, set, 3, &report);
  CHECK(e.size() == 3);
  REQUIRE(report.epoch_loss.size() == 3);
  CHECK(report.epoch_loss[0].size() == 3);
  CHECK_FALSE(same_parameters(e.members()[0], e.members()[1]));
  const MlpEnsemble again = train_ensemble(s, set, 3);
  for (std::size_t m = 0; m < 3; ++m) CHECK(same_parameters(e.members()[m], again.members()[m]));

  std::stringstream buf;
  write_checkpoint(buf, e);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "TSEE");
  std::stringstream in(bytes);
  const MlpEnsemble back = read_checkpoint(in);
  CHECK(back.spec().layer_dims == s.layer_dims);
  CHECK(back.spec().activations == s.activations);
  CHECK(back.spec().epochs == 3);
  for (std::size_t m = 0; m < 3; ++m) CHECK(same_parameters(back.members()[m], e.members()[m]));
  std::stringstream rewritten;
  write_checkpoint(rewritten, back);
  CHECK(rewritten.str() == bytes);

  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream bad_in(bad);
  CHECK_THROWS(read_checkpoint(bad_in));
  std::stringstream short_in(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS(read_checkpoint(short_in));
  std::stringstream long_in(bytes + "x");
  CHECK_THROWS(read_checkpoint(long_in));

  const auto path = std::filesystem::temp_directory_path() / "tomo_unit_ckpt.bin";
  save_checkpoint(path, e);
  CHECK_NOTHROW(load_checkpoint(path, s));
  CHECK_THROWS(load_checkpoint(path, toy_spec(7, 4, 3)));
  std::filesystem::remove(path);

  MlpSpec none = s;
  none.epochs = 0;
  const MlpEnsemble untrained = train_ensemble(none, set, 1);
  CHECK(same_parameters(untrained.members()[0], Mlp::initialized(none, none.seed)));
  CHECK(mean_squared_error(e, set) > 0.0);
}
