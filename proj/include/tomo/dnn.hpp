// SPDX-License-Identifier: Apache-2.0
//
// Deep regression from normalized RSS difference vectors to voxel images.
//
// The network is a plain six-layer perceptron whose widths scale with the tag
// count K: K -> 3K/2 -> 3K -> 3K -> 2K -> 2K -> N, with ReLU, ReLU, tanh,
// tanh, sigmoid, sigmoid activations. Training uses voxel-wise MSE, an L2
// weight penalty, inverted dropout on hidden activations, and Adam. An
// ensemble of independently seeded networks predicts by element-wise median.

#pragma once

#include "tomo/image_frame.hpp"
#include "tomo/preprocess.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace tomo {

enum class Activation : std::uint8_t { kRelu = 0, kTanh = 1, kSigmoid = 2 };

struct MlpSpec {
  std::vector<int> layer_dims;          // input dim followed by each layer's output dim
  std::vector<Activation> activations;  // one per layer
  double dropout_retain = 0.7;
  double l2_coeff = 1e-6;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 200;
  std::uint64_t seed = 1;

  int layer_count() const { return static_cast<int>(activations.size()); }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  void validate() const;

  // K -> ceil(3K/2) -> 3K -> 3K -> 2K -> 2K -> p_x p_y (k_x - 1)(k_y - 1).
  static MlpSpec for_layout(int num_tags, int k_x, int k_y, int p_x, int p_y);
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::kRelu;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-layer dropout masks (already divided by the retain probability); the
// last layer's entry is unused.
using DropoutMasks = std::vector<Eigen::MatrixXd>;

struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

class Mlp {
 public:
  Mlp() = default;
  // All weights and biases zero.
  explicit Mlp(const MlpSpec& spec);
  // Uniform in +-1/sqrt(fan_in).
  static Mlp initialized(const MlpSpec& spec, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers_.back().weight.rows()); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  // Inference (no dropout). Columns of `inputs` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  // With training = true, hidden activations go through inverted dropout.
  Eigen::VectorXd forward(const Eigen::VectorXd& input, bool training, std::mt19937_64& rng, double retain) const;

  // Activations of every layer (after dropout when masks are given).
  std::vector<Eigen::MatrixXd> trace(const Eigen::MatrixXd& inputs, const DropoutMasks* masks) const;

  DropoutMasks sample_masks(Eigen::Index batch, double retain, std::mt19937_64& rng) const;

 private:
  std::vector<DenseLayer> layers_;
};

// Mean squared error over all voxels and samples plus l2 * sum of squared
// weights (biases excluded). Fills `grad` when non-null.
double loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels, double l2,
                         const DropoutMasks* masks, Gradients* grad);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(const Mlp& net, double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);
  void step(Mlp& net, const Gradients& grad);

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long t_ = 0;
  Gradients m_;
  Gradients v_;
};

// Inputs and labels are column vectors; labels are stored once and shared by
// index, since window variants reuse the same handful of label images.
class TrainingSet {
 public:
  int add_label(Eigen::VectorXd label);
  void add(Eigen::VectorXd input, int label_id);
  void add(Eigen::VectorXd input, Eigen::VectorXd label) { add(std::move(input), add_label(std::move(label))); }

  std::size_t size() const { return inputs_.size(); }
  bool empty() const { return inputs_.empty(); }
  const Eigen::VectorXd& input(std::size_t i) const { return inputs_[i]; }
  const Eigen::VectorXd& label(std::size_t i) const { return labels_[static_cast<std::size_t>(label_ids_[i])]; }
  // Columns of the selected samples.
  void gather(std::span<const std::size_t> indices, Eigen::MatrixXd& inputs, Eigen::MatrixXd& labels) const;

 private:
  std::vector<Eigen::VectorXd> inputs_;
  std::vector<int> label_ids_;
  std::vector<Eigen::VectorXd> labels_;
};

class Trainer {
 public:
  Trainer(Mlp& net, const MlpSpec& spec, std::uint64_t seed);

  // One gradient step on the batch; returns the loss before the update.
  double train_step(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels);
  // Shuffled mini-batch pass; returns the mean batch loss.
  double train_epoch(const TrainingSet& set);

 private:
  Mlp& net_;
  MlpSpec spec_;
  AdamOptimizer adam_;
  std::mt19937_64 rng_;
};

class MlpEnsemble {
 public:
  MlpEnsemble() = default;
  MlpEnsemble(MlpSpec spec, std::vector<Mlp> members);

  const MlpSpec& spec() const { return spec_; }
  const std::vector<Mlp>& members() const { return members_; }
  std::vector<Mlp>& members() { return members_; }
  std::size_t size() const { return members_.size(); }

  // Element-wise median of the members' outputs; columns are samples.
  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) const;
  Eigen::VectorXd predict_vector(const Eigen::VectorXd& input) const;
  ImageFrame predict(const Eigen::VectorXd& input, int width, int height) const;

 private:
  MlpSpec spec_;
  std::vector<Mlp> members_;
};

struct TrainingReport {
  std::vector<std::vector<double>> epoch_loss;  // [member][epoch]
};

using EpochCallback = std::function<void(int member, int epoch, double loss)>;

// Member m is initialized and shuffled from spec.seed + m.
MlpEnsemble train_ensemble(const MlpSpec& spec, const TrainingSet& set, int members, TrainingReport* report = nullptr,
                           const EpochCallback& on_epoch = {});

double mean_squared_error(const MlpEnsemble& ensemble, const TrainingSet& set);

// Filled ellipse ((u - cu)/a)^2 + ((v - cv)/b)^2 <= 1 on a width x height grid.
ImageFrame rasterize_label(double center_u, double center_v, double semi_u, double semi_v, int width, int height);

// min(y_k / max_rss, 1).
Eigen::VectorXd normalize_input(const Eigen::VectorXd& y, double max_rss);

// Binary checkpoint: "TSEE", version byte, spec header, then little-endian
// float64 weights and biases for each member in layer order.
void save_checkpoint(const std::filesystem::path& path, const MlpEnsemble& ensemble);
void write_checkpoint(std::ostream& out, const MlpEnsemble& ensemble);
MlpEnsemble read_checkpoint(std::istream& in);
MlpEnsemble load_checkpoint(const std::filesystem::path& path);
// Rejects a checkpoint whose layer dimensions differ from `expected`.
MlpEnsemble load_checkpoint(const std::filesystem::path& path, const MlpSpec& expected);

}  // namespace tomo
