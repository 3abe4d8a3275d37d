// SPDX-License-Identifier: Apache-2.0

#include "tomo/dnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

namespace tomo {
namespace {

constexpr char kMagic[4] = {'T', 'S', 'E', 'E'};
constexpr std::uint8_t kCheckpointVersion = 1;

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kTanh:
      return z.array().tanh().matrix();
    case Activation::kSigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  throw std::invalid_argument("unknown activation");
}

// Derivative expressed through the pre-activation z and output a = act(z).
Eigen::MatrixXd activation_slope(Activation act, const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) {
  switch (act) {
    case Activation::kRelu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh:
      return (1.0 - a.array().square()).matrix();
    case Activation::kSigmoid:
      return (a.array() * (1.0 - a.array())).matrix();
  }
  throw std::invalid_argument("unknown activation");
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_bytes(std::istream& in, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("checkpoint: unexpected end of file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_bytes(in, 4)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_bytes(in, 8)); }

double median3_or_more(std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n == 1) return v[0];
  std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(n / 2));
  return 0.5 * (lo + hi);
}

}  // namespace

void MlpSpec::validate() const {
  if (activations.empty()) throw std::invalid_argument("MlpSpec: at least one layer is required");
  if (layer_dims.size() != activations.size() + 1) {
    throw std::invalid_argument("MlpSpec: layer_dims must have one more entry than activations");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw std::invalid_argument("MlpSpec: layer dimensions must be positive");
  }
  if (!(dropout_retain > 0.0 && dropout_retain <= 1.0)) throw std::invalid_argument("MlpSpec: retain must be in (0, 1]");
  if (l2_coeff < 0.0) throw std::invalid_argument("MlpSpec: l2 must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("MlpSpec: learning rate must be > 0");
  if (batch_size <= 0) throw std::invalid_argument("MlpSpec: batch size must be > 0");
  if (epochs < 0) throw std::invalid_argument("MlpSpec: epochs must be >= 0");
}

MlpSpec MlpSpec::for_layout(int num_tags, int k_x, int k_y, int p_x, int p_y) {
  if (num_tags <= 0 || k_x < 2 || k_y < 2 || p_x <= 0 || p_y <= 0) {
    throw std::invalid_argument("MlpSpec: invalid layout dimensions");
  }
  const int k = num_tags;
  MlpSpec spec;
  spec.layer_dims = {k, (3 * k + 1) / 2, 3 * k, 3 * k, 2 * k, 2 * k, p_x * p_y * (k_x - 1) * (k_y - 1)};
  spec.activations = {Activation::kRelu, Activation::kRelu,    Activation::kTanh,
                      Activation::kTanh, Activation::kSigmoid, Activation::kSigmoid};
  return spec;
}

Mlp::Mlp(const MlpSpec& spec) {
  spec.validate();
  for (int l = 0; l < spec.layer_count(); ++l) {
    DenseLayer layer;
    layer.weight = Eigen::MatrixXd::Zero(spec.layer_dims[l + 1], spec.layer_dims[l]);
    layer.bias = Eigen::VectorXd::Zero(spec.layer_dims[l + 1]);
    layer.activation = spec.activations[static_cast<std::size_t>(l)];
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::initialized(const MlpSpec& spec, std::uint64_t seed) {
  Mlp net(spec);
  std::mt19937_64 rng(seed);
  for (DenseLayer& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = dist(rng);
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (layers_.empty()) throw std::logic_error("Mlp: network has no layers");
  if (inputs.rows() != input_dim()) throw std::invalid_argument("Mlp: input dimension mismatch");
  Eigen::MatrixXd a = inputs;
  for (const DenseLayer& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    a = activate(layer.activation, z);
  }
  return a;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const { return forward_batch(input); }

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input, bool training, std::mt19937_64& rng, double retain) const {
  if (!training) return forward(input);
  const DropoutMasks masks = sample_masks(1, retain, rng);
  return trace(input, &masks).back();
}

DropoutMasks Mlp::sample_masks(Eigen::Index batch, double retain, std::mt19937_64& rng) const {
  if (!(retain > 0.0 && retain <= 1.0)) throw std::invalid_argument("Mlp: retain must be in (0, 1]");
  DropoutMasks masks;
  masks.reserve(layers_.size());
  std::bernoulli_distribution keep(retain);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l + 1 == layers_.size()) {
      masks.emplace_back();
      continue;
    }
    Eigen::MatrixXd m(layers_[l].weight.rows(), batch);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = keep(rng) ? 1.0 / retain : 0.0;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

std::vector<Eigen::MatrixXd> Mlp::trace(const Eigen::MatrixXd& inputs, const DropoutMasks* masks) const {
  if (layers_.empty()) throw std::logic_error("Mlp: network has no layers");
  if (inputs.rows() != input_dim()) throw std::invalid_argument("Mlp: input dimension mismatch");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(layers_.size());
  const Eigen::MatrixXd* a = &inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * *a;
    z.colwise() += layers_[l].bias;
    Eigen::MatrixXd act = activate(layers_[l].activation, z);
    if (masks != nullptr && l + 1 < layers_.size()) act.array() *= (*masks)[l].array();
    out.push_back(std::move(act));
    a = &out.back();
  }
  return out;
}

double loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels, double l2,
                         const DropoutMasks* masks, Gradients* grad) {
  const auto& layers = net.layers();
  if (inputs.cols() == 0) throw std::invalid_argument("loss: batch is empty");
  if (labels.cols() != inputs.cols() || labels.rows() != net.output_dim()) {
    throw std::invalid_argument("loss: labels do not match the batch");
  }
  const std::size_t n_layers = layers.size();
  std::vector<Eigen::MatrixXd> slope(n_layers);  // d post[l] / d z_l, dropout mask included
  std::vector<Eigen::MatrixXd> post(n_layers);
  const Eigen::MatrixXd* a = &inputs;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = layers[l].weight * *a;
    z.colwise() += layers[l].bias;
    post[l] = activate(layers[l].activation, z);
    if (grad != nullptr) slope[l] = activation_slope(layers[l].activation, z, post[l]);
    if (masks != nullptr && l + 1 < n_layers) {
      post[l].array() *= (*masks)[l].array();
      if (grad != nullptr) slope[l].array() *= (*masks)[l].array();
    }
    a = &post[l];
  }
  const double count = static_cast<double>(labels.size());
  const Eigen::MatrixXd residual = post.back() - labels;
  double loss = residual.squaredNorm() / count;
  for (const DenseLayer& layer : layers) loss += l2 * layer.weight.squaredNorm();
  if (grad == nullptr) return loss;

  grad->weight.resize(n_layers);
  grad->bias.resize(n_layers);
  Eigen::MatrixXd delta = (2.0 / count) * residual;
  for (std::size_t i = n_layers; i-- > 0;) {
    delta.array() *= slope[i].array();
    const Eigen::MatrixXd& below = i == 0 ? inputs : post[i - 1];
    grad->weight[i].noalias() = delta * below.transpose();
    grad->weight[i] += 2.0 * l2 * layers[i].weight;
    grad->bias[i] = delta.rowwise().sum();
    if (i > 0) delta = layers[i].weight.transpose() * delta;
  }
  return loss;
}

AdamOptimizer::AdamOptimizer(const Mlp& net, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const DenseLayer& layer : net.layers()) {
    m_.weight.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    v_.weight.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    m_.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    v_.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
}

void AdamOptimizer::step(Mlp& net, const Gradients& grad) {
  auto& layers = net.layers();
  if (grad.weight.size() != layers.size() || m_.weight.size() != layers.size()) {
    throw std::invalid_argument("Adam: gradient does not match the network");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon_);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grad.weight[l], m_.weight[l], v_.weight[l]);
    update(layers[l].bias, grad.bias[l], m_.bias[l], v_.bias[l]);
  }
}

int TrainingSet::add_label(Eigen::VectorXd label) {
  if (!labels_.empty() && label.size() != labels_.front().size()) {
    throw std::invalid_argument("TrainingSet: label length differs from earlier labels");
  }
  if ((label.array() < 0.0).any() || (label.array() > 1.0).any()) {
    throw std::invalid_argument("TrainingSet: label values must lie in [0, 1]");
  }
  labels_.push_back(std::move(label));
  return static_cast<int>(labels_.size()) - 1;
}

void TrainingSet::add(Eigen::VectorXd input, int label_id) {
  if (label_id < 0 || static_cast<std::size_t>(label_id) >= labels_.size()) {
    throw std::out_of_range("TrainingSet: unknown label id");
  }
  if (!inputs_.empty() && input.size() != inputs_.front().size()) {
    throw std::invalid_argument("TrainingSet: input length differs from earlier inputs");
  }
  if ((input.array() < 0.0).any() || (input.array() > 1.0).any()) {
    throw std::invalid_argument("TrainingSet: input values must lie in [0, 1]");
  }
  inputs_.push_back(std::move(input));
  label_ids_.push_back(label_id);
}

void TrainingSet::gather(std::span<const std::size_t> indices, Eigen::MatrixXd& inputs,
                         Eigen::MatrixXd& labels) const {
  if (empty()) throw std::logic_error("TrainingSet: empty");
  const auto n = static_cast<Eigen::Index>(indices.size());
  inputs.resize(inputs_.front().size(), n);
  labels.resize(labels_.front().size(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const std::size_t i = indices[static_cast<std::size_t>(c)];
    inputs.col(c) = inputs_.at(i);
    labels.col(c) = label(i);
  }
}

Trainer::Trainer(Mlp& net, const MlpSpec& spec, std::uint64_t seed)
    : net_(net), spec_(spec), adam_(net, spec.learning_rate), rng_(seed) {
  spec_.validate();
}

double Trainer::train_step(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels) {
  Gradients grad;
  double loss = 0.0;
  if (spec_.dropout_retain < 1.0) {
    const DropoutMasks masks = net_.sample_masks(inputs.cols(), spec_.dropout_retain, rng_);
    loss = loss_and_gradient(net_, inputs, labels, spec_.l2_coeff, &masks, &grad);
  } else {
    loss = loss_and_gradient(net_, inputs, labels, spec_.l2_coeff, nullptr, &grad);
  }
  if (!std::isfinite(loss)) throw TrainingDiverged("training diverged: loss is not finite");
  adam_.step(net_, grad);
  return loss;
}

double Trainer::train_epoch(const TrainingSet& set) {
  if (set.empty()) throw std::invalid_argument("train_epoch: training set is empty");
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);
  const auto batch = static_cast<std::size_t>(spec_.batch_size);
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  double total = 0.0;
  int steps = 0;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t len = std::min(batch, order.size() - start);
    set.gather(std::span<const std::size_t>(order).subspan(start, len), x, y);
    total += train_step(x, y);
    ++steps;
  }
  return total / steps;
}

MlpEnsemble::MlpEnsemble(MlpSpec spec, std::vector<Mlp> members) : spec_(std::move(spec)), members_(std::move(members)) {
  spec_.validate();
  for (const Mlp& m : members_) {
    if (m.layers().size() != static_cast<std::size_t>(spec_.layer_count())) {
      throw std::invalid_argument("MlpEnsemble: member depth differs from the spec");
    }
    for (int l = 0; l < spec_.layer_count(); ++l) {
      const DenseLayer& layer = m.layers()[static_cast<std::size_t>(l)];
      if (layer.weight.cols() != spec_.layer_dims[l] || layer.weight.rows() != spec_.layer_dims[l + 1]) {
        throw std::invalid_argument("MlpEnsemble: member dimensions differ from the spec");
      }
    }
  }
}

Eigen::MatrixXd MlpEnsemble::predict_batch(const Eigen::MatrixXd& inputs) const {
  if (members_.empty()) throw std::logic_error("MlpEnsemble: ensemble is empty");
  if (members_.size() == 1) return members_.front().forward_batch(inputs);
  std::vector<Eigen::MatrixXd> outs;
  outs.reserve(members_.size());
  for (const Mlp& m : members_) outs.push_back(m.forward_batch(inputs));
  Eigen::MatrixXd result(outs.front().rows(), outs.front().cols());
  std::vector<double> v(members_.size());
  for (Eigen::Index c = 0; c < result.cols(); ++c) {
    for (Eigen::Index r = 0; r < result.rows(); ++r) {
      for (std::size_t i = 0; i < outs.size(); ++i) v[i] = outs[i](r, c);
      result(r, c) = median3_or_more(v);
    }
  }
  return result;
}

Eigen::VectorXd MlpEnsemble::predict_vector(const Eigen::VectorXd& input) const { return predict_batch(input); }

ImageFrame MlpEnsemble::predict(const Eigen::VectorXd& input, int width, int height) const {
  Eigen::VectorXd out = predict_vector(input);
  if (out.size() != static_cast<Eigen::Index>(width) * height) {
    throw std::invalid_argument("MlpEnsemble: output size does not match the image dimensions");
  }
  ImageFrame frame(width, height);
  frame.values = std::move(out);
  return frame;
}

MlpEnsemble train_ensemble(const MlpSpec& spec, const TrainingSet& set, int members, TrainingReport* report,
                           const EpochCallback& on_epoch) {
  spec.validate();
  if (members <= 0) throw std::invalid_argument("train_ensemble: member count must be > 0");
  if (set.empty()) throw std::invalid_argument("train_ensemble: training set is empty");
  if (set.input(0).size() != spec.input_dim() || set.label(0).size() != spec.output_dim()) {
    throw std::invalid_argument("train_ensemble: training set dimensions do not match the spec");
  }
  std::vector<Mlp> nets;
  if (report != nullptr) report->epoch_loss.assign(static_cast<std::size_t>(members), {});
  for (int m = 0; m < members; ++m) {
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(m);
    Mlp net = Mlp::initialized(spec, seed);
    Trainer trainer(net, spec, seed ^ 0x9e3779b97f4a7c15ull);
    for (int e = 0; e < spec.epochs; ++e) {
      const double loss = trainer.train_epoch(set);
      if (report != nullptr) report->epoch_loss[static_cast<std::size_t>(m)].push_back(loss);
      if (on_epoch) on_epoch(m, e, loss);
    }
    nets.push_back(std::move(net));
  }
  return MlpEnsemble(spec, std::move(nets));
}

double mean_squared_error(const MlpEnsemble& ensemble, const TrainingSet& set) {
  if (set.empty()) throw std::invalid_argument("mean_squared_error: set is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    total += (ensemble.predict_vector(set.input(i)) - set.label(i)).squaredNorm();
  }
  return total / static_cast<double>(set.size() * static_cast<std::size_t>(set.label(0).size()));
}

ImageFrame rasterize_label(double center_u, double center_v, double semi_u, double semi_v, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("rasterize_label: empty grid");
  if (!(semi_u > 0.0 && semi_v > 0.0)) throw std::invalid_argument("rasterize_label: semi-axes must be > 0");
  if (center_u < 0.0 || center_u > width - 1 || center_v < 0.0 || center_v > height - 1) {
    throw std::out_of_range("rasterize_label: center lies outside the grid");
  }
  ImageFrame frame(width, height);
  const int u0 = std::max(0, static_cast<int>(std::floor(center_u - semi_u)));
  const int u1 = std::min(width - 1, static_cast<int>(std::ceil(center_u + semi_u)));
  const int v0 = std::max(0, static_cast<int>(std::floor(center_v - semi_v)));
  const int v1 = std::min(height - 1, static_cast<int>(std::ceil(center_v + semi_v)));
  for (int v = v0; v <= v1; ++v) {
    const double dv = (v - center_v) / semi_v;
    for (int u = u0; u <= u1; ++u) {
      const double du = (u - center_u) / semi_u;
      if (du * du + dv * dv <= 1.0) frame.at(u, v) = 1.0;
    }
  }
  return frame;
}

Eigen::VectorXd normalize_input(const Eigen::VectorXd& y, double max_rss) {
  if (!(max_rss > 0.0)) throw std::invalid_argument("normalize_input: max_rss must be > 0");
  return (y / max_rss).cwiseMax(0.0).cwiseMin(1.0);
}

void write_checkpoint(std::ostream& out, const MlpEnsemble& ensemble) {
  const MlpSpec& spec = ensemble.spec();
  out.write(kMagic, 4);
  out.put(static_cast<char>(kCheckpointVersion));
  put_u32(out, static_cast<std::uint32_t>(ensemble.size()));
  put_u32(out, static_cast<std::uint32_t>(spec.layer_count()));
  for (int d : spec.layer_dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (Activation a : spec.activations) out.put(static_cast<char>(a));
  put_f64(out, spec.dropout_retain);
  put_f64(out, spec.l2_coeff);
  put_f64(out, spec.learning_rate);
  put_u32(out, static_cast<std::uint32_t>(spec.batch_size));
  put_u32(out, static_cast<std::uint32_t>(spec.epochs));
  put_u64(out, spec.seed);
  for (const Mlp& m : ensemble.members()) {
    for (const DenseLayer& layer : m.layers()) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put_f64(out, layer.weight(r, c));
      }
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put_f64(out, layer.bias[r]);
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

MlpEnsemble read_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw std::runtime_error("checkpoint: bad magic");
  const int version = in.get();
  if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
  const std::uint32_t members = get_u32(in);
  const std::uint32_t n_layers = get_u32(in);
  if (n_layers == 0 || n_layers > 64) throw std::runtime_error("checkpoint: implausible layer count");
  MlpSpec spec;
  for (std::uint32_t i = 0; i <= n_layers; ++i) spec.layer_dims.push_back(static_cast<int>(get_u32(in)));
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const int a = in.get();
    if (a < 0 || a > 2) throw std::runtime_error("checkpoint: unknown activation code");
    spec.activations.push_back(static_cast<Activation>(a));
  }
  spec.dropout_retain = get_f64(in);
  spec.l2_coeff = get_f64(in);
  spec.learning_rate = get_f64(in);
  spec.batch_size = static_cast<int>(get_u32(in));
  spec.epochs = static_cast<int>(get_u32(in));
  spec.seed = get_bytes(in, 8);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
  std::vector<Mlp> nets;
  for (std::uint32_t m = 0; m < members; ++m) {
    Mlp net(spec);
    for (DenseLayer& layer : net.layers()) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = get_f64(in);
      }
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = get_f64(in);
    }
    nets.push_back(std::move(net));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("checkpoint: trailing bytes");
  return MlpEnsemble(std::move(spec), std::move(nets));
}

void save_checkpoint(const std::filesystem::path& path, const MlpEnsemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  write_checkpoint(out, ensemble);
}

MlpEnsemble load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

MlpEnsemble load_checkpoint(const std::filesystem::path& path, const MlpSpec& expected) {
  MlpEnsemble e = load_checkpoint(path);
  if (e.spec().layer_dims != expected.layer_dims) {
    throw std::runtime_error("checkpoint: layer dimensions do not match the configured network");
  }
  return e;
}

}  // namespace tomo
