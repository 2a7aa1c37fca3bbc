#include "catexpand/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "catexpand/binary_io.hpp"

namespace catexpand {

const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "square";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "square") return Activation::Square;
  throw Error("unknown activation: " + name);
}

double activation_apply(Activation a, double u) {
  return a == Activation::Tanh ? std::tanh(u) : u * u;
}

double activation_derivative(Activation a, double u) {
  if (a == Activation::Tanh) {
    double t = std::tanh(u);
    return 1.0 - t * t;
  }
  return 2.0 * u;
}

void NetworkParams::check_shapes() const {
  int d = spec.total_dimension();
  int h = static_cast<int>(w1.rows());
  if (w1.cols() != d) throw Error("NetworkParams: W1 columns != one-hot dimension");
  if (b1.size() != h) throw Error("NetworkParams: b1 length != hidden units");
  if (w2.cols() != h) throw Error("NetworkParams: W2 columns != hidden units");
  if (w2.rows() != class_count || b2.size() != class_count)
    throw Error("NetworkParams: output shape != class count");
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite())
    throw Error("NetworkParams: non-finite parameter");
}

NetworkParams init_network(const CategorySpec& spec, int class_count,
                           int hidden_units, Activation activation,
                           std::uint64_t seed, double init_scale) {
  NetworkParams net;
  net.spec = spec;
  net.class_count = class_count;
  net.activation = activation;
  int d = spec.total_dimension();
  double s1 = init_scale > 0 ? init_scale : 1.0 / std::sqrt(static_cast<double>(d));
  double s2 = init_scale > 0 ? init_scale
                             : 1.0 / std::sqrt(static_cast<double>(hidden_units));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  net.w1.resize(hidden_units, d);
  for (int i = 0; i < hidden_units; ++i)
    for (int j = 0; j < d; ++j) net.w1(i, j) = s1 * u(rng);
  net.b1 = Eigen::VectorXd::Zero(hidden_units);
  net.w2.resize(class_count, hidden_units);
  for (int l = 0; l < class_count; ++l)
    for (int i = 0; i < hidden_units; ++i) net.w2(l, i) = s2 * u(rng);
  net.b2 = Eigen::VectorXd::Zero(class_count);
  return net;
}

Eigen::VectorXd forward_logits_sparse(const NetworkParams& net,
                                      const std::vector<int>& active) {
  Eigen::VectorXd z1 = net.b1;
  for (int j : active) {
    if (j < 0 || j >= net.w1.cols()) throw Error("forward_logits: index out of range");
    z1 += net.w1.col(j);
  }
  Eigen::VectorXd a(z1.size());
  for (Eigen::Index i = 0; i < z1.size(); ++i)
    a[i] = activation_apply(net.activation, z1[i]);
  return net.w2 * a + net.b2;
}

Eigen::VectorXd forward_logits(const NetworkParams& net, const ProbeVector& x) {
  if (x.size() != net.spec.total_dimension())
    throw Error("forward_logits: input dimension mismatch");
  return forward_logits_sparse(net, x.active_indices());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (!logits.allFinite()) throw Error("softmax: non-finite input");
  Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

namespace {

std::vector<int> active_indices_of(const CategoricalSample& s,
                                   const CategorySpec& spec) {
  std::vector<int> idx(s.categories.size());
  for (std::size_t i = 0; i < s.categories.size(); ++i)
    idx[i] = spec.offset(static_cast<int>(i)) + s.categories[i];
  return idx;
}

double parameter_square_sum(const NetworkParams& net) {
  return net.w1.squaredNorm() + net.b1.squaredNorm() + net.w2.squaredNorm() +
         net.b2.squaredNorm();
}

}  // namespace

double loss_and_gradients(const NetworkParams& net, const LabeledDataset& data,
                          const std::vector<std::size_t>& batch, double l2,
                          Gradients* grads) {
  const int h = net.hidden_units();
  if (grads) {
    grads->w1 = Eigen::MatrixXd::Zero(h, net.w1.cols());
    grads->b1 = Eigen::VectorXd::Zero(h);
    grads->w2 = Eigen::MatrixXd::Zero(net.class_count, h);
    grads->b2 = Eigen::VectorXd::Zero(net.class_count);
  }
  double weight_sum = 0.0;
  for (std::size_t m : batch) weight_sum += data.weights[m];
  if (weight_sum <= 0.0) throw Error("loss: batch has no positive weight");

  double ce_sum = 0.0;
  Eigen::VectorXd z1(h), a(h), fprime(h);
  for (std::size_t m : batch) {
    const double w = data.weights[m];
    if (w == 0.0) continue;
    auto active = active_indices_of(data.samples[m], data.spec);
    z1 = net.b1;
    for (int j : active) z1 += net.w1.col(j);
    for (int i = 0; i < h; ++i) a[i] = activation_apply(net.activation, z1[i]);
    Eigen::VectorXd logits = net.w2 * a + net.b2;
    // log-softmax for a stable cross-entropy
    double mx = logits.maxCoeff();
    double lse = std::log((logits.array() - mx).exp().sum()) + mx;
    ce_sum += w * (lse - logits[data.labels[m]]);
    if (grads) {
      Eigen::VectorXd dlogits = (logits.array() - lse).exp();  // = softmax
      dlogits[data.labels[m]] -= 1.0;
      dlogits *= w / weight_sum;
      grads->b2 += dlogits;
      grads->w2 += dlogits * a.transpose();
      Eigen::VectorXd da = net.w2.transpose() * dlogits;
      for (int i = 0; i < h; ++i)
        fprime[i] = da[i] * activation_derivative(net.activation, z1[i]);
      grads->b1 += fprime;
      for (int j : active) grads->w1.col(j) += fprime;
    }
  }
  double loss = ce_sum / weight_sum + l2 * parameter_square_sum(net);
  if (grads && l2 > 0.0) {
    grads->w1 += 2.0 * l2 * net.w1;
    grads->b1 += 2.0 * l2 * net.b1;
    grads->w2 += 2.0 * l2 * net.w2;
    grads->b2 += 2.0 * l2 * net.b2;
  }
  return loss;
}

namespace {

struct AdamState {
  Eigen::MatrixXd mw1, vw1, mw2, vw2;
  Eigen::VectorXd mb1, vb1, mb2, vb2;
  long step = 0;

  explicit AdamState(const NetworkParams& net) {
    mw1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
    vw1 = mw1;
    mw2 = Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols());
    vw2 = mw2;
    mb1 = Eigen::VectorXd::Zero(net.b1.size());
    vb1 = mb1;
    mb2 = Eigen::VectorXd::Zero(net.b2.size());
    vb2 = mb2;
  }
};

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, long step,
                 const TrainConfig& c) {
  m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
  v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(step));
  double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(step));
  param.array() -= c.learning_rate * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + c.adam_epsilon);
}

}  // namespace

std::pair<NetworkParams, TrainReport> train(const NetworkParams& initial,
                                            const LabeledDataset& data,
                                            const TrainConfig& config) {
  initial.check_shapes();
  data.validate();
  if (!(initial.spec == data.spec)) throw Error("train: spec mismatch");
  if (config.learning_rate <= 0) throw Error("train: learning rate must be positive");
  if (config.batch_size <= 0) throw Error("train: batch size must be positive");
  double total_weight = std::accumulate(data.weights.begin(), data.weights.end(), 0.0);
  if (!(total_weight > 0.0)) throw Error("train: no sample with positive weight");

  NetworkParams net = initial;
  TrainReport report;
  AdamState adam(net);
  std::mt19937_64 rng(config.rng_seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Gradients grads;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_ce = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(order.size(),
                                 start + static_cast<std::size_t>(config.batch_size));
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
      double batch_weight = 0.0;
      for (std::size_t m : batch) batch_weight += data.weights[m];
      if (batch_weight <= 0.0) continue;
      double loss = loss_and_gradients(net, data, batch, config.l2_coefficient, &grads);
      if (!std::isfinite(loss))
        throw TrainingDivergedError(
            epoch, "training diverged: non-finite loss at epoch " + std::to_string(epoch));
      epoch_ce += (loss - config.l2_coefficient * parameter_square_sum(net)) *
                  batch_weight;
      ++adam.step;
      adam_update(net.w1, grads.w1, adam.mw1, adam.vw1, adam.step, config);
      adam_update(net.b1, grads.b1, adam.mb1, adam.vb1, adam.step, config);
      adam_update(net.w2, grads.w2, adam.mw2, adam.vw2, adam.step, config);
      adam_update(net.b2, grads.b2, adam.mb2, adam.vb2, adam.step, config);
    }
    report.epoch_losses.push_back(
        epoch_ce / total_weight +
        config.l2_coefficient * parameter_square_sum(net));
  }
  report.final_train_accuracy = accuracy(net, data);
  report.convergence_residual = convergence_residual(net, data);
  return {std::move(net), report};
}

double accuracy(const NetworkParams& net, const LabeledDataset& data) {
  double correct = 0.0, total = 0.0;
  for (std::size_t m = 0; m < data.size(); ++m) {
    auto active = active_indices_of(data.samples[m], data.spec);
    Eigen::VectorXd logits = forward_logits_sparse(net, active);
    Eigen::Index best;
    logits.maxCoeff(&best);
    total += data.weights[m];
    if (static_cast<int>(best) == data.labels[m]) correct += data.weights[m];
  }
  return total > 0 ? correct / total : 0.0;
}

double convergence_residual(const NetworkParams& net,
                            const LabeledDataset& data) {
  net.check_shapes();
  data.validate();
  const int d = data.spec.total_dimension();
  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(net.class_count, d);
  double total_weight = 0.0;
  for (std::size_t m = 0; m < data.size(); ++m) {
    const double w = data.weights[m];
    total_weight += w;
    if (w == 0.0) continue;
    auto active = active_indices_of(data.samples[m], data.spec);
    Eigen::VectorXd p = softmax(forward_logits_sparse(net, active));
    for (int j : active) {
      diff.col(j) -= w * p;
      diff(data.labels[m], j) += w;
    }
  }
  if (total_weight <= 0.0) throw Error("convergence_residual: zero total weight");
  return diff.cwiseAbs().maxCoeff() / total_weight;
}

namespace {
constexpr std::uint32_t kNetworkVersion = 1;
}

void save_network(const NetworkParams& net, const std::string& path) {
  net.check_shapes();
  BinaryWriter w(path);
  w.magic("CNET");
  w.u32(kNetworkVersion);
  w.u32(static_cast<std::uint32_t>(net.spec.feature_count()));
  for (int c : net.spec.category_counts()) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(net.class_count));
  w.u32(static_cast<std::uint32_t>(net.hidden_units()));
  w.u8(static_cast<std::uint8_t>(net.activation));
  // row-major f64 tensors
  for (Eigen::Index i = 0; i < net.w1.rows(); ++i)
    for (Eigen::Index j = 0; j < net.w1.cols(); ++j) w.f64(net.w1(i, j));
  w.f64_array(net.b1.data(), static_cast<std::size_t>(net.b1.size()));
  for (Eigen::Index i = 0; i < net.w2.rows(); ++i)
    for (Eigen::Index j = 0; j < net.w2.cols(); ++j) w.f64(net.w2(i, j));
  w.f64_array(net.b2.data(), static_cast<std::size_t>(net.b2.size()));
}

NetworkParams load_network(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic("CNET");
  r.expect_version(kNetworkVersion);
  NetworkParams net;
  int n = static_cast<int>(r.u32());
  std::vector<int> counts(n);
  for (int& c : counts) c = static_cast<int>(r.u32());
  net.spec = CategorySpec(counts);
  net.class_count = static_cast<int>(r.u32());
  int h = static_cast<int>(r.u32());
  net.activation = static_cast<Activation>(r.u8());
  int d = net.spec.total_dimension();
  net.w1.resize(h, d);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < d; ++j) net.w1(i, j) = r.f64();
  net.b1.resize(h);
  r.f64_array(net.b1.data(), static_cast<std::size_t>(h));
  net.w2.resize(net.class_count, h);
  for (int i = 0; i < net.class_count; ++i)
    for (int j = 0; j < h; ++j) net.w2(i, j) = r.f64();
  net.b2.resize(net.class_count);
  r.f64_array(net.b2.data(), static_cast<std::size_t>(net.class_count));
  net.check_shapes();
  return net;
}

}  // namespace catexpand
