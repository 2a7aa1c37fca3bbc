#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "catexpand/categorical.hpp"

namespace catexpand {

enum class Activation : std::uint8_t { Tanh = 0, Square = 1 };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// One-hidden-layer softmax classifier over a flattened one-hot input:
/// logits(x) = W2 * f(W1 * x + b1) + b2.
struct NetworkParams {
  CategorySpec spec;
  int class_count = 0;
  Activation activation = Activation::Tanh;
  Eigen::MatrixXd w1;  // H x D
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // K x H
  Eigen::VectorXd b2;  // K

  int hidden_units() const { return static_cast<int>(b1.size()); }
  void check_shapes() const;
};

struct TrainConfig {
  double learning_rate = 0.005;
  int epochs = 100;
  int batch_size = 32;
  double l2_coefficient = 0.0;  // applied to all weights and biases
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t rng_seed = 0;
  double init_scale = 0.0;  // 0 -> 1/sqrt(fan-in) default
};

struct TrainReport {
  std::vector<double> epoch_losses;  // weighted CE + L2, one per epoch
  double final_train_accuracy = 0.0;
  double final_validation_accuracy = -1.0;  // negative when no split given
  double convergence_residual = -1.0;
};

double activation_apply(Activation a, double u);
double activation_derivative(Activation a, double u);

/// Thrown when the loss becomes non-finite; names the offending epoch.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// Fresh network with uniform [-s, s] weights (s = init_scale or the
/// 1/sqrt(fan-in) default) and zero biases; deterministic given seed.
NetworkParams init_network(const CategorySpec& spec, int class_count,
                           int hidden_units, Activation activation,
                           std::uint64_t seed, double init_scale = 0.0);

/// Pre-softmax outputs; defined for any binary vector including invalid
/// probes.
Eigen::VectorXd forward_logits(const NetworkParams& net, const ProbeVector& x);

/// Same, taking the active flat indices of a sparse binary input.
Eigen::VectorXd forward_logits_sparse(const NetworkParams& net,
                                      const std::vector<int>& active);

/// Numerically stable softmax (max-shifted before exponentiation).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct Gradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

/// Weighted-mean cross-entropy over the given sample indices plus
/// l2 * sum of squares of all parameters; gradients via backpropagation.
/// Exposed for the finite-difference gradient check.
double loss_and_gradients(const NetworkParams& net, const LabeledDataset& data,
                          const std::vector<std::size_t>& batch, double l2,
                          Gradients* grads);

/// Adam training over shuffled mini-batches; deterministic given
/// config.rng_seed (fixed shuffle and accumulation order).
std::pair<NetworkParams, TrainReport> train(const NetworkParams& net,
                                            const LabeledDataset& data,
                                            const TrainConfig& config);

double accuracy(const NetworkParams& net, const LabeledDataset& data);

/// Moment-matching diagnostic: max over (class, feature, category) of
/// |<label * x> - <prediction * x>| under the weighted sample average.
/// Zero at the unregularized cross-entropy stationary point.
double convergence_residual(const NetworkParams& net,
                            const LabeledDataset& data);

// Model container ("CNET").
void save_network(const NetworkParams& net, const std::string& path);
NetworkParams load_network(const std::string& path);

}  // namespace catexpand
