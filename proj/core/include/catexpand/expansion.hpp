#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "catexpand/categorical.hpp"
#include "catexpand/network.hpp"

namespace catexpand {

/// Pure function from a binary probe to K logits; the black box being
/// expanded.
using LogitEvaluator = std::function<Eigen::VectorXd(const ProbeVector&)>;

/// Multilinear expansion of the logits up to second order. Second-order
/// blocks are stored once per unordered feature pair i<j, in (i,j)
/// lexicographic order; block (i,j) holds K * n_i * n_j values indexed
/// (class, alpha, beta). Accumulation is double precision throughout.
class ExpansionCoefficients {
 public:
  ExpansionCoefficients() = default;
  ExpansionCoefficients(const CategorySpec& spec, int class_count, int max_order);

  const CategorySpec& spec() const { return spec_; }
  int class_count() const { return class_count_; }
  int max_order() const { return max_order_; }
  bool gauge_fixed() const { return gauge_fixed_; }
  void set_gauge_fixed(bool v) { gauge_fixed_ = v; }

  Eigen::VectorXd& order0() { return order0_; }
  const Eigen::VectorXd& order0() const { return order0_; }

  // order1(class, flat one-hot index), K x D
  Eigen::MatrixXd& order1() { return order1_; }
  const Eigen::MatrixXd& order1() const { return order1_; }

  int pair_count() const { return pair_count_; }
  /// Lexicographic index of the unordered pair i<j.
  int pair_index(int i, int j) const;
  std::pair<int, int> pair_features(int p) const;

  double order2(int i, int j, int cls, int alpha, int beta) const;
  void set_order2(int i, int j, int cls, int alpha, int beta, double v);
  double* pair_block(int p) { return order2_.data() + block_offsets_[p]; }
  const double* pair_block(int p) const { return order2_.data() + block_offsets_[p]; }
  std::size_t pair_block_size(int p) const {
    return block_offsets_[p + 1] - block_offsets_[p];
  }
  std::size_t order2_value_count() const { return order2_.size(); }

  void check_finite() const;

 private:
  CategorySpec spec_;
  int class_count_ = 0;
  int max_order_ = 0;
  bool gauge_fixed_ = false;
  int pair_count_ = 0;
  Eigen::VectorXd order0_;
  Eigen::MatrixXd order1_;
  std::vector<double> order2_;
  std::vector<std::size_t> block_offsets_;  // pair_count + 1 entries
};

/// Inclusion-exclusion extraction by probing the evaluator at synthetic
/// inputs. Uses exactly 1 + D + sum_{i<j} n_i n_j evaluator calls at
/// max_order 2. `threads` caps the pair-block parallelism (0 = auto).
ExpansionCoefficients probe_expand(const LogitEvaluator& evaluator,
                                   const CategorySpec& spec, int class_count,
                                   int max_order, int threads = 0);

/// Closed form for one-hidden-layer networks; entrywise equal to
/// probe_expand(forward_logits). Hidden pre-activations f(W1 col + b1) are
/// computed once per input index and reused across all pairs.
ExpansionCoefficients closed_form_expand(const NetworkParams& net,
                                         int max_order, int threads = 0);

/// Alternating inclusion-exclusion sum over all subsets of `entries`:
/// sum_{T subseteq entries} (-1)^{|entries|-|T|} z(probe(T)).
/// Agrees with probe_expand at orders 0..2; exact at any order.
Eigen::VectorXd mobius_coefficient(const LogitEvaluator& evaluator,
                                   const CategorySpec& spec,
                                   const std::vector<std::pair<int, int>>& entries,
                                   int subset_cap = 1 << 20);

/// Evaluates the stored expansion on a valid sample, keeping terms up to
/// `order`.
Eigen::VectorXd truncated_logits(const ExpansionCoefficients& coeffs,
                                 const CategoricalSample& x, int order);

struct TruncationReport {
  double full_accuracy = 0.0;
  double order2_accuracy = 0.0;
  double order1_accuracy = 0.0;
};

/// Argmax accuracies of the whole network and of its order-2 / order-1
/// truncations on the given dataset.
TruncationReport truncation_report(const NetworkParams& net,
                                   const ExpansionCoefficients& coeffs,
                                   const LabeledDataset& data);

// Coefficient container ("CEXP"): order0/order1 as f64, order2 blocks as f32
// in (i,j)-lexicographic order.
void save_coefficients(const ExpansionCoefficients& coeffs,
                       const std::string& path);
ExpansionCoefficients load_coefficients(const std::string& path);

}  // namespace catexpand
