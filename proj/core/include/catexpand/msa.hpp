#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "catexpand/categorical.hpp"
#include "catexpand/expansion.hpp"
#include "catexpand/network.hpp"

namespace catexpand {

constexpr int kAminoAcidAlphabet = 21;  // 20 amino acids + gap
constexpr int kGapCategory = 20;

/// Aligned categorical sequences with per-sequence sample weights.
struct WeightedAlignment {
  int length = 0;  // L
  int alphabet = kAminoAcidAlphabet;
  std::vector<std::vector<std::uint8_t>> sequences;  // M rows of length L
  std::vector<double> weights;
  std::vector<std::string> identifiers;

  std::size_t count() const { return sequences.size(); }
  double effective_count() const;
};

/// Aligned FASTA ingestion. Uppercase letters map to amino-acid categories
/// 0-19, '-' and unknown letters to the gap category. Lowercase letters and
/// '.' (insert states) are dropped when remove_inserts is set, rejected
/// otherwise.
WeightedAlignment load_alignment(const std::string& path,
                                 bool remove_inserts = true);

/// Keeps sequences whose gap fraction is <= max_gap_fraction (strictly-more-
/// than removal).
WeightedAlignment filter_gaps(const WeightedAlignment& msa,
                              double max_gap_fraction);

/// weight_m = 1 / #{m' : identity(m, m') > threshold}, the set including m
/// itself. Blocked over sequence pairs and parallelized; subsample_cap > 0
/// bounds the quadratic cost by seeded reservoir subsampling.
WeightedAlignment compute_weights(const WeightedAlignment& msa,
                                  double identity_threshold, int threads = 0,
                                  int subsample_cap = 0,
                                  std::uint64_t subsample_seed = 0);

struct PositionNetConfig {
  int hidden_units = 32;
  double learning_rate = 0.01;
  int epochs = 500;
  int batch_size = 128;
  double l2 = 0.01;
  std::uint64_t seed = 0;
  int threads = 0;
  Activation activation = Activation::Square;
};

/// One classifier per position k: inputs are the one-hot encodings of the
/// other L-1 columns, output is column k. Identical architecture and
/// hyperparameters at every position; per-position seed = seed + k so results
/// do not depend on scheduling.
std::vector<NetworkParams> train_position_networks(const WeightedAlignment& msa,
                                                   const PositionNetConfig& config);

/// Dataset for position k's network (leave-one-column-out).
LabeledDataset position_dataset(const WeightedAlignment& msa, int position);

/// Gauge-fixed order-2 expansions of all position networks (closed form).
std::vector<ExpansionCoefficients> expand_position_networks(
    const std::vector<NetworkParams>& networks, int threads = 0);

/// Symmetric L x L pair-score matrix: directional scores from the first-order
/// gauge-fixed coefficients, symmetrized by averaging; zero diagonal.
Eigen::MatrixXd aggregate_pair_scores(
    const std::vector<ExpansionCoefficients>& expansions);

struct RankedTriplet {
  int i = 0, j = 0, k = 0;  // strictly increasing
  double score = 0.0;
};

/// Unordered triplet score = mean of the three directional second-order
/// scores; top_t descending with lexicographic tie-break.
std::vector<RankedTriplet> aggregate_triplet_scores(
    const std::vector<ExpansionCoefficients>& expansions, int top_t);

enum class TruncationOrder { Full, Order2, Order1 };

/// Weighted accuracy of predicting each column at the requested truncation.
std::vector<double> per_position_accuracy(
    const std::vector<NetworkParams>& networks,
    const std::vector<ExpansionCoefficients>& expansions,
    const WeightedAlignment& msa, TruncationOrder order);

/// Sparse planted Potts model used as the pipeline's test oracle:
/// p(s) proportional to exp(sum_i h_i(s_i) + sum_pairs J_ij(s_i, s_j)
/// + optional 3-body term).
struct PlantedPottsModel {
  int length = 0;
  int alphabet = 0;
  Eigen::MatrixXd fields;  // L x q
  struct Coupling {
    int i, j;
    Eigen::MatrixXd j_matrix;  // q x q
  };
  std::vector<Coupling> couplings;
  struct Triplet {
    int i, j, k;
    std::vector<double> tensor;  // q^3, index (a*q + b)*q + c
  };
  std::optional<Triplet> triplet;

  void validate() const;
};

PlantedPottsModel load_potts_model(const std::string& json_path);
void save_potts_model(const PlantedPottsModel& model, const std::string& json_path);

/// Single-site Gibbs sampling; burn_in sweeps, then one sample every `thin`
/// sweeps. Deterministic given seed.
WeightedAlignment synth_potts_msa(const PlantedPottsModel& model, int samples,
                                  int burn_in, int thin, std::uint64_t seed);

/// Fraction of the top-k pairs (with separation >= min_separation) whose
/// reference distance is <= contact_threshold.
double ppv_against_distogram(const Eigen::MatrixXd& pair_matrix,
                             const Eigen::MatrixXd& distances, int k,
                             double contact_threshold, int min_separation);

Eigen::MatrixXd load_distance_csv(const std::string& path);
void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);
void save_fasta(const WeightedAlignment& msa, const std::string& path);

}  // namespace catexpand
