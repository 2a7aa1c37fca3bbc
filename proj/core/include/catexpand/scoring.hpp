#pragma once

#include <string>
#include <vector>

#include "catexpand/expansion.hpp"

namespace catexpand {

/// Frobenius-style scores: sums of squared coefficients over the categories
/// of a feature (or feature pair), per output class.
struct ScoreSet {
  int feature_count = 0;
  int class_count = 0;
  Eigen::MatrixXd first_order;              // N x K
  std::vector<Eigen::VectorXd> second_order;  // per pair i<j, length K
  bool has_first = false;
  bool has_second = false;

  int pair_index(int i, int j) const {
    return i * (2 * feature_count - i - 1) / 2 + (j - i - 1);
  }
  /// Sum over classes for pair (i, j).
  double pair_total(int i, int j) const;
};

/// S_{i,l} = sum_alpha (W^alpha_{i,l})^2. Warns on stderr when the
/// coefficients are not gauge-fixed (scores are gauge-dependent).
ScoreSet first_order_scores(const ExpansionCoefficients& coeffs);

/// S_{ij,l} = sum_{alpha,beta} (W^{alpha,beta}_{ij,l})^2.
ScoreSet second_order_scores(const ExpansionCoefficients& coeffs);

struct RankedPair {
  int i = 0;
  int j = 0;
  double score = 0.0;
};

/// Top-k pairs by descending score with lexicographic (i, j) tie-break.
/// grid_width 0: separation = |j - i| (sequences); grid_width > 0: Chebyshev
/// distance on the (row, col) grid (images). class_aggregate sums scores
/// over classes, otherwise the max over classes ranks the pair.
std::vector<RankedPair> top_pairs(const ScoreSet& scores, int k,
                                  int min_separation, bool class_aggregate,
                                  int grid_width = 0);

/// CSV export, header "i,j,class,score", one row per (pair, class).
void save_pair_scores_csv(const ScoreSet& scores, const std::string& path);

/// Dense N x N CSV of class-aggregated pair scores (zero diagonal).
void save_pair_matrix_csv(const ScoreSet& scores, const std::string& path);

/// CSV export of first-order scores, header "i,class,score".
void save_first_order_csv(const ScoreSet& scores, const std::string& path);

}  // namespace catexpand
