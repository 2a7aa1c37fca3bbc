#include "catexpand/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>

namespace catexpand {

double ScoreSet::pair_total(int i, int j) const {
  return second_order[pair_index(i, j)].sum();
}

ScoreSet first_order_scores(const ExpansionCoefficients& coeffs) {
  if (coeffs.max_order() < 1)
    throw Error("first_order_scores: no first-order coefficients");
  if (!coeffs.gauge_fixed())
    std::cerr << "warning: scoring coefficients that are not gauge-fixed; "
                 "scores are gauge-dependent\n";
  const CategorySpec& spec = coeffs.spec();
  ScoreSet s;
  s.feature_count = spec.feature_count();
  s.class_count = coeffs.class_count();
  s.has_first = true;
  s.first_order = Eigen::MatrixXd::Zero(s.feature_count, s.class_count);
  for (int i = 0; i < s.feature_count; ++i)
    for (int l = 0; l < s.class_count; ++l)
      s.first_order(i, l) = coeffs.order1()
                                .row(l)
                                .segment(spec.offset(i), spec.category_count(i))
                                .squaredNorm();
  return s;
}

ScoreSet second_order_scores(const ExpansionCoefficients& coeffs) {
  if (coeffs.max_order() < 2)
    throw Error("second_order_scores: no second-order coefficients");
  if (!coeffs.gauge_fixed())
    std::cerr << "warning: scoring coefficients that are not gauge-fixed; "
                 "scores are gauge-dependent\n";
  const CategorySpec& spec = coeffs.spec();
  ScoreSet s;
  s.feature_count = spec.feature_count();
  s.class_count = coeffs.class_count();
  s.has_second = true;
  s.second_order.resize(coeffs.pair_count());
  for (int p = 0; p < coeffs.pair_count(); ++p) {
    auto [i, j] = coeffs.pair_features(p);
    const std::size_t cats = static_cast<std::size_t>(spec.category_count(i)) *
                             spec.category_count(j);
    const double* block = coeffs.pair_block(p);
    Eigen::VectorXd& per_class = s.second_order[p];
    per_class = Eigen::VectorXd::Zero(s.class_count);
    for (int l = 0; l < s.class_count; ++l) {
      double acc = 0.0;
      const double* b = block + static_cast<std::size_t>(l) * cats;
      for (std::size_t t = 0; t < cats; ++t) acc += b[t] * b[t];
      per_class[l] = acc;
    }
  }
  return s;
}

namespace {

int pair_separation(int i, int j, int grid_width) {
  if (grid_width <= 0) return j - i;
  int ri = i / grid_width, ci = i % grid_width;
  int rj = j / grid_width, cj = j % grid_width;
  return std::max(std::abs(ri - rj), std::abs(ci - cj));
}

}  // namespace

std::vector<RankedPair> top_pairs(const ScoreSet& scores, int k,
                                  int min_separation, bool class_aggregate,
                                  int grid_width) {
  if (!scores.has_second) throw Error("top_pairs: second-order scores missing");
  if (k < 1) throw Error("top_pairs: k must be >= 1");
  std::vector<RankedPair> all;
  const int n = scores.feature_count;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (pair_separation(i, j, grid_width) < min_separation) continue;
      const Eigen::VectorXd& per_class = scores.second_order[scores.pair_index(i, j)];
      double v = class_aggregate ? per_class.sum() : per_class.maxCoeff();
      all.push_back({i, j, v});
    }
  std::sort(all.begin(), all.end(), [](const RankedPair& a, const RankedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  return all;
}

void save_pair_scores_csv(const ScoreSet& scores, const std::string& path) {
  if (!scores.has_second) throw Error("save_pair_scores_csv: no second-order scores");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open for writing: " + path);
  std::fprintf(f, "i,j,class,score\n");
  const int n = scores.feature_count;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Eigen::VectorXd& per_class = scores.second_order[scores.pair_index(i, j)];
      for (int l = 0; l < scores.class_count; ++l)
        std::fprintf(f, "%d,%d,%d,%.17g\n", i, j, l, per_class[l]);
    }
  std::fclose(f);
}

void save_pair_matrix_csv(const ScoreSet& scores, const std::string& path) {
  if (!scores.has_second) throw Error("save_pair_matrix_csv: no second-order scores");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open for writing: " + path);
  const int n = scores.feature_count;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = (i == j) ? 0.0
                          : scores.pair_total(std::min(i, j), std::max(i, j));
      std::fprintf(f, j + 1 < n ? "%.17g," : "%.17g\n", v);
    }
  }
  std::fclose(f);
}

void save_first_order_csv(const ScoreSet& scores, const std::string& path) {
  if (!scores.has_first) throw Error("save_first_order_csv: no first-order scores");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open for writing: " + path);
  std::fprintf(f, "i,class,score\n");
  for (int i = 0; i < scores.feature_count; ++i)
    for (int l = 0; l < scores.class_count; ++l)
      std::fprintf(f, "%d,%d,%.17g\n", i, l, scores.first_order(i, l));
  std::fclose(f);
}

}  // namespace catexpand
