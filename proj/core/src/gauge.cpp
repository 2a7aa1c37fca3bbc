#include "catexpand/gauge.hpp"

#include <cmath>
#include <mutex>
#include <vector>

#include "catexpand/parallel.hpp"

namespace catexpand {

ExpansionCoefficients ising_gauge_fix(const ExpansionCoefficients& input,
                                      int threads) {
  if (input.max_order() > 2)
    throw Error("ising_gauge_fix: only orders <= 2 supported");
  ExpansionCoefficients coeffs = input;
  const CategorySpec& spec = coeffs.spec();
  const int k = coeffs.class_count();
  const int n = spec.feature_count();

  // Second order first: center each pair block, pushing row/column means into
  // the first order and the total mean into the constant, so the truncated
  // value on valid inputs is unchanged.
  if (coeffs.max_order() >= 2 && n >= 2) {
    // per-pair first-order/constant compensation, accumulated after the
    // parallel pass in fixed (i,j) order
    std::vector<Eigen::MatrixXd> comp1(coeffs.pair_count());  // k x (n_i + n_j)
    std::vector<Eigen::VectorXd> comp0(coeffs.pair_count());  // k

    parallel_for(coeffs.pair_count(), threads, [&](std::size_t p) {
      auto [i, j] = coeffs.pair_features(static_cast<int>(p));
      const int ni = spec.category_count(i), nj = spec.category_count(j);
      double* block = coeffs.pair_block(static_cast<int>(p));
      comp1[p] = Eigen::MatrixXd::Zero(k, ni + nj);
      comp0[p] = Eigen::VectorXd::Zero(k);
      for (int l = 0; l < k; ++l) {
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
            b(block + static_cast<std::size_t>(l) * ni * nj, ni, nj);
        Eigen::VectorXd row_mean = b.rowwise().mean();   // length n_i
        Eigen::RowVectorXd col_mean = b.colwise().mean();  // length n_j
        double total_mean = b.mean();
        b = (b.colwise() - row_mean).rowwise() - col_mean;
        b.array() += total_mean;
        comp1[p].row(l).head(ni) = row_mean.transpose();
        comp1[p].row(l).tail(nj) = col_mean;
        comp0[p][l] = -total_mean;
      }
    });
    for (int p = 0; p < coeffs.pair_count(); ++p) {
      auto [i, j] = coeffs.pair_features(p);
      const int ni = spec.category_count(i), nj = spec.category_count(j);
      for (int l = 0; l < k; ++l) {
        for (int a = 0; a < ni; ++a)
          coeffs.order1()(l, spec.offset(i) + a) += comp1[p](l, a);
        for (int b = 0; b < nj; ++b)
          coeffs.order1()(l, spec.offset(j) + b) += comp1[p](l, ni + b);
      }
      coeffs.order0() += comp0[p];
    }
  }

  // First order: absorb per-feature category means into the constant.
  if (coeffs.max_order() >= 1) {
    for (int i = 0; i < n; ++i) {
      const int ni = spec.category_count(i);
      Eigen::VectorXd mean =
          coeffs.order1().middleCols(spec.offset(i), ni).rowwise().mean();
      coeffs.order1().middleCols(spec.offset(i), ni).colwise() -= mean;
      coeffs.order0() += mean;
    }
  }

  coeffs.check_finite();
  coeffs.set_gauge_fixed(true);
  return coeffs;
}

GaugeReport gauge_residuals(const ExpansionCoefficients& coeffs) {
  GaugeReport report;
  const CategorySpec& spec = coeffs.spec();
  const int k = coeffs.class_count();
  if (coeffs.max_order() >= 1) {
    for (int i = 0; i < spec.feature_count(); ++i) {
      Eigen::VectorXd mean = coeffs.order1()
                                 .middleCols(spec.offset(i), spec.category_count(i))
                                 .rowwise()
                                 .mean();
      report.max_order1_residual =
          std::max(report.max_order1_residual, mean.cwiseAbs().maxCoeff());
    }
  }
  if (coeffs.max_order() >= 2) {
    for (int p = 0; p < coeffs.pair_count(); ++p) {
      auto [i, j] = coeffs.pair_features(p);
      const int ni = spec.category_count(i), nj = spec.category_count(j);
      const double* block = coeffs.pair_block(p);
      for (int l = 0; l < k; ++l) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            b(block + static_cast<std::size_t>(l) * ni * nj, ni, nj);
        double r = b.rowwise().mean().cwiseAbs().maxCoeff();
        double c = b.colwise().mean().cwiseAbs().maxCoeff();
        report.max_order2_residual =
            std::max({report.max_order2_residual, r, c});
      }
    }
  }
  return report;
}

ExpansionCoefficients apply_constant_shift(const ExpansionCoefficients& input,
                                           double g) {
  if (input.max_order() < 1)
    throw Error("apply_constant_shift: needs first-order coefficients");
  ExpansionCoefficients coeffs = input;
  coeffs.order0().array() += g;
  coeffs.order1().array() -= g / coeffs.spec().feature_count();
  coeffs.set_gauge_fixed(false);
  return coeffs;
}

}  // namespace catexpand
