#pragma once

#include "catexpand/expansion.hpp"

namespace catexpand {

struct GaugeReport {
  double max_order1_residual = 0.0;  // max |category mean| over (i, class)
  double max_order2_residual = 0.0;  // max |row/column mean| over pair blocks
  double max_value_deviation = -1.0;  // filled by callers that validate
  double shift_constant = 0.0;
};

/// Zero-sum (Ising) gauge. Pair blocks are centered (row, column and total
/// means removed); the removed means are pushed into the first order and the
/// constant, then first-order means are absorbed into the constant. The
/// order-2 truncated value on every valid one-hot input is unchanged.
ExpansionCoefficients ising_gauge_fix(const ExpansionCoefficients& coeffs,
                                      int threads = 0);

/// Max absolute category means of the stored coefficients.
GaugeReport gauge_residuals(const ExpansionCoefficients& coeffs);

/// Gauge-freedom demo: W_l += G, first order -= G/N. Value-preserving on
/// valid inputs.
ExpansionCoefficients apply_constant_shift(const ExpansionCoefficients& coeffs,
                                           double g);

}  // namespace catexpand
