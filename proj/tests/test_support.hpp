#pragma once

#include <random>
#include <vector>

#include "catexpand/expansion.hpp"
#include "catexpand/network.hpp"

namespace catexpand::testing {

/// Random small network with random spec, used by the oracle suites.
/// N <= 4 features, n_i <= 3 categories, H <= 8, K <= 3.
inline NetworkParams random_small_net(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nfeat(1, 4), ncat(1, 3), nhid(1, 8),
      ncls(1, 3), act(0, 1);
  std::vector<int> counts(nfeat(rng));
  for (int& c : counts) c = ncat(rng);
  CategorySpec spec(counts);
  int k = ncls(rng), h = nhid(rng);
  auto a = static_cast<Activation>(act(rng));
  NetworkParams net = init_network(spec, k, h, a, rng());
  // non-zero biases exercise the f(b1) terms
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < h; ++i) net.b1[i] = u(rng);
  for (int l = 0; l < k; ++l) net.b2[l] = u(rng);
  return net;
}

/// All valid one-hot samples of a spec, by exhaustive enumeration.
inline std::vector<CategoricalSample> all_valid_samples(const CategorySpec& spec) {
  std::vector<CategoricalSample> out;
  CategoricalSample cur;
  cur.categories.assign(spec.feature_count(), 0);
  for (;;) {
    out.push_back(cur);
    int i = spec.feature_count() - 1;
    while (i >= 0 && ++cur.categories[i] == spec.category_count(i)) {
      cur.categories[i] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return out;
}

/// Brute-force full Moebius reconstruction at a valid input: the sum of
/// inclusion-exclusion coefficients over every subset of the active entries.
/// Independent oracle for the truncated/expanded evaluation path.
inline Eigen::VectorXd mobius_full_reconstruction(const LogitEvaluator& eval,
                                                  const CategorySpec& spec,
                                                  const CategoricalSample& x) {
  std::vector<std::pair<int, int>> active;
  for (int i = 0; i < spec.feature_count(); ++i)
    active.push_back({i, x.categories[i]});
  const int n = static_cast<int>(active.size());
  Eigen::VectorXd total;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::pair<int, int>> subset;
    for (int e = 0; e < n; ++e)
      if (mask & (1u << e)) subset.push_back(active[e]);
    Eigen::VectorXd c = mobius_coefficient(eval, spec, subset);
    if (total.size() == 0)
      total = c;
    else
      total += c;
  }
  return total;
}

}  // namespace catexpand::testing
