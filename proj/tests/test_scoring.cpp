#include <doctest.h>

#include <random>

#include "catexpand/gauge.hpp"
#include "catexpand/scoring.hpp"

using namespace catexpand;

namespace {

ExpansionCoefficients simple_coeffs() {
  CategorySpec spec({2, 2, 2});
  ExpansionCoefficients coeffs(spec, 1, 2);
  coeffs.set_gauge_fixed(true);
  return coeffs;
}

}  // namespace

TEST_CASE("first-order score is the sum of squared coefficients") {
  auto coeffs = simple_coeffs();
  coeffs.order1()(0, 0) = 1.0;
  coeffs.order1()(0, 1) = -1.0;
  auto s = first_order_scores(coeffs);
  CHECK(s.first_order(0, 0) == doctest::Approx(2.0));
  CHECK(s.first_order(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("doubling coefficients quadruples scores") {
  auto coeffs = simple_coeffs();
  coeffs.order1()(0, 0) = 1.5;
  coeffs.order1()(0, 3) = -0.5;
  auto doubled = coeffs;
  doubled.order1() *= 2.0;
  auto s1 = first_order_scores(coeffs);
  auto s2 = first_order_scores(doubled);
  for (int i = 0; i < 3; ++i)
    CHECK(s2.first_order(i, 0) == doctest::Approx(4.0 * s1.first_order(i, 0)));
}

TEST_CASE("second-order score of a diagonal block") {
  auto coeffs = simple_coeffs();
  coeffs.set_order2(0, 1, 0, 0, 0, 1.0);
  coeffs.set_order2(0, 1, 0, 1, 1, 1.0);
  auto s = second_order_scores(coeffs);
  CHECK(s.pair_total(0, 1) == doctest::Approx(2.0));
  CHECK(s.pair_total(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("gauge-fixed constant block scores zero") {
  CategorySpec spec({2, 2});
  ExpansionCoefficients coeffs(spec, 1, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) coeffs.set_order2(0, 1, 0, a, b, 1.0);
  auto fixed = ising_gauge_fix(coeffs);
  auto s = second_order_scores(fixed);
  CHECK(s.pair_total(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("scores are invariant under category relabeling") {
  std::mt19937_64 rng(99);
  CategorySpec spec({3, 3});
  ExpansionCoefficients coeffs(spec, 2, 2);
  coeffs.set_gauge_fixed(true);
  std::uniform_real_distribution<double> u(-1, 1);
  for (Eigen::Index l = 0; l < 2; ++l)
    for (Eigen::Index a = 0; a < 6; ++a) coeffs.order1()(l, a) = u(rng);
  for (std::size_t v = 0; v < coeffs.pair_block_size(0); ++v)
    coeffs.pair_block(0)[v] = u(rng);

  // permute categories of feature 0: (0,1,2) -> (2,0,1)
  auto permuted = coeffs;
  int perm[3] = {2, 0, 1};
  for (int l = 0; l < 2; ++l)
    for (int a = 0; a < 3; ++a) {
      permuted.order1()(l, perm[a]) = coeffs.order1()(l, a);
      for (int b = 0; b < 3; ++b)
        permuted.set_order2(0, 1, l, perm[a], b, coeffs.order2(0, 1, l, a, b));
    }
  auto s = first_order_scores(coeffs), sp = first_order_scores(permuted);
  CHECK((s.first_order - sp.first_order).cwiseAbs().maxCoeff() < 1e-14);
  auto s2 = second_order_scores(coeffs), sp2 = second_order_scores(permuted);
  CHECK(s2.pair_total(0, 1) == doctest::Approx(sp2.pair_total(0, 1)));
}

TEST_CASE("top_pairs ranking, separation filter and tie-break") {
  ScoreSet s;
  s.feature_count = 3;
  s.class_count = 1;
  s.has_second = true;
  s.second_order.resize(3);
  s.second_order[s.pair_index(0, 1)] = Eigen::VectorXd::Constant(1, 5.0);
  s.second_order[s.pair_index(0, 2)] = Eigen::VectorXd::Constant(1, 3.0);
  s.second_order[s.pair_index(1, 2)] = Eigen::VectorXd::Constant(1, 9.0);

  auto top = top_pairs(s, 2, 0, true);
  REQUIRE(top.size() == 2);
  CHECK(top[0].i == 1);
  CHECK(top[0].j == 2);
  CHECK(top[0].score == doctest::Approx(9.0));
  CHECK(top[1].i == 0);
  CHECK(top[1].j == 1);

  auto far = top_pairs(s, 2, 2, true);
  REQUIRE(far.size() == 1);
  CHECK(far[0].i == 0);
  CHECK(far[0].j == 2);

  // ties break lexicographically
  for (auto& v : s.second_order) v.setConstant(1.0);
  auto tied = top_pairs(s, 3, 0, true);
  CHECK(tied[0].i == 0);
  CHECK(tied[0].j == 1);
  CHECK(tied[1].i == 0);
  CHECK(tied[1].j == 2);
  CHECK(tied[2].i == 1);
  CHECK(tied[2].j == 2);

  // k beyond the pair count returns everything
  CHECK(top_pairs(s, 100, 0, true).size() == 3);
}

TEST_CASE("top_pairs with Chebyshev grid separation") {
  // 2x2 pixel grid: features 0..3; pixels 0 and 3 are diagonal (distance 1)
  ScoreSet s;
  s.feature_count = 4;
  s.class_count = 1;
  s.has_second = true;
  s.second_order.assign(6, Eigen::VectorXd::Zero(1));
  s.second_order[s.pair_index(0, 3)] = Eigen::VectorXd::Constant(1, 7.0);
  s.second_order[s.pair_index(0, 1)] = Eigen::VectorXd::Constant(1, 5.0);
  auto adjacent_excluded = top_pairs(s, 10, 2, true, 2);
  CHECK(adjacent_excluded.empty());  // every pair in a 2x2 grid is adjacent
  auto all = top_pairs(s, 10, 0, true, 2);
  CHECK(all[0].score == doctest::Approx(7.0));
}
