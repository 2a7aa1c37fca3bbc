#include "catexpand/expansion.hpp"

#include <cmath>

#include "catexpand/binary_io.hpp"
#include "catexpand/parallel.hpp"

namespace catexpand {

ExpansionCoefficients::ExpansionCoefficients(const CategorySpec& spec,
                                             int class_count, int max_order)
    : spec_(spec), class_count_(class_count), max_order_(max_order) {
  if (class_count <= 0) throw Error("ExpansionCoefficients: class count must be positive");
  if (max_order < 0 || max_order > 2)
    throw Error("ExpansionCoefficients: max_order must be 0, 1 or 2");
  const int n = spec.feature_count();
  order0_ = Eigen::VectorXd::Zero(class_count);
  if (max_order >= 1)
    order1_ = Eigen::MatrixXd::Zero(class_count, spec.total_dimension());
  pair_count_ = n * (n - 1) / 2;
  if (max_order >= 2) {
    block_offsets_.resize(pair_count_ + 1);
    std::size_t off = 0;
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p) {
        block_offsets_[p] = off;
        off += static_cast<std::size_t>(class_count) * spec.category_count(i) *
               spec.category_count(j);
      }
    block_offsets_[pair_count_] = off;
    order2_.assign(off, 0.0);
  } else {
    pair_count_ = 0;
  }
}

int ExpansionCoefficients::pair_index(int i, int j) const {
  const int n = spec_.feature_count();
  if (i < 0 || j <= i || j >= n) throw Error("pair_index: requires 0 <= i < j < N");
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

std::pair<int, int> ExpansionCoefficients::pair_features(int p) const {
  const int n = spec_.feature_count();
  int i = 0;
  int row = n - 1;
  while (p >= row) {
    p -= row;
    --row;
    ++i;
  }
  return {i, i + 1 + p};
}

double ExpansionCoefficients::order2(int i, int j, int cls, int alpha,
                                     int beta) const {
  int p = pair_index(i, j);
  const int ni = spec_.category_count(i), nj = spec_.category_count(j);
  return order2_[block_offsets_[p] +
                 (static_cast<std::size_t>(cls) * ni + alpha) * nj + beta];
}

void ExpansionCoefficients::set_order2(int i, int j, int cls, int alpha,
                                       int beta, double v) {
  int p = pair_index(i, j);
  const int ni = spec_.category_count(i), nj = spec_.category_count(j);
  order2_[block_offsets_[p] +
          (static_cast<std::size_t>(cls) * ni + alpha) * nj + beta] = v;
}

void ExpansionCoefficients::check_finite() const {
  if (!order0_.allFinite()) throw Error("coefficients: non-finite order-0 entry");
  if (max_order_ >= 1 && !order1_.allFinite())
    throw Error("coefficients: non-finite order-1 entry");
  for (double v : order2_)
    if (!std::isfinite(v)) throw Error("coefficients: non-finite order-2 entry");
}

namespace {

ProbeVector flat_probe(const CategorySpec& spec, std::initializer_list<int> flats) {
  ProbeVector v;
  v.bits.assign(spec.total_dimension(), 0);
  for (int f : flats) v.bits[f] = 1;
  return v;
}

void check_output(const Eigen::VectorXd& z, int class_count, const std::string& probe) {
  if (z.size() != class_count)
    throw Error("evaluator output length mismatch at probe " + probe);
  if (!z.allFinite()) throw Error("non-finite evaluator output at probe " + probe);
}

}  // namespace

ExpansionCoefficients probe_expand(const LogitEvaluator& evaluator,
                                   const CategorySpec& spec, int class_count,
                                   int max_order, int threads) {
  ExpansionCoefficients coeffs(spec, class_count, max_order);
  const int d = spec.total_dimension();

  Eigen::VectorXd z0 = evaluator(flat_probe(spec, {}));
  check_output(z0, class_count, "0");
  coeffs.order0() = z0;
  if (max_order < 1) return coeffs;

  // single-entry probes, cached for reuse in the pair pass
  Eigen::MatrixXd z1(class_count, d);
  for (int a = 0; a < d; ++a) {
    Eigen::VectorXd z = evaluator(flat_probe(spec, {a}));
    check_output(z, class_count, "delta(" + std::to_string(a) + ")");
    z1.col(a) = z;
    coeffs.order1().col(a) = z - z0;
  }
  if (max_order < 2) return coeffs;

  parallel_for(coeffs.pair_count(), threads, [&](std::size_t p) {
    auto [i, j] = coeffs.pair_features(static_cast<int>(p));
    const int ni = spec.category_count(i), nj = spec.category_count(j);
    double* block = coeffs.pair_block(static_cast<int>(p));
    for (int alpha = 0; alpha < ni; ++alpha) {
      int ia = spec.offset(i) + alpha;
      for (int beta = 0; beta < nj; ++beta) {
        int jb = spec.offset(j) + beta;
        Eigen::VectorXd z = evaluator(flat_probe(spec, {ia, jb}));
        check_output(z, class_count,
                     "delta(" + std::to_string(ia) + ")+delta(" + std::to_string(jb) + ")");
        for (int l = 0; l < class_count; ++l)
          block[(static_cast<std::size_t>(l) * ni + alpha) * nj + beta] =
              z[l] - z1(l, ia) - z1(l, jb) + z0[l];
      }
    }
  });
  return coeffs;
}

ExpansionCoefficients closed_form_expand(const NetworkParams& net,
                                         int max_order, int threads) {
  net.check_shapes();
  const CategorySpec& spec = net.spec;
  const int d = spec.total_dimension();
  const int h = net.hidden_units();
  const int k = net.class_count;
  ExpansionCoefficients coeffs(spec, k, max_order);

  Eigen::VectorXd fb(h);
  for (int i = 0; i < h; ++i) fb[i] = activation_apply(net.activation, net.b1[i]);
  coeffs.order0() = net.w2 * fb + net.b2;
  if (max_order < 1) {
    coeffs.check_finite();
    return coeffs;
  }

  // f(W1 col + b1), one vector per input index, reused across all pairs
  Eigen::MatrixXd fa(h, d);
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < h; ++i)
      fa(i, a) = activation_apply(net.activation, net.w1(i, a) + net.b1[i]);
  coeffs.order1() = net.w2 * (fa.colwise() - fb);
  if (max_order < 2) {
    coeffs.check_finite();
    return coeffs;
  }

  parallel_for(coeffs.pair_count(), threads, [&](std::size_t p) {
    auto [fi, fj] = coeffs.pair_features(static_cast<int>(p));
    const int ni = spec.category_count(fi), nj = spec.category_count(fj);
    double* block = coeffs.pair_block(static_cast<int>(p));
    Eigen::VectorXd t(h), kvec(k);
    for (int alpha = 0; alpha < ni; ++alpha) {
      int ia = spec.offset(fi) + alpha;
      for (int beta = 0; beta < nj; ++beta) {
        int jb = spec.offset(fj) + beta;
        for (int i = 0; i < h; ++i)
          t[i] = activation_apply(net.activation,
                                  net.w1(i, ia) + net.w1(i, jb) + net.b1[i]) -
                 fa(i, ia) - fa(i, jb) + fb[i];
        kvec.noalias() = net.w2 * t;
        for (int l = 0; l < k; ++l)
          block[(static_cast<std::size_t>(l) * ni + alpha) * nj + beta] = kvec[l];
      }
    }
  });
  coeffs.check_finite();
  return coeffs;
}

Eigen::VectorXd mobius_coefficient(const LogitEvaluator& evaluator,
                                   const CategorySpec& spec,
                                   const std::vector<std::pair<int, int>>& entries,
                                   int subset_cap) {
  const int n = static_cast<int>(entries.size());
  if (n >= 31 || (1 << n) > subset_cap)
    throw Error("mobius_coefficient: subset count exceeds cap");
  std::vector<int> flats(n);
  for (int e = 0; e < n; ++e)
    flats[e] = spec.flat_index(entries[e].first, entries[e].second);

  Eigen::VectorXd acc;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    ProbeVector v;
    v.bits.assign(spec.total_dimension(), 0);
    int bits = 0;
    for (int e = 0; e < n; ++e)
      if (mask & (1u << e)) {
        v.bits[flats[e]] = 1;
        ++bits;
      }
    Eigen::VectorXd z = evaluator(v);
    double sign = ((n - bits) % 2 == 0) ? 1.0 : -1.0;
    if (acc.size() == 0)
      acc = sign * z;
    else
      acc += sign * z;
  }
  return acc;
}

Eigen::VectorXd truncated_logits(const ExpansionCoefficients& coeffs,
                                 const CategoricalSample& x, int order) {
  if (order > coeffs.max_order())
    throw Error("truncated_logits: order exceeds stored max_order");
  const CategorySpec& spec = coeffs.spec();
  if (static_cast<int>(x.categories.size()) != spec.feature_count())
    throw Error("truncated_logits: sample arity mismatch");
  Eigen::VectorXd z = coeffs.order0();
  if (order >= 1)
    for (int i = 0; i < spec.feature_count(); ++i)
      z += coeffs.order1().col(spec.flat_index(i, x.categories[i]));
  if (order >= 2) {
    const int k = coeffs.class_count();
    for (int i = 0; i < spec.feature_count(); ++i) {
      const int ni = spec.category_count(i);
      for (int j = i + 1; j < spec.feature_count(); ++j) {
        const int nj = spec.category_count(j);
        const double* block = coeffs.pair_block(coeffs.pair_index(i, j));
        std::size_t base =
            (static_cast<std::size_t>(x.categories[i])) * nj + x.categories[j];
        for (int l = 0; l < k; ++l)
          z[l] += block[static_cast<std::size_t>(l) * ni * nj + base];
      }
    }
  }
  return z;
}

TruncationReport truncation_report(const NetworkParams& net,
                                   const ExpansionCoefficients& coeffs,
                                   const LabeledDataset& data) {
  net.check_shapes();
  data.validate();
  if (!(net.spec == coeffs.spec()))
    throw Error("truncation_report: spec mismatch");
  TruncationReport rep;
  double total = 0.0, full = 0.0, o2 = 0.0, o1 = 0.0;
  for (std::size_t m = 0; m < data.size(); ++m) {
    const double w = data.weights[m];
    total += w;
    Eigen::Index best;
    forward_logits(net, encode_one_hot(data.samples[m], data.spec)).maxCoeff(&best);
    if (static_cast<int>(best) == data.labels[m]) full += w;
    truncated_logits(coeffs, data.samples[m], 2).maxCoeff(&best);
    if (static_cast<int>(best) == data.labels[m]) o2 += w;
    truncated_logits(coeffs, data.samples[m], 1).maxCoeff(&best);
    if (static_cast<int>(best) == data.labels[m]) o1 += w;
  }
  if (total <= 0.0) throw Error("truncation_report: zero total weight");
  rep.full_accuracy = full / total;
  rep.order2_accuracy = o2 / total;
  rep.order1_accuracy = o1 / total;
  return rep;
}

namespace {
constexpr std::uint32_t kCoeffVersion = 1;
}

void save_coefficients(const ExpansionCoefficients& coeffs,
                       const std::string& path) {
  BinaryWriter w(path);
  w.magic("CEXP");
  w.u32(kCoeffVersion);
  w.u32(static_cast<std::uint32_t>(coeffs.spec().feature_count()));
  for (int c : coeffs.spec().category_counts()) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(coeffs.class_count()));
  w.u8(static_cast<std::uint8_t>(coeffs.max_order()));
  w.u8(coeffs.gauge_fixed() ? 1 : 0);
  w.f64_array(coeffs.order0().data(), static_cast<std::size_t>(coeffs.order0().size()));
  if (coeffs.max_order() >= 1)
    for (Eigen::Index l = 0; l < coeffs.order1().rows(); ++l)
      for (Eigen::Index a = 0; a < coeffs.order1().cols(); ++a)
        w.f64(coeffs.order1()(l, a));
  if (coeffs.max_order() >= 2)
    for (int p = 0; p < coeffs.pair_count(); ++p) {
      const double* block = coeffs.pair_block(p);
      for (std::size_t t = 0; t < coeffs.pair_block_size(p); ++t)
        w.f32(static_cast<float>(block[t]));
    }
}

ExpansionCoefficients load_coefficients(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic("CEXP");
  r.expect_version(kCoeffVersion);
  int n = static_cast<int>(r.u32());
  std::vector<int> counts(n);
  for (int& c : counts) c = static_cast<int>(r.u32());
  CategorySpec spec(counts);
  int k = static_cast<int>(r.u32());
  int max_order = r.u8();
  bool gauge = r.u8() != 0;
  ExpansionCoefficients coeffs(spec, k, max_order);
  coeffs.set_gauge_fixed(gauge);
  r.f64_array(coeffs.order0().data(), static_cast<std::size_t>(k));
  if (max_order >= 1)
    for (Eigen::Index l = 0; l < coeffs.order1().rows(); ++l)
      for (Eigen::Index a = 0; a < coeffs.order1().cols(); ++a)
        coeffs.order1()(l, a) = r.f64();
  if (max_order >= 2)
    for (int p = 0; p < coeffs.pair_count(); ++p) {
      double* block = coeffs.pair_block(p);
      for (std::size_t t = 0; t < coeffs.pair_block_size(p); ++t)
        block[t] = static_cast<double>(r.f32());
    }
  coeffs.check_finite();
  return coeffs;
}

}  // namespace catexpand
