#include "catexpand/categorical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "catexpand/binary_io.hpp"

namespace catexpand {

CategorySpec::CategorySpec(std::vector<int> category_counts)
    : counts_(std::move(category_counts)) {
  if (counts_.empty()) throw Error("CategorySpec: no features");
  offsets_.resize(counts_.size());
  int off = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] <= 0) throw Error("CategorySpec: category count must be positive");
    offsets_[i] = off;
    off += counts_[i];
  }
  total_dim_ = off;
}

int CategorySpec::flat_index(int feature, int category) const {
  if (feature < 0 || feature >= feature_count())
    throw Error("flat_index: feature out of range");
  if (category < 0 || category >= counts_[feature])
    throw Error("flat_index: category out of range");
  return offsets_[feature] + category;
}

std::pair<int, int> CategorySpec::feature_category(int flat) const {
  if (flat < 0 || flat >= total_dim_) throw Error("feature_category: index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
  int feature = static_cast<int>(it - offsets_.begin()) - 1;
  return {feature, flat - offsets_[feature]};
}

int ProbeVector::popcount() const {
  int c = 0;
  for (auto b : bits) c += b != 0;
  return c;
}

std::vector<int> ProbeVector::active_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < size(); ++i)
    if (bits[i]) idx.push_back(i);
  return idx;
}

void LabeledDataset::validate() const {
  if (samples.size() != labels.size() || samples.size() != weights.size())
    throw Error("LabeledDataset: column lengths differ");
  for (std::size_t m = 0; m < samples.size(); ++m) {
    const auto& cats = samples[m].categories;
    if (static_cast<int>(cats.size()) != spec.feature_count())
      throw Error("LabeledDataset: sample arity mismatch");
    for (int i = 0; i < spec.feature_count(); ++i)
      if (cats[i] < 0 || cats[i] >= spec.category_count(i))
        throw Error("LabeledDataset: category out of range");
    if (labels[m] < 0 || labels[m] >= class_count)
      throw Error("LabeledDataset: label out of range");
    if (!std::isfinite(weights[m]) || weights[m] < 0.0)
      throw Error("LabeledDataset: weight must be finite and non-negative");
  }
}

ProbeVector encode_one_hot(const CategoricalSample& sample,
                           const CategorySpec& spec) {
  if (static_cast<int>(sample.categories.size()) != spec.feature_count())
    throw Error("encode_one_hot: sample arity mismatch");
  ProbeVector v;
  v.bits.assign(spec.total_dimension(), 0);
  for (int i = 0; i < spec.feature_count(); ++i) {
    int c = sample.categories[i];
    if (c < 0 || c >= spec.category_count(i))
      throw Error("encode_one_hot: invalid sample, category out of range");
    v.bits[spec.offset(i) + c] = 1;
  }
  return v;
}

ProbeVector make_probe(const CategorySpec& spec,
                       const std::vector<std::pair<int, int>>& entries) {
  ProbeVector v;
  v.bits.assign(spec.total_dimension(), 0);
  for (auto [feature, category] : entries)
    v.bits[spec.flat_index(feature, category)] = 1;
  return v;
}

bool validate_one_hot(const ProbeVector& vec, const CategorySpec& spec) {
  if (vec.size() != spec.total_dimension())
    throw Error("validate_one_hot: length mismatch");
  for (int i = 0; i < spec.feature_count(); ++i) {
    int sum = 0;
    for (int a = 0; a < spec.category_count(i); ++a)
      sum += vec.bits[spec.offset(i) + a];
    if (sum != 1) return false;
  }
  return true;
}

CategoricalSample decode_one_hot(const ProbeVector& vec,
                                 const CategorySpec& spec) {
  if (!validate_one_hot(vec, spec))
    throw Error("decode_one_hot: vector is not one-hot");
  CategoricalSample s;
  s.categories.resize(spec.feature_count());
  for (int i = 0; i < spec.feature_count(); ++i)
    for (int a = 0; a < spec.category_count(i); ++a)
      if (vec.bits[spec.offset(i) + a]) s.categories[i] = a;
  return s;
}

namespace {
constexpr std::uint32_t kDatasetVersion = 1;
}

void save_dataset(const LabeledDataset& data, const std::string& path) {
  data.validate();
  BinaryWriter w(path);
  w.magic("CATD");
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(data.spec.feature_count()));
  w.u32(static_cast<std::uint32_t>(data.class_count));
  for (int c : data.spec.category_counts()) w.u32(static_cast<std::uint32_t>(c));
  w.u64(data.samples.size());
  for (const auto& s : data.samples)
    for (int c : s.categories) w.u16(static_cast<std::uint16_t>(c));
  for (int l : data.labels) w.u32(static_cast<std::uint32_t>(l));
  for (double wt : data.weights) w.f64(wt);
}

LabeledDataset load_dataset(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic("CATD");
  r.expect_version(kDatasetVersion);
  LabeledDataset data;
  int n = static_cast<int>(r.u32());
  data.class_count = static_cast<int>(r.u32());
  std::vector<int> counts(n);
  for (int& c : counts) c = static_cast<int>(r.u32());
  data.spec = CategorySpec(counts);
  std::size_t m = r.u64();
  data.samples.resize(m);
  for (auto& s : data.samples) {
    s.categories.resize(n);
    for (int& c : s.categories) c = r.u16();
  }
  data.labels.resize(m);
  for (int& l : data.labels) l = static_cast<int>(r.u32());
  data.weights.resize(m);
  for (double& w : data.weights) w = r.f64();
  data.validate();
  return data;
}

}  // namespace catexpand
