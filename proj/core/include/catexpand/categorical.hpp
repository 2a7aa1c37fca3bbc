#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace catexpand {

/// Error type used across the library for contract violations and I/O
/// failures.
class Error : public std::exception {
 public:
  explicit Error(std::string msg) : msg_(std::move(msg)) {}
  const char* what() const noexcept override { return msg_.c_str(); }

 private:
  std::string msg_;
};

/// Layout of a categorical input space: N features, feature i taking one of
/// n_i categories. The flattened one-hot vector is feature-major with the
/// categories of each feature contiguous.
class CategorySpec {
 public:
  CategorySpec() = default;
  explicit CategorySpec(std::vector<int> category_counts);

  int feature_count() const { return static_cast<int>(counts_.size()); }
  int category_count(int feature) const { return counts_.at(feature); }
  const std::vector<int>& category_counts() const { return counts_; }

  /// Start of feature i's block in the flattened layout.
  int offset(int feature) const { return offsets_.at(feature); }

  /// Total one-hot dimension D = sum of n_i.
  int total_dimension() const { return total_dim_; }

  /// Flat index of (feature, category).
  int flat_index(int feature, int category) const;

  /// Inverse of flat_index.
  std::pair<int, int> feature_category(int flat) const;

  bool operator==(const CategorySpec& other) const {
    return counts_ == other.counts_;
  }

 private:
  std::vector<int> counts_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
};

/// One category per feature; always a valid one-hot input.
struct CategoricalSample {
  std::vector<int> categories;
};

/// A raw binary vector over the flattened layout. Unlike CategoricalSample it
/// may violate the one-hot constraint: the all-zero vector and multi-hot
/// vectors are legal probes.
struct ProbeVector {
  std::vector<std::uint8_t> bits;

  int size() const { return static_cast<int>(bits.size()); }
  int popcount() const;
  std::vector<int> active_indices() const;
};

struct LabeledDataset {
  CategorySpec spec;
  int class_count = 0;
  std::vector<CategoricalSample> samples;
  std::vector<int> labels;
  std::vector<double> weights;

  std::size_t size() const { return samples.size(); }
  void validate() const;
};

ProbeVector encode_one_hot(const CategoricalSample& sample,
                           const CategorySpec& spec);

/// Builds a probe from a set of (feature, category) entries. The empty set
/// yields the all-zero vector. One-hot validity is deliberately not enforced.
ProbeVector make_probe(const CategorySpec& spec,
                       const std::vector<std::pair<int, int>>& entries);

/// True iff every feature block sums to exactly one.
bool validate_one_hot(const ProbeVector& vec, const CategorySpec& spec);

/// Inverse of encode_one_hot; requires a valid one-hot vector.
CategoricalSample decode_one_hot(const ProbeVector& vec,
                                 const CategorySpec& spec);

// Columnar binary dataset container ("CATD").
void save_dataset(const LabeledDataset& data, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

}  // namespace catexpand
