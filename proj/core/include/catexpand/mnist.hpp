#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catexpand/categorical.hpp"
#include "catexpand/network.hpp"
#include "catexpand/scoring.hpp"

namespace catexpand {

struct RawImageSet {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
  std::vector<int> labels;

  std::size_t count() const { return labels.size(); }
  int pixel_count() const { return rows * cols; }
  const std::uint8_t* image(std::size_t m) const {
    return pixels.data() + m * static_cast<std::size_t>(pixel_count());
  }
};

/// Parses the big-endian IDX pair (magic 2051 images / 2049 labels).
RawImageSet load_idx(const std::string& images_path,
                     const std::string& labels_path);

/// Per-pixel quantizer fitted on the training split only. bits=1 gives two
/// categories split at the pixel mean ("less or equal" maps to 0); bits=2
/// gives four categories split at the quartile boundaries.
struct QuantizerModel {
  int bits = 1;
  int categories() const { return 1 << bits; }
  // thresholds[p] has (categories - 1) non-decreasing boundaries
  std::vector<std::vector<double>> thresholds;

  int quantize_value(int pixel, double value) const;
};

QuantizerModel fit_quantizer(const RawImageSet& train, int bits);

LabeledDataset quantize(const RawImageSet& images, const QuantizerModel& q);

struct MnistConfig {
  std::string images_path;
  std::string labels_path;
  int bits = 1;
  bool full_scale = false;  // desk scale: 5000 train / 1000 val, H=128
  int train_count = 5000;
  int val_count = 1000;
  int hidden_units = 128;
  double learning_rate = 0.005;
  double l2 = 0.01;
  int batch_size = 128;
  int epochs = 30;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir;
};

struct MnistReport {
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  TruncationReport train_truncation;
  TruncationReport validation_truncation;
  double convergence_residual = 0.0;
  double gauge_residual_order1 = 0.0;
  double gauge_residual_order2 = 0.0;
  std::vector<double> epoch_losses;
  std::vector<std::string> artifacts;
};

/// Full pipeline: load, quantize, train, expand (closed form), gauge-fix,
/// score, truncation study, artifact emission. Deterministic given seed.
MnistReport run_mnist_experiment(const MnistConfig& config);

// Binary PGM (P5) helpers used for the score maps.
void write_pgm(const std::string& path, const Eigen::MatrixXd& values);
Eigen::MatrixXd read_pgm(const std::string& path);

/// Per class: a 28x28 first-order score map (max-normalized, black = zero), a
/// P x P class-aggregated second-order map in flat pixel-index layout, and a
/// CSV of the top non-adjacent pairs plus per-class mean digits for overlays.
std::vector<std::string> emit_score_maps(const ScoreSet& first,
                                         const ScoreSet& second,
                                         const RawImageSet& train,
                                         const std::vector<int>& train_subset,
                                         int grid_width,
                                         const std::string& out_dir);

}  // namespace catexpand
