#include "catexpand/mnist.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "catexpand/expansion.hpp"
#include "catexpand/gauge.hpp"

namespace catexpand {

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw Error("truncated IDX header in " + path);
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

RawImageSet load_idx(const std::string& images_path,
                     const std::string& labels_path) {
  RawImageSet set;

  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw Error("cannot open IDX image file: " + images_path);
  std::uint32_t magic = read_be32(img, images_path);
  if (magic != 2051)
    throw Error("bad IDX magic " + std::to_string(magic) + " in " + images_path +
                " (expected 2051)");
  std::uint32_t count = read_be32(img, images_path);
  set.rows = static_cast<int>(read_be32(img, images_path));
  set.cols = static_cast<int>(read_be32(img, images_path));
  std::size_t total = std::size_t(count) * set.rows * set.cols;
  set.pixels.resize(total);
  img.read(reinterpret_cast<char*>(set.pixels.data()),
           static_cast<std::streamsize>(total));
  if (!img) throw Error("truncated IDX image data in " + images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw Error("cannot open IDX label file: " + labels_path);
  magic = read_be32(lab, labels_path);
  if (magic != 2049)
    throw Error("bad IDX magic " + std::to_string(magic) + " in " + labels_path +
                " (expected 2049)");
  std::uint32_t label_count = read_be32(lab, labels_path);
  if (label_count != count)
    throw Error("IDX count mismatch: " + std::to_string(count) + " images vs " +
                std::to_string(label_count) + " labels");
  std::vector<std::uint8_t> raw(label_count);
  lab.read(reinterpret_cast<char*>(raw.data()), label_count);
  if (!lab) throw Error("truncated IDX label data in " + labels_path);
  set.labels.assign(raw.begin(), raw.end());
  return set;
}

int QuantizerModel::quantize_value(int pixel, double value) const {
  const auto& t = thresholds[pixel];
  int c = 0;
  while (c < static_cast<int>(t.size()) && value > t[c]) ++c;
  return c;
}

QuantizerModel fit_quantizer(const RawImageSet& train, int bits) {
  if (bits != 1 && bits != 2) throw Error("fit_quantizer: bits must be 1 or 2");
  if (train.count() == 0) throw Error("fit_quantizer: empty training set");
  QuantizerModel q;
  q.bits = bits;
  const int p = train.pixel_count();
  q.thresholds.resize(p);
  const std::size_t m = train.count();
  if (bits == 1) {
    // threshold at the per-pixel training mean; "less or equal" -> 0
    std::vector<double> sums(p, 0.0);
    for (std::size_t s = 0; s < m; ++s) {
      const std::uint8_t* im = train.image(s);
      for (int i = 0; i < p; ++i) sums[i] += im[i];
    }
    for (int i = 0; i < p; ++i) q.thresholds[i] = {sums[i] / double(m)};
  } else {
    // quartile boundaries (linear interpolation between order statistics)
    std::vector<double> column(m);
    for (int i = 0; i < p; ++i) {
      for (std::size_t s = 0; s < m; ++s) column[s] = train.image(s)[i];
      std::sort(column.begin(), column.end());
      q.thresholds[i].resize(3);
      for (int t = 0; t < 3; ++t) {
        double pos = 0.25 * (t + 1) * (double(m) - 1.0);
        std::size_t lo = static_cast<std::size_t>(pos);
        double frac = pos - double(lo);
        double v = column[lo];
        if (lo + 1 < m) v += frac * (column[lo + 1] - column[lo]);
        q.thresholds[i][t] = v;
      }
    }
  }
  return q;
}

LabeledDataset quantize(const RawImageSet& images, const QuantizerModel& q) {
  if (static_cast<int>(q.thresholds.size()) != images.pixel_count())
    throw Error("quantize: quantizer/image geometry mismatch");
  LabeledDataset data;
  const int p = images.pixel_count();
  data.spec = CategorySpec(std::vector<int>(p, q.categories()));
  data.class_count = 10;
  data.samples.resize(images.count());
  data.labels = images.labels;
  data.weights.assign(images.count(), 1.0);
  for (std::size_t m = 0; m < images.count(); ++m) {
    auto& cats = data.samples[m].categories;
    cats.resize(p);
    const std::uint8_t* im = images.image(m);
    for (int i = 0; i < p; ++i) cats[i] = q.quantize_value(i, im[i]);
  }
  return data;
}

void write_pgm(const std::string& path, const Eigen::MatrixXd& values) {
  double mx = values.maxCoeff();
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error("cannot open for writing: " + path);
  std::fprintf(f, "P5\n%d %d\n255\n", static_cast<int>(values.cols()),
               static_cast<int>(values.rows()));
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      double v = mx > 0 ? values(r, c) / mx : 0.0;
      auto byte = static_cast<unsigned char>(std::lround(255.0 * v));
      std::fputc(byte, f);
    }
  std::fclose(f);
}

Eigen::MatrixXd read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open PGM: " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255) throw Error("unsupported PGM: " + path);
  in.get();  // single whitespace after header
  Eigen::MatrixXd m(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      int byte = in.get();
      if (byte < 0) throw Error("truncated PGM: " + path);
      m(r, c) = byte / 255.0;
    }
  return m;
}

std::vector<std::string> emit_score_maps(const ScoreSet& first,
                                         const ScoreSet& second,
                                         const RawImageSet& train,
                                         const std::vector<int>& train_subset,
                                         int grid_width,
                                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  const int n = first.feature_count;
  const int side = grid_width;
  if (side * side != n) throw Error("emit_score_maps: features not a square grid");

  for (int l = 0; l < first.class_count; ++l) {
    Eigen::MatrixXd map(side, side);
    for (int i = 0; i < n; ++i) map(i / side, i % side) = first.first_order(i, l);
    std::string path = out_dir + "/score1_class" + std::to_string(l) + ".pgm";
    write_pgm(path, map);
    files.push_back(path);
  }

  // one coefficient-magnitude pixel per pair, flat pixel-index layout
  Eigen::MatrixXd pairmap = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = second.pair_total(i, j);
      pairmap(i, j) = v;
      pairmap(j, i) = v;
    }
  std::string pair_path = out_dir + "/score2_map.pgm";
  write_pgm(pair_path, pairmap);
  files.push_back(pair_path);

  auto top = top_pairs(second, 20, 2, true, grid_width);
  std::string top_path = out_dir + "/score2_top_pairs.csv";
  {
    std::FILE* f = std::fopen(top_path.c_str(), "w");
    if (!f) throw Error("cannot open for writing: " + top_path);
    std::fprintf(f, "rank,i,j,row_i,col_i,row_j,col_j,score\n");
    for (std::size_t r = 0; r < top.size(); ++r)
      std::fprintf(f, "%zu,%d,%d,%d,%d,%d,%d,%.17g\n", r + 1, top[r].i, top[r].j,
                   top[r].i / side, top[r].i % side, top[r].j / side,
                   top[r].j % side, top[r].score);
    std::fclose(f);
  }
  files.push_back(top_path);

  // per-class mean digits over the training subset, for overlay plots
  std::vector<Eigen::MatrixXd> means(10, Eigen::MatrixXd::Zero(side, side));
  std::vector<int> counts(10, 0);
  for (int m : train_subset) {
    const std::uint8_t* im = train.image(m);
    int l = train.labels[m];
    ++counts[l];
    for (int i = 0; i < n; ++i) means[l](i / side, i % side) += im[i] / 255.0;
  }
  std::string mean_path = out_dir + "/mean_digits.csv";
  {
    std::FILE* f = std::fopen(mean_path.c_str(), "w");
    if (!f) throw Error("cannot open for writing: " + mean_path);
    std::fprintf(f, "class,pixel,value\n");
    for (int l = 0; l < 10; ++l)
      for (int i = 0; i < n; ++i)
        std::fprintf(f, "%d,%d,%.17g\n", l, i,
                     counts[l] ? means[l](i / side, i % side) / counts[l] : 0.0);
    std::fclose(f);
  }
  files.push_back(mean_path);
  return files;
}

MnistReport run_mnist_experiment(const MnistConfig& config) {
  namespace fs = std::filesystem;
  RawImageSet raw = load_idx(config.images_path, config.labels_path);

  int train_count = config.full_scale ? 50000 : config.train_count;
  int val_count = config.full_scale
                      ? static_cast<int>(raw.count()) - train_count
                      : config.val_count;
  int hidden = config.full_scale ? 800 : config.hidden_units;
  if (static_cast<std::size_t>(train_count + val_count) > raw.count())
    throw Error("run_mnist_experiment: split larger than dataset (" +
                std::to_string(raw.count()) + " images)");

  // seeded random split
  std::vector<int> perm(raw.count());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> train_idx(perm.begin(), perm.begin() + train_count);
  std::vector<int> val_idx(perm.begin() + train_count,
                           perm.begin() + train_count + val_count);

  auto subset = [&](const std::vector<int>& idx) {
    RawImageSet s;
    s.rows = raw.rows;
    s.cols = raw.cols;
    s.labels.reserve(idx.size());
    s.pixels.reserve(idx.size() * raw.pixel_count());
    for (int m : idx) {
      s.labels.push_back(raw.labels[m]);
      const std::uint8_t* im = raw.image(m);
      s.pixels.insert(s.pixels.end(), im, im + raw.pixel_count());
    }
    return s;
  };
  RawImageSet train_images = subset(train_idx);
  RawImageSet val_images = subset(val_idx);

  // thresholds from the training split only
  QuantizerModel q = fit_quantizer(train_images, config.bits);
  LabeledDataset train_data = quantize(train_images, q);
  LabeledDataset val_data = quantize(val_images, q);

  TrainConfig tc;
  tc.learning_rate = config.learning_rate;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.l2_coefficient = config.l2;
  tc.rng_seed = config.seed;
  NetworkParams net0 = init_network(train_data.spec, 10, hidden,
                                    Activation::Tanh, config.seed);
  auto [net, train_report] = train(net0, train_data, tc);

  MnistReport report;
  report.train_accuracy = train_report.final_train_accuracy;
  report.validation_accuracy = accuracy(net, val_data);
  report.convergence_residual = train_report.convergence_residual;
  report.epoch_losses = train_report.epoch_losses;

  ExpansionCoefficients coeffs = closed_form_expand(net, 2, config.threads);
  coeffs = ising_gauge_fix(coeffs, config.threads);
  GaugeReport gauge = gauge_residuals(coeffs);
  report.gauge_residual_order1 = gauge.max_order1_residual;
  report.gauge_residual_order2 = gauge.max_order2_residual;

  report.train_truncation = truncation_report(net, coeffs, train_data);
  report.validation_truncation = truncation_report(net, coeffs, val_data);

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    std::string model_path = config.out_dir + "/model.cnet";
    save_network(net, model_path);
    report.artifacts.push_back(model_path);
    std::string coeff_path = config.out_dir + "/coefficients.cexp";
    save_coefficients(coeffs, coeff_path);
    report.artifacts.push_back(coeff_path);

    ScoreSet s1 = first_order_scores(coeffs);
    ScoreSet s2 = second_order_scores(coeffs);
    std::string s1_path = config.out_dir + "/first_order_scores.csv";
    save_first_order_csv(s1, s1_path);
    report.artifacts.push_back(s1_path);
    std::string s2_path = config.out_dir + "/pair_scores.csv";
    save_pair_scores_csv(s2, s2_path);
    report.artifacts.push_back(s2_path);

    auto maps = emit_score_maps(s1, s2, train_images,
                                [&] {
                                  std::vector<int> all(train_images.count());
                                  std::iota(all.begin(), all.end(), 0);
                                  return all;
                                }(),
                                raw.cols, config.out_dir);
    report.artifacts.insert(report.artifacts.end(), maps.begin(), maps.end());
  }
  return report;
}

}  // namespace catexpand
