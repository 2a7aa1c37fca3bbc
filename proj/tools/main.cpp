// catexpand: train categorical classifiers, expand their logits into exact
// polynomial coefficients, gauge-fix and score them, and run the bundled
// image / sequence-alignment experiments.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "catexpand/expansion.hpp"
#include "catexpand/gauge.hpp"
#include "catexpand/mnist.hpp"
#include "catexpand/msa.hpp"
#include "catexpand/network.hpp"
#include "catexpand/scoring.hpp"

#ifndef CATEXPAND_VERSION
#define CATEXPAND_VERSION "0.0.0"
#endif

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw catexpand::Error("cannot open input for hashing: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

/// One manifest per run: resolved configuration, hashed inputs, artifact
/// paths, seeds, wall-clock timings, library version.
class ManifestBuilder {
 public:
  explicit ManifestBuilder(std::string subcommand)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["version"] = CATEXPAND_VERSION;
    doc_["config"] = json::object();
    doc_["inputs"] = json::array();
    doc_["seeds"] = json::object();
    doc_["artifacts"] = json::array();
  }

  json& config() { return doc_["config"]; }
  void seed(const std::string& name, std::uint64_t value) {
    doc_["seeds"][name] = value;
  }
  void input(const std::string& path) {
    doc_["inputs"].push_back({{"path", path}, {"fnv1a64", fnv1a64_file(path)}});
  }
  void artifact(const std::string& path) { doc_["artifacts"].push_back(path); }
  void artifacts(const std::vector<std::string>& paths) {
    for (const auto& p : paths) artifact(p);
  }
  void extra(const std::string& key, const json& value) { doc_[key] = value; }

  void write(const std::string& path) {
    auto elapsed = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start_)
                       .count();
    doc_["timings"] = {{"wall_seconds", elapsed}};
    std::ofstream out(path);
    if (!out) throw catexpand::Error("cannot write manifest: " + path);
    out << doc_.dump(2) << "\n";
    std::cerr << "manifest: " << path << "\n";
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw catexpand::Error("cannot create directory " + dir + ": " +
                                 ec.message());
}

// ---------------------------------------------------------------------------
// mnist

struct MnistArgs {
  catexpand::MnistConfig config;
};

void run_mnist(const MnistArgs& a) {
  ManifestBuilder manifest("mnist");
  manifest.input(a.config.images_path);
  manifest.input(a.config.labels_path);
  manifest.seed("experiment", a.config.seed);
  manifest.config() = {{"images", a.config.images_path},
                       {"labels", a.config.labels_path},
                       {"bits", a.config.bits},
                       {"full_scale", a.config.full_scale},
                       {"train_count", a.config.train_count},
                       {"val_count", a.config.val_count},
                       {"hidden", a.config.hidden_units},
                       {"lr", a.config.learning_rate},
                       {"l2", a.config.l2},
                       {"batch", a.config.batch_size},
                       {"epochs", a.config.epochs},
                       {"seed", a.config.seed},
                       {"threads", a.config.threads},
                       {"out", a.config.out_dir}};
  ensure_dir(a.config.out_dir);
  catexpand::MnistReport report = catexpand::run_mnist_experiment(a.config);
  std::cerr << "train accuracy:      " << report.train_accuracy << "\n"
            << "validation accuracy: " << report.validation_accuracy << "\n"
            << "validation order-2:  " << report.validation_truncation.order2_accuracy
            << "\n"
            << "validation order-1:  " << report.validation_truncation.order1_accuracy
            << "\n"
            << "convergence residual: " << report.convergence_residual << "\n";
  manifest.extra("results",
                 {{"train_accuracy", report.train_accuracy},
                  {"validation_accuracy", report.validation_accuracy},
                  {"validation_order2", report.validation_truncation.order2_accuracy},
                  {"validation_order1", report.validation_truncation.order1_accuracy},
                  {"convergence_residual", report.convergence_residual},
                  {"gauge_residual_order1", report.gauge_residual_order1},
                  {"gauge_residual_order2", report.gauge_residual_order2}});
  manifest.artifacts(report.artifacts);
  manifest.write(a.config.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------------------
// dca

struct DcaArgs {
  std::string msa_path;
  double gap_max = 0.10;
  double id_thresh = 0.8;
  catexpand::PositionNetConfig net;
  std::string out_dir;
  std::string distogram;
  int top_pairs = 0;  // 0 = all ranked pairs
  int top_triplets = 10;
  int min_sep = 5;
  double contact_threshold = 8.0;
};

void run_dca(const DcaArgs& a) {
  ManifestBuilder manifest("dca");
  manifest.input(a.msa_path);
  manifest.seed("training", a.net.seed);
  manifest.config() = {{"msa", a.msa_path},
                       {"gap_max", a.gap_max},
                       {"id_thresh", a.id_thresh},
                       {"hidden", a.net.hidden_units},
                       {"lr", a.net.learning_rate},
                       {"epochs", a.net.epochs},
                       {"batch", a.net.batch_size},
                       {"l2", a.net.l2},
                       {"seed", a.net.seed},
                       {"threads", a.net.threads},
                       {"distogram", a.distogram},
                       {"top_pairs", a.top_pairs},
                       {"top_triplets", a.top_triplets},
                       {"min_sep", a.min_sep},
                       {"contact_threshold", a.contact_threshold},
                       {"out", a.out_dir}};
  ensure_dir(a.out_dir);

  catexpand::WeightedAlignment msa = catexpand::load_alignment(a.msa_path);
  std::cerr << "loaded " << msa.count() << " sequences of length "
            << msa.length << "\n";
  msa = catexpand::filter_gaps(msa, a.gap_max);
  std::cerr << "after gap filter: " << msa.count() << " sequences\n";
  msa = catexpand::compute_weights(msa, a.id_thresh, a.net.threads);
  std::cerr << "effective sequence count: " << msa.effective_count() << "\n";

  std::vector<catexpand::NetworkParams> nets =
      catexpand::train_position_networks(msa, a.net);
  std::vector<catexpand::ExpansionCoefficients> exps =
      catexpand::expand_position_networks(nets, a.net.threads);

  Eigen::MatrixXd pairs = catexpand::aggregate_pair_scores(exps);
  std::string dense_path = a.out_dir + "/pair_scores.csv";
  catexpand::save_matrix_csv(pairs, dense_path);
  manifest.artifact(dense_path);

  // ranked list of pairs at the requested separation
  struct Row {
    int i, j;
    double s;
  };
  std::vector<Row> ranked;
  for (int i = 0; i < msa.length; ++i)
    for (int j = i + 1; j < msa.length; ++j)
      if (j - i >= a.min_sep) ranked.push_back({i, j, pairs(i, j)});
  std::sort(ranked.begin(), ranked.end(), [](const Row& x, const Row& y) {
    if (x.s != y.s) return x.s > y.s;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  if (a.top_pairs > 0 && static_cast<int>(ranked.size()) > a.top_pairs)
    ranked.resize(a.top_pairs);
  std::string ranked_path = a.out_dir + "/pair_ranking.csv";
  {
    std::ofstream out(ranked_path);
    out << "i,j,score\n";
    char buf[64];
    for (const Row& r : ranked) {
      std::snprintf(buf, sizeof buf, "%.17g", r.s);
      out << r.i << "," << r.j << "," << buf << "\n";
    }
  }
  manifest.artifact(ranked_path);

  std::vector<catexpand::RankedTriplet> triplets =
      catexpand::aggregate_triplet_scores(exps, a.top_triplets);
  std::string triplet_path = a.out_dir + "/triplet_ranking.csv";
  {
    std::ofstream out(triplet_path);
    out << "i,j,k,score\n";
    char buf[64];
    for (const auto& t : triplets) {
      std::snprintf(buf, sizeof buf, "%.17g", t.score);
      out << t.i << "," << t.j << "," << t.k << "," << buf << "\n";
    }
  }
  manifest.artifact(triplet_path);

  std::vector<double> acc_full = catexpand::per_position_accuracy(
      nets, exps, msa, catexpand::TruncationOrder::Full);
  std::vector<double> acc2 = catexpand::per_position_accuracy(
      nets, exps, msa, catexpand::TruncationOrder::Order2);
  std::vector<double> acc1 = catexpand::per_position_accuracy(
      nets, exps, msa, catexpand::TruncationOrder::Order1);
  std::string acc_path = a.out_dir + "/position_accuracy.csv";
  {
    std::ofstream out(acc_path);
    out << "position,full,order2,order1\n";
    char buf[128];
    for (int k = 0; k < msa.length; ++k) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g", k, acc_full[k],
                    acc2[k], acc1[k]);
      out << buf << "\n";
    }
  }
  manifest.artifact(acc_path);

  if (!a.distogram.empty()) {
    manifest.input(a.distogram);
    Eigen::MatrixXd dist = catexpand::load_distance_csv(a.distogram);
    int k = a.top_pairs > 0 ? a.top_pairs : static_cast<int>(ranked.size());
    double ppv = catexpand::ppv_against_distogram(
        pairs, dist, k, a.contact_threshold, a.min_sep);
    std::cerr << "ppv@" << k << ": " << ppv << "\n";
    manifest.extra("results", {{"ppv", ppv}, {"top_k", k}});
  }
  manifest.write(a.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------------------
// synth-msa

struct SynthArgs {
  std::string model_path;
  int samples = 1000;
  int burn_in = 200;
  int thin = 5;
  std::uint64_t seed = 0;
  std::string out_path;
};

void run_synth(const SynthArgs& a) {
  ManifestBuilder manifest("synth-msa");
  manifest.input(a.model_path);
  manifest.seed("gibbs", a.seed);
  manifest.config() = {{"spec", a.model_path}, {"samples", a.samples},
                       {"burn_in", a.burn_in}, {"thin", a.thin},
                       {"seed", a.seed},       {"out", a.out_path}};
  catexpand::PlantedPottsModel model =
      catexpand::load_potts_model(a.model_path);
  catexpand::WeightedAlignment msa = catexpand::synth_potts_msa(
      model, a.samples, a.burn_in, a.thin, a.seed);
  catexpand::save_fasta(msa, a.out_path);
  std::cerr << "wrote " << msa.count() << " sampled sequences of length "
            << msa.length << "\n";
  manifest.artifact(a.out_path);
  manifest.write(a.out_path + ".manifest.json");
}

// ---------------------------------------------------------------------------
// expand

struct ExpandArgs {
  std::string model_path;
  int order = 2;
  std::string method = "closed-form";
  bool gauge = false;
  bool verify = false;
  int threads = 0;
  std::string out_path;
};

void run_expand(const ExpandArgs& a) {
  ManifestBuilder manifest("expand");
  manifest.input(a.model_path);
  manifest.config() = {{"model", a.model_path}, {"order", a.order},
                       {"method", a.method},    {"gauge", a.gauge},
                       {"verify", a.verify},    {"threads", a.threads},
                       {"out", a.out_path}};
  catexpand::NetworkParams net = catexpand::load_network(a.model_path);
  catexpand::LogitEvaluator eval = [&net](const catexpand::ProbeVector& p) {
    return catexpand::forward_logits(net, p);
  };
  catexpand::ExpansionCoefficients coeffs =
      a.method == "probe"
          ? catexpand::probe_expand(eval, net.spec, net.class_count, a.order,
                                    a.threads)
          : catexpand::closed_form_expand(net, a.order, a.threads);
  if (a.verify) {
    catexpand::ExpansionCoefficients other =
        a.method == "probe"
            ? catexpand::closed_form_expand(net, a.order, a.threads)
            : catexpand::probe_expand(eval, net.spec, net.class_count, a.order,
                                      a.threads);
    double dev =
        (coeffs.order0() - other.order0()).cwiseAbs().maxCoeff();
    dev = std::max(dev,
                   (coeffs.order1() - other.order1()).cwiseAbs().maxCoeff());
    for (int p = 0; p < coeffs.pair_count(); ++p) {
      const double* x = coeffs.pair_block(p);
      const double* y = other.pair_block(p);
      for (std::size_t v = 0; v < coeffs.pair_block_size(p); ++v)
        dev = std::max(dev, std::abs(x[v] - y[v]));
    }
    std::cerr << "method cross-check max deviation: " << dev << "\n";
    manifest.extra("results", {{"max_method_deviation", dev}});
  }
  if (a.gauge) {
    coeffs = catexpand::ising_gauge_fix(coeffs, a.threads);
    catexpand::GaugeReport rep = catexpand::gauge_residuals(coeffs);
    std::cerr << "gauge residuals: order1 " << rep.max_order1_residual
              << ", order2 " << rep.max_order2_residual << "\n";
  }
  catexpand::save_coefficients(coeffs, a.out_path);
  manifest.artifact(a.out_path);
  manifest.write(a.out_path + ".manifest.json");
}

// ---------------------------------------------------------------------------
// gauge

struct GaugeArgs {
  std::string in_path;
  std::string out_path;
  double shift = 0.0;
  bool apply_shift = false;
  int threads = 0;
};

void run_gauge(const GaugeArgs& a) {
  ManifestBuilder manifest("gauge");
  manifest.input(a.in_path);
  manifest.config() = {{"coefficients", a.in_path},
                       {"shift", a.apply_shift ? json(a.shift) : json()},
                       {"threads", a.threads},
                       {"out", a.out_path}};
  catexpand::ExpansionCoefficients coeffs =
      catexpand::load_coefficients(a.in_path);
  if (a.apply_shift) {
    coeffs = catexpand::apply_constant_shift(coeffs, a.shift);
    std::cerr << "applied constant shift " << a.shift << "\n";
  } else {
    coeffs = catexpand::ising_gauge_fix(coeffs, a.threads);
    catexpand::GaugeReport rep = catexpand::gauge_residuals(coeffs);
    std::cerr << "gauge residuals: order1 " << rep.max_order1_residual
              << ", order2 " << rep.max_order2_residual << "\n";
    manifest.extra("results",
                   {{"order1_residual", rep.max_order1_residual},
                    {"order2_residual", rep.max_order2_residual}});
  }
  catexpand::save_coefficients(coeffs, a.out_path);
  manifest.artifact(a.out_path);
  manifest.write(a.out_path + ".manifest.json");
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string coeff_path;
  std::string out_dir;
  int top = 20;
  int min_sep = 1;
  int grid_width = 0;
  bool per_class = false;
};

void run_score(const ScoreArgs& a) {
  ManifestBuilder manifest("score");
  manifest.input(a.coeff_path);
  manifest.config() = {{"coefficients", a.coeff_path},
                       {"top", a.top},
                       {"min_sep", a.min_sep},
                       {"grid_width", a.grid_width},
                       {"per_class", a.per_class},
                       {"out", a.out_dir}};
  ensure_dir(a.out_dir);
  catexpand::ExpansionCoefficients coeffs =
      catexpand::load_coefficients(a.coeff_path);
  catexpand::ScoreSet first = catexpand::first_order_scores(coeffs);
  catexpand::ScoreSet second = catexpand::second_order_scores(coeffs);

  std::string first_path = a.out_dir + "/first_order_scores.csv";
  catexpand::save_first_order_csv(first, first_path);
  manifest.artifact(first_path);

  std::string matrix_path = a.out_dir + "/pair_score_matrix.csv";
  catexpand::save_pair_matrix_csv(second, matrix_path);
  manifest.artifact(matrix_path);

  if (a.per_class) {
    std::string per_class_path = a.out_dir + "/pair_scores_per_class.csv";
    catexpand::save_pair_scores_csv(second, per_class_path);
    manifest.artifact(per_class_path);
  }

  std::vector<catexpand::RankedPair> top = catexpand::top_pairs(
      second, a.top, a.min_sep, /*class_aggregate=*/true, a.grid_width);
  std::string top_path = a.out_dir + "/top_pairs.csv";
  {
    std::ofstream out(top_path);
    out << "i,j,score\n";
    char buf[64];
    for (const auto& p : top) {
      std::snprintf(buf, sizeof buf, "%.17g", p.score);
      out << p.i << "," << p.j << "," << buf << "\n";
    }
  }
  manifest.artifact(top_path);
  manifest.write(a.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------------------
// truncate-eval

struct TruncateArgs {
  std::string model_path;
  std::string coeff_path;
  std::string data_path;
  std::string out_path;
};

void run_truncate(const TruncateArgs& a) {
  ManifestBuilder manifest("truncate-eval");
  manifest.input(a.model_path);
  manifest.input(a.coeff_path);
  manifest.input(a.data_path);
  manifest.config() = {{"model", a.model_path},
                       {"coefficients", a.coeff_path},
                       {"data", a.data_path},
                       {"out", a.out_path}};
  catexpand::NetworkParams net = catexpand::load_network(a.model_path);
  catexpand::ExpansionCoefficients coeffs =
      catexpand::load_coefficients(a.coeff_path);
  catexpand::LabeledDataset data = catexpand::load_dataset(a.data_path);
  catexpand::TruncationReport rep =
      catexpand::truncation_report(net, coeffs, data);
  std::cerr << "full accuracy:    " << rep.full_accuracy << "\n"
            << "order-2 accuracy: " << rep.order2_accuracy << "\n"
            << "order-1 accuracy: " << rep.order1_accuracy << "\n";
  json report = {{"full_accuracy", rep.full_accuracy},
                 {"order2_accuracy", rep.order2_accuracy},
                 {"order1_accuracy", rep.order1_accuracy}};
  {
    std::ofstream out(a.out_path);
    if (!out) throw catexpand::Error("cannot write report: " + a.out_path);
    out << report.dump(2) << "\n";
  }
  manifest.extra("results", report);
  manifest.artifact(a.out_path);
  manifest.write(a.out_path + ".manifest.json");
}

// ---------------------------------------------------------------------------
// ppv

struct PpvArgs {
  std::string pairs_path;
  std::string distogram_path;
  int top = 0;
  double contact_threshold = 8.0;
  int min_sep = 5;
  std::string out_path = "ppv.json";
};

void run_ppv(const PpvArgs& a) {
  ManifestBuilder manifest("ppv");
  manifest.input(a.pairs_path);
  manifest.input(a.distogram_path);
  manifest.config() = {{"pairs", a.pairs_path},
                       {"distogram", a.distogram_path},
                       {"top", a.top},
                       {"contact_threshold", a.contact_threshold},
                       {"min_sep", a.min_sep},
                       {"out", a.out_path}};
  Eigen::MatrixXd pairs = catexpand::load_distance_csv(a.pairs_path);
  Eigen::MatrixXd dist = catexpand::load_distance_csv(a.distogram_path);
  int L = static_cast<int>(pairs.rows());
  int k = a.top > 0 ? a.top : L * (L - 1) / 2;
  double ppv = catexpand::ppv_against_distogram(pairs, dist, k,
                                                a.contact_threshold, a.min_sep);
  std::cout << ppv << "\n";
  json report = {{"ppv", ppv}, {"top_k", k}};
  {
    std::ofstream out(a.out_path);
    if (!out) throw catexpand::Error("cannot write report: " + a.out_path);
    out << report.dump(2) << "\n";
  }
  manifest.extra("results", report);
  manifest.artifact(a.out_path);
  manifest.write(a.out_path + ".manifest.json");
}

// ---------------------------------------------------------------------------

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

const std::vector<std::string> kSubcommands = {
    "mnist", "dca", "synth-msa", "expand",
    "gauge", "score", "truncate-eval", "ppv"};

void suggest_subcommand(const std::string& arg) {
  std::string best;
  int best_d = 1 << 30;
  for (const auto& s : kSubcommands) {
    int d = edit_distance(arg, s);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  std::cerr << "unknown subcommand '" << arg << "'";
  if (best_d <= 4) std::cerr << "; did you mean '" << best << "'?";
  std::cerr << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catexpand: polynomial expansion of categorical classifiers"};
  app.set_version_flag("--version", std::string("catexpand ") + CATEXPAND_VERSION);
  app.set_config("--config", "", "Config file (TOML/INI); flags take precedence");
  app.require_subcommand(1);

  MnistArgs mnist;
  CLI::App* c_mnist = app.add_subcommand(
      "mnist", "Quantized-image experiment: train, expand, gauge, score");
  c_mnist->add_option("--images", mnist.config.images_path, "IDX image file")
      ->required();
  c_mnist->add_option("--labels", mnist.config.labels_path, "IDX label file")
      ->required();
  c_mnist->add_option("--bits", mnist.config.bits, "Quantization bits (1 or 2)")
      ->check(CLI::Range(1, 2));
  c_mnist->add_flag("--full-scale", mnist.config.full_scale,
                    "50000/10000 split with 800 hidden units");
  c_mnist->add_option("--train", mnist.config.train_count, "Training samples");
  c_mnist->add_option("--val", mnist.config.val_count, "Validation samples");
  c_mnist->add_option("--hidden", mnist.config.hidden_units, "Hidden units");
  c_mnist->add_option("--lr", mnist.config.learning_rate, "Learning rate");
  c_mnist->add_option("--l2", mnist.config.l2, "L2 penalty");
  c_mnist->add_option("--batch", mnist.config.batch_size, "Batch size");
  c_mnist->add_option("--epochs", mnist.config.epochs, "Training epochs");
  c_mnist->add_option("--seed", mnist.config.seed, "RNG seed");
  c_mnist->add_option("--threads", mnist.config.threads,
                      "Worker threads (0 = auto, env CATEXPAND_THREADS)");
  c_mnist->add_option("--out", mnist.config.out_dir, "Output directory")
      ->required();

  DcaArgs dca;
  CLI::App* c_dca = app.add_subcommand(
      "dca", "Per-position coupling inference on a sequence alignment");
  c_dca->add_option("--msa", dca.msa_path, "Aligned FASTA file")->required();
  c_dca->add_option("--gap-max", dca.gap_max, "Max gap fraction kept");
  c_dca->add_option("--id-thresh", dca.id_thresh,
                    "Identity threshold for reweighting");
  c_dca->add_option("--hidden", dca.net.hidden_units, "Hidden units");
  c_dca->add_option("--lr", dca.net.learning_rate, "Learning rate");
  c_dca->add_option("--epochs", dca.net.epochs, "Training epochs");
  c_dca->add_option("--batch", dca.net.batch_size, "Batch size");
  c_dca->add_option("--l2", dca.net.l2, "L2 penalty");
  c_dca->add_option("--seed", dca.net.seed, "RNG seed");
  c_dca->add_option("--threads", dca.net.threads,
                    "Worker threads (0 = auto, env CATEXPAND_THREADS)");
  c_dca->add_option("--distogram", dca.distogram,
                    "Reference distance matrix CSV");
  c_dca->add_option("--top-pairs", dca.top_pairs,
                    "Ranked pair list length (0 = all)");
  c_dca->add_option("--top-triplets", dca.top_triplets,
                    "Ranked triplet list length");
  c_dca->add_option("--min-sep", dca.min_sep, "Minimum |j - i| separation");
  c_dca->add_option("--contact-threshold", dca.contact_threshold,
                    "Contact distance threshold");
  c_dca->add_option("--out", dca.out_dir, "Output directory")->required();

  SynthArgs synth;
  CLI::App* c_synth = app.add_subcommand(
      "synth-msa", "Sample an alignment from a planted Potts model");
  c_synth->add_option("--spec", synth.model_path, "Planted model JSON")
      ->required();
  c_synth->add_option("--samples", synth.samples, "Number of sequences");
  c_synth->add_option("--burn-in", synth.burn_in, "Burn-in sweeps");
  c_synth->add_option("--thin", synth.thin, "Sweeps between samples");
  c_synth->add_option("--seed", synth.seed, "RNG seed");
  c_synth->add_option("--out", synth.out_path, "Output FASTA path")->required();

  ExpandArgs expand;
  CLI::App* c_expand = app.add_subcommand(
      "expand", "Extract polynomial coefficients from a trained network");
  c_expand->add_option("--model", expand.model_path, "Network container")
      ->required();
  c_expand->add_option("--order", expand.order, "Max expansion order (1 or 2)")
      ->check(CLI::Range(1, 2));
  c_expand->add_option("--method", expand.method, "Extraction method")
      ->check(CLI::IsMember({"probe", "closed-form"}));
  c_expand->add_flag("--gauge", expand.gauge, "Apply the zero-sum gauge");
  c_expand->add_flag("--verify", expand.verify,
                     "Cross-check probe vs closed form");
  c_expand->add_option("--threads", expand.threads,
                       "Worker threads (0 = auto, env CATEXPAND_THREADS)");
  c_expand->add_option("--out", expand.out_path, "Output coefficient container")
      ->required();

  GaugeArgs gauge;
  CLI::App* c_gauge = app.add_subcommand(
      "gauge", "Apply the zero-sum gauge (or a constant shift) to coefficients");
  c_gauge->add_option("--coefficients", gauge.in_path, "Coefficient container")
      ->required();
  c_gauge->add_option("--shift", gauge.shift,
                      "Apply a constant-shift gauge move instead of fixing");
  c_gauge->add_option("--threads", gauge.threads,
                      "Worker threads (0 = auto, env CATEXPAND_THREADS)");
  c_gauge->add_option("--out", gauge.out_path, "Output coefficient container")
      ->required();

  ScoreArgs score;
  CLI::App* c_score = app.add_subcommand(
      "score", "Frobenius-style scores from a coefficient container");
  c_score->add_option("--coefficients", score.coeff_path,
                      "Coefficient container")
      ->required();
  c_score->add_option("--top", score.top, "Ranked pair list length");
  c_score->add_option("--min-sep", score.min_sep, "Minimum pair separation");
  c_score->add_option("--grid-width", score.grid_width,
                      "Grid width for Chebyshev separation (0 = sequence)");
  c_score->add_flag("--per-class", score.per_class,
                    "Also write per-class pair scores");
  c_score->add_option("--out", score.out_dir, "Output directory")->required();

  TruncateArgs truncate;
  CLI::App* c_truncate = app.add_subcommand(
      "truncate-eval", "Accuracy of a network vs its truncated expansions");
  c_truncate->add_option("--model", truncate.model_path, "Network container")
      ->required();
  c_truncate
      ->add_option("--coefficients", truncate.coeff_path,
                   "Coefficient container")
      ->required();
  c_truncate->add_option("--data", truncate.data_path, "Dataset container")
      ->required();
  c_truncate->add_option("--out", truncate.out_path, "Report JSON path")
      ->required();

  PpvArgs ppv;
  CLI::App* c_ppv = app.add_subcommand(
      "ppv", "Positive predictive value of pair scores against distances");
  c_ppv->add_option("--pairs", ppv.pairs_path, "Dense pair-score matrix CSV")
      ->required();
  c_ppv->add_option("--distogram", ppv.distogram_path, "Distance matrix CSV")
      ->required();
  c_ppv->add_option("--top", ppv.top, "Top-k pairs scored (0 = all)");
  c_ppv->add_option("--contact-threshold", ppv.contact_threshold,
                    "Contact distance threshold");
  c_ppv->add_option("--min-sep", ppv.min_sep, "Minimum |j - i| separation");
  c_ppv->add_option("--out", ppv.out_path, "Report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (argc > 1 && argv[1][0] != '-' &&
        std::find(kSubcommands.begin(), kSubcommands.end(), argv[1]) ==
            kSubcommands.end()) {
      suggest_subcommand(argv[1]);
    } else {
      std::cerr << e.what() << "\n";
    }
    std::cerr << "run 'catexpand --help' for usage\n";
    return 1;
  }

  try {
    if (*c_mnist) run_mnist(mnist);
    if (*c_dca) run_dca(dca);
    if (*c_synth) run_synth(synth);
    if (*c_expand) {
      run_expand(expand);
    }
    if (*c_gauge) {
      gauge.apply_shift = c_gauge->count("--shift") > 0;
      run_gauge(gauge);
    }
    if (*c_score) run_score(score);
    if (*c_truncate) run_truncate(truncate);
    if (*c_ppv) run_ppv(ppv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
