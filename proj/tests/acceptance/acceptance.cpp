// Acceptance suite: one criterion per invocation (argv[1] in 1..10), one
// [PASS]/[FAIL] line on stdout, exit 0 on pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "catexpand/expansion.hpp"
#include "catexpand/gauge.hpp"
#include "catexpand/mnist.hpp"
#include "catexpand/msa.hpp"
#include "catexpand/network.hpp"
#include "catexpand/scoring.hpp"
#include "../test_support.hpp"

using namespace catexpand;
using catexpand::testing::all_valid_samples;
using catexpand::testing::mobius_full_reconstruction;
using catexpand::testing::random_small_net;

namespace {

struct Failure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

LogitEvaluator evaluator_of(const NetworkParams& net) {
  return [&net](const ProbeVector& p) { return forward_logits(net, p); };
}

ProbeVector probe_of(const CategorySpec& spec, const CategoricalSample& x) {
  std::vector<std::pair<int, int>> entries;
  for (int i = 0; i < spec.feature_count(); ++i)
    entries.push_back({i, x.categories[i]});
  return make_probe(spec, entries);
}

double max_block_deviation(const ExpansionCoefficients& a,
                           const ExpansionCoefficients& b) {
  double dev = (a.order0() - b.order0()).cwiseAbs().maxCoeff();
  dev = std::max(dev, (a.order1() - b.order1()).cwiseAbs().maxCoeff());
  for (int p = 0; p < a.pair_count(); ++p)
    for (std::size_t v = 0; v < a.pair_block_size(p); ++v)
      dev = std::max(dev, std::abs(a.pair_block(p)[v] - b.pair_block(p)[v]));
  return dev;
}

std::vector<NetworkParams> oracle_networks() {
  std::mt19937_64 rng(20240817);
  std::vector<NetworkParams> nets;
  for (int t = 0; t < 50; ++t) nets.push_back(random_small_net(rng));
  return nets;
}

// --------------------------------------------------------------------------
// 1: full Moebius expansion reproduces the forward pass on small networks

void criterion_oracle_equivalence() {
  auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const NetworkParams& net : oracle_networks()) {
    LogitEvaluator eval = evaluator_of(net);
    for (const CategoricalSample& x : all_valid_samples(net.spec)) {
      Eigen::VectorXd rebuilt = mobius_full_reconstruction(eval, net.spec, x);
      Eigen::VectorXd direct = forward_logits(net, probe_of(net.spec, x));
      worst = std::max(worst, (rebuilt - direct).cwiseAbs().maxCoeff());
    }
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  require(worst < 1e-9, "max deviation " + fmt(worst) + " >= 1e-9");
  require(secs < 10.0, "runtime " + fmt(secs) + "s >= 10s");
}

// --------------------------------------------------------------------------
// 2: probe and closed-form extraction agree entrywise

void criterion_method_equivalence() {
  double worst = 0.0;
  for (const NetworkParams& net : oracle_networks()) {
    ExpansionCoefficients probe =
        probe_expand(evaluator_of(net), net.spec, net.class_count, 2);
    ExpansionCoefficients closed = closed_form_expand(net, 2);
    worst = std::max(worst, max_block_deviation(probe, closed));
  }
  require(worst < 1e-10, "max method deviation " + fmt(worst) + " >= 1e-10");
}

// --------------------------------------------------------------------------
// 3: zero-sum gauge residuals, value preservation, idempotence, shifts

void criterion_gauge_suite() {
  for (const NetworkParams& net : oracle_networks()) {
    ExpansionCoefficients raw = closed_form_expand(net, 2);
    ExpansionCoefficients fixed = ising_gauge_fix(raw);
    GaugeReport rep = gauge_residuals(fixed);
    require(rep.max_order1_residual < 1e-10,
            "order-1 residual " + fmt(rep.max_order1_residual));
    require(rep.max_order2_residual < 1e-10,
            "order-2 residual " + fmt(rep.max_order2_residual));

    for (const CategoricalSample& x : all_valid_samples(net.spec)) {
      double dev = (truncated_logits(raw, x, 2) - truncated_logits(fixed, x, 2))
                       .cwiseAbs()
                       .maxCoeff();
      require(dev < 1e-9, "gauge changed a truncated value by " + fmt(dev));
    }

    ExpansionCoefficients twice = ising_gauge_fix(fixed);
    require(max_block_deviation(fixed, twice) < 1e-12,
            "gauge fixing is not idempotent");

    for (double g : {-3.0, 7.3}) {
      ExpansionCoefficients shifted = apply_constant_shift(raw, g);
      for (const CategoricalSample& x : all_valid_samples(net.spec)) {
        double dev =
            (truncated_logits(raw, x, 2) - truncated_logits(shifted, x, 2))
                .cwiseAbs()
                .maxCoeff();
        require(dev < 1e-12,
                "constant shift " + fmt(g) + " changed values by " + fmt(dev));
      }
    }
  }
}

// --------------------------------------------------------------------------
// 4: order-2 truncation is exact for square activations

void criterion_square_exactness() {
  std::mt19937_64 rng(7);
  int tested = 0;
  while (tested < 25) {
    NetworkParams net = random_small_net(rng);
    if (net.activation != Activation::Square) continue;
    ++tested;
    ExpansionCoefficients coeffs = closed_form_expand(net, 2);
    for (const CategoricalSample& x : all_valid_samples(net.spec)) {
      double dev = (truncated_logits(coeffs, x, 2) -
                    forward_logits(net, probe_of(net.spec, x)))
                       .cwiseAbs()
                       .maxCoeff();
      require(dev < 1e-8, "square net truncation deviates by " + fmt(dev));
    }
  }

  // desk-scale alignment networks: order-2 accuracy equals the full network
  PlantedPottsModel model;
  model.length = 8;
  model.alphabet = 3;
  model.fields = Eigen::MatrixXd::Zero(8, 3);
  Eigen::MatrixXd j = 1.5 * Eigen::MatrixXd::Identity(3, 3);
  model.couplings.push_back({0, 5, j});
  model.couplings.push_back({2, 7, j});
  WeightedAlignment msa = synth_potts_msa(model, 500, 100, 2, 31);
  PositionNetConfig config;
  config.epochs = 120;
  config.seed = 13;
  std::vector<NetworkParams> nets = train_position_networks(msa, config);
  std::vector<ExpansionCoefficients> exps = expand_position_networks(nets);
  std::vector<double> full =
      per_position_accuracy(nets, exps, msa, TruncationOrder::Full);
  std::vector<double> order2 =
      per_position_accuracy(nets, exps, msa, TruncationOrder::Order2);
  for (std::size_t k = 0; k < full.size(); ++k)
    require(std::abs(full[k] - order2[k]) < 1e-12,
            "position " + std::to_string(k) + " accuracies differ: " +
                fmt(full[k]) + " vs " + fmt(order2[k]));
}

// --------------------------------------------------------------------------
// 5: analytic gradients vs central finite differences

void criterion_gradient_check() {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 8; ++t) {
    NetworkParams net = random_small_net(rng);
    LabeledDataset data;
    data.spec = net.spec;
    data.class_count = net.class_count;
    std::vector<CategoricalSample> all = all_valid_samples(net.spec);
    for (const CategoricalSample& x : all) {
      data.samples.push_back(x);
      data.labels.push_back(static_cast<int>(rng() % net.class_count));
      data.weights.push_back(0.5 + (rng() % 100) / 100.0);
    }
    std::vector<std::size_t> batch(data.size());
    for (std::size_t m = 0; m < batch.size(); ++m) batch[m] = m;
    double l2 = 0.01;

    Gradients g;
    loss_and_gradients(net, data, batch, l2, &g);

    const double h = 1e-6;
    auto check = [&](double* param, double analytic) {
      double saved = *param;
      *param = saved + h;
      double up = loss_and_gradients(net, data, batch, l2, nullptr);
      *param = saved - h;
      double down = loss_and_gradients(net, data, batch, l2, nullptr);
      *param = saved;
      double numeric = (up - down) / (2 * h);
      double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      require(std::abs(analytic - numeric) / denom < 1e-4,
              "gradient mismatch: analytic " + fmt(analytic) + " numeric " +
                  fmt(numeric));
    };
    for (int r = 0; r < net.w1.rows(); ++r)
      for (int c = 0; c < net.w1.cols(); ++c) check(&net.w1(r, c), g.w1(r, c));
    for (int r = 0; r < net.w2.rows(); ++r)
      for (int c = 0; c < net.w2.cols(); ++c) check(&net.w2(r, c), g.w2(r, c));
    for (int r = 0; r < net.b1.size(); ++r) check(&net.b1[r], g.b1[r]);
    for (int r = 0; r < net.b2.size(); ++r) check(&net.b2[r], g.b2[r]);
  }
}

// --------------------------------------------------------------------------
// 6: desk-scale quantized-image experiment

MnistConfig desk_mnist_config(const std::string& out_dir) {
  MnistConfig config;
  const char* env = std::getenv("CATEXPAND_MNIST_DIR");
  std::string dir = env ? env : CATEXPAND_MNIST_DIR;
  config.images_path = dir + "/train-images-idx3-ubyte";
  config.labels_path = dir + "/train-labels-idx1-ubyte";
  config.bits = 1;
  config.seed = 2024;
  config.out_dir = out_dir;
  return config;
}

void criterion_mnist_desk() {
  auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories("acceptance_mnist");
  MnistReport report = run_mnist_experiment(desk_mnist_config("acceptance_mnist"));
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  double full = report.validation_truncation.full_accuracy;
  double o2 = report.validation_truncation.order2_accuracy;
  double o1 = report.validation_truncation.order1_accuracy;
  std::cout << "  validation full=" << full << " order2=" << o2
            << " order1=" << o1 << " (" << fmt(secs) << "s)\n";
  require(full >= 0.85, "validation accuracy " + fmt(full) + " < 0.85");
  require(std::abs(full - o2) <= 0.02,
          "order-2 gap " + fmt(std::abs(full - o2)) + " > 0.02");
  require(o1 <= o2 - 0.08,
          "order-1 " + fmt(o1) + " not at least 0.08 below order-2 " + fmt(o2));
  require(secs < 900.0, "runtime " + fmt(secs) + "s >= 900s");
}

// --------------------------------------------------------------------------
// 7: moment-matching diagnostic on the parity toy problem

void criterion_convergence_residual() {
  LabeledDataset data;
  data.spec = CategorySpec({2, 2});
  data.class_count = 2;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      CategoricalSample x;
      x.categories = {static_cast<std::uint16_t>(a),
                      static_cast<std::uint16_t>(b)};
      data.samples.push_back(x);
      data.labels.push_back(a ^ b);
      data.weights.push_back(1.0);
    }
  NetworkParams net0 = init_network(data.spec, 2, 8, Activation::Tanh, 42);
  TrainConfig config;
  config.learning_rate = 0.05;
  config.epochs = 500;
  config.batch_size = 4;
  config.l2_coefficient = 0.0;
  config.rng_seed = 42;
  auto [net, report] = train(net0, data, config);
  require(report.convergence_residual < 5e-2,
          "residual " + fmt(report.convergence_residual) + " >= 5e-2");
}

// --------------------------------------------------------------------------
// 8: planted-Potts pair and triplet recovery

PlantedPottsModel planted_model(bool with_triplet) {
  PlantedPottsModel model;
  model.length = 12;
  model.alphabet = 4;
  model.fields = Eigen::MatrixXd::Zero(12, 4);
  Eigen::MatrixXd j = 2.0 * Eigen::MatrixXd::Identity(4, 4);
  for (auto [i, k] : std::vector<std::pair<int, int>>{
           {0, 7}, {1, 9}, {2, 5}, {3, 11}, {4, 10}, {6, 8}})
    model.couplings.push_back({i, k, j});
  if (with_triplet) {
    PlantedPottsModel::Triplet trip;
    trip.i = 1;
    trip.j = 4;
    trip.k = 8;
    trip.tensor.assign(4 * 4 * 4, 0.0);
    for (int a = 0; a < 4; ++a) trip.tensor[(a * 4 + a) * 4 + a] = 3.0;
    model.triplet = trip;
  }
  return model;
}

struct PottsRun {
  Eigen::MatrixXd pairs;
  std::vector<RankedTriplet> triplets;
};

PottsRun run_potts_pipeline(bool with_triplet, std::uint64_t seed) {
  WeightedAlignment msa =
      synth_potts_msa(planted_model(with_triplet), 5000, 200, 2, seed);
  msa = compute_weights(msa, 0.8);
  PositionNetConfig config;
  config.seed = seed + 1;
  std::vector<NetworkParams> nets = train_position_networks(msa, config);
  std::vector<ExpansionCoefficients> exps = expand_position_networks(nets);
  PottsRun run;
  run.pairs = aggregate_pair_scores(exps);
  run.triplets = aggregate_triplet_scores(exps, 10);
  return run;
}

void check_potts_recovery(const PottsRun& pairs_run,
                          const PottsRun& triplet_run) {
  std::set<std::pair<int, int>> planted = {{0, 7}, {1, 9},  {2, 5},
                                           {3, 11}, {4, 10}, {6, 8}};
  struct Row {
    int i, j;
    double s;
  };
  std::vector<Row> ranked;
  for (int i = 0; i < 12; ++i)
    for (int k = i + 1; k < 12; ++k)
      ranked.push_back({i, k, pairs_run.pairs(i, k)});
  std::sort(ranked.begin(), ranked.end(),
            [](const Row& a, const Row& b) { return a.s > b.s; });
  int hits = 0;
  std::ostringstream top6;
  for (int r = 0; r < 6; ++r) {
    hits += planted.count({ranked[r].i, ranked[r].j}) ? 1 : 0;
    top6 << " (" << ranked[r].i << "," << ranked[r].j << ")";
  }
  std::cout << "  top-6 pairs:" << top6.str() << " -> " << hits
            << "/6 planted\n";
  require(hits >= 5, "only " + std::to_string(hits) + " of top-6 planted");

  const RankedTriplet& top = triplet_run.triplets.at(0);
  std::cout << "  top triplet: (" << top.i << "," << top.j << "," << top.k
            << ")\n";
  require(top.i == 1 && top.j == 4 && top.k == 8,
          "planted triplet (1,4,8) not ranked first");
}

void criterion_planted_potts() {
  auto start = std::chrono::steady_clock::now();
  PottsRun pairs_run = run_potts_pipeline(false, 2024);
  PottsRun triplet_run = run_potts_pipeline(true, 2024);
  check_potts_recovery(pairs_run, triplet_run);
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  require(secs < 1200.0, "runtime " + fmt(secs) + "s >= 1200s");
}

// --------------------------------------------------------------------------
// 9: two-site Gibbs sampler calibration

void criterion_sampler_calibration() {
  PlantedPottsModel model;
  model.length = 2;
  model.alphabet = 2;
  model.fields = Eigen::MatrixXd::Zero(2, 2);
  model.couplings.push_back({0, 1, 2.0 * Eigen::MatrixXd::Identity(2, 2)});
  WeightedAlignment msa = synth_potts_msa(model, 10000, 100, 2, 42);
  double equal = 0.0;
  for (const auto& s : msa.sequences) equal += (s[0] == s[1]) ? 1.0 : 0.0;
  equal /= static_cast<double>(msa.count());
  double expected = std::exp(2.0) / (std::exp(2.0) + 1.0);
  std::cout << "  equal-state fraction " << equal << " vs " << expected
            << "\n";
  require(std::abs(equal - expected) <= 0.02,
          "fraction " + fmt(equal) + " outside " + fmt(expected) + " +- 0.02");
}

// --------------------------------------------------------------------------
// 10: determinism of the two experiment pipelines

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "missing artifact " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  for (const char* dir : {"acceptance_det_a", "acceptance_det_b"}) {
    std::filesystem::create_directories(dir);
    run_mnist_experiment(desk_mnist_config(dir));
  }
  for (const char* name :
       {"/first_order_scores.csv", "/pair_scores.csv",
        "/score2_top_pairs.csv"}) {
    require(slurp(std::string("acceptance_det_a") + name) ==
                slurp(std::string("acceptance_det_b") + name),
            std::string("image-experiment CSV differs: ") + name);
  }
  std::cout << "  image-experiment score CSVs bit-identical\n";

  PottsRun a = run_potts_pipeline(true, 2024);
  PottsRun b = run_potts_pipeline(true, 2024);
  save_matrix_csv(a.pairs, "acceptance_det_a/potts_pairs.csv");
  save_matrix_csv(b.pairs, "acceptance_det_b/potts_pairs.csv");
  require(slurp("acceptance_det_a/potts_pairs.csv") ==
              slurp("acceptance_det_b/potts_pairs.csv"),
          "planted-model pair CSVs differ");
  std::cout << "  planted-model pair CSVs bit-identical\n";
}

struct Criterion {
  const char* name;
  void (*run)();
};

const Criterion kCriteria[] = {
    {"oracle equivalence on small networks", criterion_oracle_equivalence},
    {"probe vs closed-form method equivalence", criterion_method_equivalence},
    {"zero-sum gauge suite", criterion_gauge_suite},
    {"square-activation order-2 exactness", criterion_square_exactness},
    {"finite-difference gradient check", criterion_gradient_check},
    {"desk-scale quantized-image experiment", criterion_mnist_desk},
    {"moment-matching residual on the parity toy", criterion_convergence_residual},
    {"planted-model pair and triplet recovery", criterion_planted_potts},
    {"two-site sampler calibration", criterion_sampler_calibration},
    {"experiment determinism (bit-identical CSVs)", criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <criterion 1-10>\n";
    return 2;
  }
  int n = std::atoi(argv[1]);
  if (n < 1 || n > 10) {
    std::cerr << "criterion out of range: " << argv[1] << "\n";
    return 2;
  }
  const Criterion& c = kCriteria[n - 1];
  try {
    c.run();
  } catch (const Failure& f) {
    std::cout << "[FAIL] criterion " << n << ": " << c.name << " -- "
              << f.detail << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cout << "[FAIL] criterion " << n << ": " << c.name << " -- "
              << e.what() << "\n";
    return 1;
  }
  std::cout << "[PASS] criterion " << n << ": " << c.name << "\n";
  return 0;
}
