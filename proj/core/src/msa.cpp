#include "catexpand/msa.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "catexpand/gauge.hpp"
#include "catexpand/parallel.hpp"
#include "catexpand/scoring.hpp"

namespace catexpand {

namespace {

constexpr char kAlphabetLetters[] = "ACDEFGHIKLMNPQRSTVWY-";

int letter_to_category(char c) {
  const char* pos = std::strchr(kAlphabetLetters, c);
  if (pos && *pos != '\0') return static_cast<int>(pos - kAlphabetLetters);
  return kGapCategory;  // unknown symbols map to gap
}

}  // namespace

double WeightedAlignment::effective_count() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

WeightedAlignment load_alignment(const std::string& path, bool remove_inserts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alignment: " + path);
  WeightedAlignment msa;
  std::string line, id;
  std::string current;
  auto flush = [&] {
    if (id.empty() && current.empty()) return;
    std::vector<std::uint8_t> seq;
    seq.reserve(current.size());
    for (char c : current) {
      if (c == '.' || (c >= 'a' && c <= 'z')) {
        if (remove_inserts) continue;
        throw Error("insert state '" + std::string(1, c) + "' in " + path +
                    " (record " + id + ")");
      }
      seq.push_back(static_cast<std::uint8_t>(letter_to_category(c)));
    }
    if (msa.sequences.empty()) {
      msa.length = static_cast<int>(seq.size());
    } else if (static_cast<int>(seq.size()) != msa.length) {
      throw Error("ragged alignment: record " + id + " has length " +
                  std::to_string(seq.size()) + ", expected " +
                  std::to_string(msa.length));
    }
    msa.sequences.push_back(std::move(seq));
    msa.identifiers.push_back(id);
    current.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush();
      id = line.substr(1);
    } else {
      current += line;
    }
  }
  flush();
  if (msa.sequences.empty()) throw Error("empty alignment: " + path);
  msa.weights.assign(msa.count(), 1.0);
  return msa;
}

WeightedAlignment filter_gaps(const WeightedAlignment& msa,
                              double max_gap_fraction) {
  if (max_gap_fraction < 0.0 || max_gap_fraction > 1.0)
    throw Error("filter_gaps: fraction must be in [0, 1]");
  WeightedAlignment out;
  out.length = msa.length;
  out.alphabet = msa.alphabet;
  for (std::size_t m = 0; m < msa.count(); ++m) {
    int gaps = 0;
    for (auto c : msa.sequences[m]) gaps += (c == kGapCategory);
    if (double(gaps) / msa.length > max_gap_fraction) continue;
    out.sequences.push_back(msa.sequences[m]);
    out.weights.push_back(msa.weights[m]);
    out.identifiers.push_back(msa.identifiers.empty() ? "" : msa.identifiers[m]);
  }
  if (out.sequences.empty())
    throw Error("filter_gaps: all sequences removed");
  return out;
}

WeightedAlignment compute_weights(const WeightedAlignment& msa,
                                  double identity_threshold, int threads,
                                  int subsample_cap,
                                  std::uint64_t subsample_seed) {
  if (identity_threshold <= 0.0 || identity_threshold >= 1.0)
    throw Error("compute_weights: threshold must be in (0, 1)");
  WeightedAlignment out = msa;
  if (subsample_cap > 0 && static_cast<int>(out.count()) > subsample_cap) {
    std::vector<std::size_t> order(out.count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(subsample_seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(subsample_cap);
    std::sort(order.begin(), order.end());
    WeightedAlignment sub;
    sub.length = out.length;
    sub.alphabet = out.alphabet;
    for (std::size_t m : order) {
      sub.sequences.push_back(out.sequences[m]);
      sub.weights.push_back(out.weights[m]);
      sub.identifiers.push_back(out.identifiers.empty() ? "" : out.identifiers[m]);
    }
    out = std::move(sub);
  }
  const std::size_t m = out.count();
  const int l = out.length;
  std::vector<int> neighbor_counts(m, 1);  // each sequence matches itself
  // upper-triangle pass; row blocks are independent
  std::vector<std::vector<int>> partial(m);
  parallel_for(m, threads, [&](std::size_t a) {
    auto& mine = partial[a];
    mine.assign(1, 0);
    mine.clear();
    const auto& sa = out.sequences[a];
    for (std::size_t b = a + 1; b < m; ++b) {
      const auto& sb = out.sequences[b];
      int match = 0;
      for (int p = 0; p < l; ++p) match += sa[p] == sb[p];
      if (double(match) / l > identity_threshold)
        mine.push_back(static_cast<int>(b));
    }
  });
  for (std::size_t a = 0; a < m; ++a)
    for (int b : partial[a]) {
      ++neighbor_counts[a];
      ++neighbor_counts[b];
    }
  for (std::size_t a = 0; a < m; ++a) out.weights[a] = 1.0 / neighbor_counts[a];
  return out;
}

LabeledDataset position_dataset(const WeightedAlignment& msa, int position) {
  if (msa.length < 2) throw Error("position_dataset: alignment length < 2");
  if (position < 0 || position >= msa.length)
    throw Error("position_dataset: position out of range");
  LabeledDataset data;
  data.spec = CategorySpec(std::vector<int>(msa.length - 1, msa.alphabet));
  data.class_count = msa.alphabet;
  data.samples.resize(msa.count());
  data.labels.resize(msa.count());
  data.weights = msa.weights;
  for (std::size_t m = 0; m < msa.count(); ++m) {
    auto& cats = data.samples[m].categories;
    cats.reserve(msa.length - 1);
    for (int p = 0; p < msa.length; ++p)
      if (p != position) cats.push_back(msa.sequences[m][p]);
    data.labels[m] = msa.sequences[m][position];
  }
  return data;
}

std::vector<NetworkParams> train_position_networks(const WeightedAlignment& msa,
                                                   const PositionNetConfig& config) {
  if (msa.length < 2) throw Error("train_position_networks: alignment length < 2");
  std::vector<NetworkParams> nets(msa.length);
  parallel_for(msa.length, config.threads, [&](std::size_t k) {
    LabeledDataset data = position_dataset(msa, static_cast<int>(k));
    TrainConfig tc;
    tc.learning_rate = config.learning_rate;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size;
    tc.l2_coefficient = config.l2;
    tc.rng_seed = config.seed + k;
    NetworkParams net0 = init_network(data.spec, msa.alphabet,
                                      config.hidden_units, config.activation,
                                      config.seed + k);
    try {
      nets[k] = train(net0, data, tc).first;
    } catch (const Error& e) {
      throw Error("position " + std::to_string(k) + ": " + e.what());
    }
  });
  return nets;
}

std::vector<ExpansionCoefficients> expand_position_networks(
    const std::vector<NetworkParams>& networks, int threads) {
  std::vector<ExpansionCoefficients> out(networks.size());
  parallel_for(networks.size(), threads, [&](std::size_t k) {
    out[k] = ising_gauge_fix(closed_form_expand(networks[k], 2, 1), 1);
  });
  return out;
}

namespace {

// local feature index within network k -> alignment position
inline int global_position(int local, int k) { return local < k ? local : local + 1; }

}  // namespace

Eigen::MatrixXd aggregate_pair_scores(
    const std::vector<ExpansionCoefficients>& expansions) {
  const int l = static_cast<int>(expansions.size());
  if (l < 2) throw Error("aggregate_pair_scores: need at least two networks");
  // directional(k, i) = first-order Frobenius score of position i in net k
  Eigen::MatrixXd directional = Eigen::MatrixXd::Zero(l, l);
  for (int k = 0; k < l; ++k) {
    const auto& coeffs = expansions[k];
    if (!coeffs.gauge_fixed())
      throw Error("aggregate_pair_scores: expansion " + std::to_string(k) +
                  " is not gauge-fixed");
    const CategorySpec& spec = coeffs.spec();
    if (spec.feature_count() != l - 1)
      throw Error("aggregate_pair_scores: network arity mismatch");
    for (int local = 0; local < l - 1; ++local) {
      double s = coeffs.order1()
                     .middleCols(spec.offset(local), spec.category_count(local))
                     .squaredNorm();
      directional(k, global_position(local, k)) = s;
    }
  }
  Eigen::MatrixXd sym = (directional + directional.transpose()) / 2.0;
  sym.diagonal().setZero();
  return sym;
}

std::vector<RankedTriplet> aggregate_triplet_scores(
    const std::vector<ExpansionCoefficients>& expansions, int top_t) {
  const int l = static_cast<int>(expansions.size());
  if (l < 3) throw Error("aggregate_triplet_scores: need at least three networks");
  // directional[k](i, j) = second-order score of positions {i, j} in net k
  std::vector<Eigen::MatrixXd> directional(
      l, Eigen::MatrixXd::Zero(l, l));
  for (int k = 0; k < l; ++k) {
    const auto& coeffs = expansions[k];
    ScoreSet s = second_order_scores(coeffs);
    for (int a = 0; a < l - 1; ++a)
      for (int b = a + 1; b < l - 1; ++b) {
        int gi = global_position(a, k), gj = global_position(b, k);
        directional[k](gi, gj) = s.pair_total(a, b);
      }
  }
  std::vector<RankedTriplet> all;
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j)
      for (int k = j + 1; k < l; ++k) {
        double score = (directional[k](i, j) + directional[j](i, k) +
                        directional[i](j, k)) /
                       3.0;
        all.push_back({i, j, k, score});
      }
  std::sort(all.begin(), all.end(), [](const RankedTriplet& a, const RankedTriplet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  });
  if (top_t >= 0 && static_cast<int>(all.size()) > top_t) all.resize(top_t);
  return all;
}

std::vector<double> per_position_accuracy(
    const std::vector<NetworkParams>& networks,
    const std::vector<ExpansionCoefficients>& expansions,
    const WeightedAlignment& msa, TruncationOrder order) {
  const int l = msa.length;
  if (static_cast<int>(networks.size()) != l)
    throw Error("per_position_accuracy: network count != alignment length");
  std::vector<double> acc(l, 0.0);
  for (int k = 0; k < l; ++k) {
    LabeledDataset data = position_dataset(msa, k);
    double total = 0.0, correct = 0.0;
    for (std::size_t m = 0; m < data.size(); ++m) {
      Eigen::VectorXd logits;
      if (order == TruncationOrder::Full) {
        logits = forward_logits(networks[k], encode_one_hot(data.samples[m], data.spec));
      } else {
        logits = truncated_logits(expansions[k], data.samples[m],
                                  order == TruncationOrder::Order2 ? 2 : 1);
      }
      Eigen::Index best;
      logits.maxCoeff(&best);
      total += data.weights[m];
      if (static_cast<int>(best) == data.labels[m]) correct += data.weights[m];
    }
    acc[k] = total > 0 ? correct / total : 0.0;
  }
  return acc;
}

void PlantedPottsModel::validate() const {
  if (length < 1 || alphabet < 2)
    throw Error("PlantedPottsModel: bad dimensions");
  if (fields.rows() != length || fields.cols() != alphabet)
    throw Error("PlantedPottsModel: fields shape mismatch");
  for (const auto& c : couplings) {
    if (c.i < 0 || c.j <= c.i || c.j >= length)
      throw Error("PlantedPottsModel: coupling indices must satisfy 0 <= i < j < L");
    if (c.j_matrix.rows() != alphabet || c.j_matrix.cols() != alphabet)
      throw Error("PlantedPottsModel: coupling matrix shape mismatch");
  }
  if (triplet) {
    if (!(0 <= triplet->i && triplet->i < triplet->j && triplet->j < triplet->k &&
          triplet->k < length))
      throw Error("PlantedPottsModel: triplet indices must be strictly increasing");
    if (static_cast<int>(triplet->tensor.size()) !=
        alphabet * alphabet * alphabet)
      throw Error("PlantedPottsModel: triplet tensor size mismatch");
  }
}

PlantedPottsModel load_potts_model(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error("cannot open model spec: " + json_path);
  nlohmann::json j;
  in >> j;
  PlantedPottsModel model;
  model.length = j.at("length").get<int>();
  model.alphabet = j.at("alphabet").get<int>();
  model.fields = Eigen::MatrixXd::Zero(model.length, model.alphabet);
  if (j.contains("fields")) {
    auto f = j["fields"];
    for (int i = 0; i < model.length; ++i)
      for (int a = 0; a < model.alphabet; ++a)
        model.fields(i, a) = f.at(i).at(a).get<double>();
  }
  for (const auto& c : j.value("couplings", nlohmann::json::array())) {
    PlantedPottsModel::Coupling cp;
    cp.i = c.at("i").get<int>();
    cp.j = c.at("j").get<int>();
    cp.j_matrix = Eigen::MatrixXd::Zero(model.alphabet, model.alphabet);
    for (int a = 0; a < model.alphabet; ++a)
      for (int b = 0; b < model.alphabet; ++b)
        cp.j_matrix(a, b) = c.at("matrix").at(a).at(b).get<double>();
    model.couplings.push_back(std::move(cp));
  }
  if (j.contains("triplet") && !j["triplet"].is_null()) {
    PlantedPottsModel::Triplet t;
    t.i = j["triplet"].at("i").get<int>();
    t.j = j["triplet"].at("j").get<int>();
    t.k = j["triplet"].at("k").get<int>();
    t.tensor = j["triplet"].at("tensor").get<std::vector<double>>();
    model.triplet = std::move(t);
  }
  model.validate();
  return model;
}

void save_potts_model(const PlantedPottsModel& model, const std::string& json_path) {
  model.validate();
  nlohmann::json j;
  j["length"] = model.length;
  j["alphabet"] = model.alphabet;
  auto fields = nlohmann::json::array();
  for (int i = 0; i < model.length; ++i) {
    auto row = nlohmann::json::array();
    for (int a = 0; a < model.alphabet; ++a) row.push_back(model.fields(i, a));
    fields.push_back(row);
  }
  j["fields"] = fields;
  auto couplings = nlohmann::json::array();
  for (const auto& c : model.couplings) {
    nlohmann::json cj;
    cj["i"] = c.i;
    cj["j"] = c.j;
    auto mat = nlohmann::json::array();
    for (int a = 0; a < model.alphabet; ++a) {
      auto row = nlohmann::json::array();
      for (int b = 0; b < model.alphabet; ++b) row.push_back(c.j_matrix(a, b));
      mat.push_back(row);
    }
    cj["matrix"] = mat;
    couplings.push_back(cj);
  }
  j["couplings"] = couplings;
  if (model.triplet) {
    nlohmann::json tj;
    tj["i"] = model.triplet->i;
    tj["j"] = model.triplet->j;
    tj["k"] = model.triplet->k;
    tj["tensor"] = model.triplet->tensor;
    j["triplet"] = tj;
  }
  std::ofstream out(json_path);
  if (!out) throw Error("cannot open for writing: " + json_path);
  out << j.dump(2) << "\n";
}

WeightedAlignment synth_potts_msa(const PlantedPottsModel& model, int samples,
                                  int burn_in, int thin, std::uint64_t seed) {
  model.validate();
  if (samples < 1) throw Error("synth_potts_msa: need at least one sample");
  if (thin < 1) thin = 1;
  const int l = model.length, q = model.alphabet;

  // adjacency: couplings touching each site
  std::vector<std::vector<int>> site_couplings(l);
  for (std::size_t c = 0; c < model.couplings.size(); ++c) {
    site_couplings[model.couplings[c].i].push_back(static_cast<int>(c));
    site_couplings[model.couplings[c].j].push_back(static_cast<int>(c));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> state(l);
  for (int i = 0; i < l; ++i)
    state[i] = static_cast<int>(unif(rng) * q) % q;

  std::vector<double> logp(q), p(q);
  auto sweep = [&] {
    for (int site = 0; site < l; ++site) {
      for (int a = 0; a < q; ++a) {
        double e = model.fields(site, a);
        for (int ci : site_couplings[site]) {
          const auto& c = model.couplings[ci];
          if (c.i == site)
            e += c.j_matrix(a, state[c.j]);
          else
            e += c.j_matrix(state[c.i], a);
        }
        if (model.triplet) {
          const auto& t = *model.triplet;
          if (site == t.i)
            e += t.tensor[(static_cast<std::size_t>(a) * q + state[t.j]) * q + state[t.k]];
          else if (site == t.j)
            e += t.tensor[(static_cast<std::size_t>(state[t.i]) * q + a) * q + state[t.k]];
          else if (site == t.k)
            e += t.tensor[(static_cast<std::size_t>(state[t.i]) * q + state[t.j]) * q + a];
        }
        logp[a] = e;
      }
      double mx = *std::max_element(logp.begin(), logp.end());
      double z = 0.0;
      for (int a = 0; a < q; ++a) z += (p[a] = std::exp(logp[a] - mx));
      double u = unif(rng) * z;
      double cum = 0.0;
      int pick = q - 1;
      for (int a = 0; a < q; ++a) {
        cum += p[a];
        if (u <= cum) {
          pick = a;
          break;
        }
      }
      state[site] = pick;
    }
  };

  for (int s = 0; s < burn_in; ++s) sweep();
  WeightedAlignment msa;
  msa.length = l;
  msa.alphabet = q;
  msa.sequences.reserve(samples);
  for (int m = 0; m < samples; ++m) {
    for (int s = 0; s < thin; ++s) sweep();
    std::vector<std::uint8_t> seq(l);
    for (int i = 0; i < l; ++i) seq[i] = static_cast<std::uint8_t>(state[i]);
    msa.sequences.push_back(std::move(seq));
    msa.identifiers.push_back("sample_" + std::to_string(m));
  }
  msa.weights.assign(msa.count(), 1.0);
  return msa;
}

double ppv_against_distogram(const Eigen::MatrixXd& pair_matrix,
                             const Eigen::MatrixXd& distances, int k,
                             double contact_threshold, int min_separation) {
  if (pair_matrix.rows() != pair_matrix.cols())
    throw Error("ppv: pair matrix must be square");
  if (distances.rows() != pair_matrix.rows() ||
      distances.cols() != pair_matrix.cols())
    throw Error("ppv: distance matrix size mismatch (" +
                std::to_string(distances.rows()) + " vs " +
                std::to_string(pair_matrix.rows()) + ")");
  const int l = static_cast<int>(pair_matrix.rows());
  std::vector<RankedPair> pairs;
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) {
      if (j - i < min_separation) continue;
      pairs.push_back({i, j, pair_matrix(i, j)});
    }
  std::sort(pairs.begin(), pairs.end(), [](const RankedPair& a, const RankedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  if (static_cast<int>(pairs.size()) > k) pairs.resize(k);
  if (pairs.empty()) return 0.0;
  int hits = 0;
  for (const auto& p : pairs)
    if (distances(p.i, p.j) <= contact_threshold) ++hits;
  return double(hits) / pairs.size();
}

Eigen::MatrixXd load_distance_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open distance matrix: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("empty distance matrix: " + path);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw Error("ragged distance matrix: " + path);
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open for writing: " + path);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      std::fprintf(f, c + 1 < m.cols() ? "%.17g," : "%.17g\n", m(r, c));
  std::fclose(f);
}

void save_fasta(const WeightedAlignment& msa, const std::string& path) {
  if (msa.alphabet > static_cast<int>(sizeof(kAlphabetLetters)) - 1)
    throw Error("save_fasta: alphabet too large for letter mapping");
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  for (std::size_t m = 0; m < msa.count(); ++m) {
    out << '>' << (msa.identifiers.empty() || msa.identifiers[m].empty()
                       ? "seq_" + std::to_string(m)
                       : msa.identifiers[m])
        << '\n';
    std::string line;
    line.reserve(msa.length);
    for (auto c : msa.sequences[m]) line += kAlphabetLetters[c];
    out << line << '\n';
  }
}

}  // namespace catexpand
