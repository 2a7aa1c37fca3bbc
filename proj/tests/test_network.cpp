#include <doctest.h>

#include <cstdio>
#include <random>

#include "catexpand/network.hpp"
#include "test_support.hpp"

using namespace catexpand;

namespace {

// the hand-checkable square net: H=1, K=1, W1=((1,1)), all else trivial
NetworkParams tiny_square_net() {
  NetworkParams net;
  net.spec = CategorySpec({2});
  net.class_count = 1;
  net.activation = Activation::Square;
  net.w1 = Eigen::MatrixXd::Ones(1, 2);
  net.b1 = Eigen::VectorXd::Zero(1);
  net.w2 = Eigen::MatrixXd::Ones(1, 1);
  net.b2 = Eigen::VectorXd::Zero(1);
  return net;
}

LabeledDataset xor_dataset() {
  LabeledDataset data;
  data.spec = CategorySpec({2, 2});
  data.class_count = 2;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      data.samples.push_back({{a, b}});
      data.labels.push_back(a ^ b);
      data.weights.push_back(1.0);
    }
  return data;
}

}  // namespace

TEST_CASE("forward_logits on the hand-evaluated square net") {
  NetworkParams net = tiny_square_net();
  auto spec = net.spec;
  CHECK(forward_logits(net, make_probe(spec, {{0, 0}}))[0] == doctest::Approx(1.0));
  CHECK(forward_logits(net, make_probe(spec, {}))[0] == doctest::Approx(0.0));
  // invalid multi-hot probe is still defined
  CHECK(forward_logits(net, make_probe(spec, {{0, 0}, {0, 1}}))[0] ==
        doctest::Approx(4.0));
}

TEST_CASE("softmax basics and stability") {
  Eigen::VectorXd two(2);
  two << 0.0, 0.0;
  Eigen::VectorXd p = softmax(two);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  Eigen::VectorXd three(3);
  three << 4.2, 4.2, 4.2;
  p = softmax(three);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3));

  Eigen::VectorXd big(2);
  big << 1000.0, 0.0;
  p = softmax(big);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(0.0));
  CHECK(std::abs(p.sum() - 1.0) < 1e-12);

  Eigen::VectorXd bad(2);
  bad << std::numeric_limits<double>::infinity(), 0.0;
  CHECK_THROWS_AS(softmax(bad), Error);
}

TEST_CASE("softmax sums to one on random probes") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    NetworkParams net = catexpand::testing::random_small_net(rng);
    ProbeVector v;
    v.bits.assign(net.spec.total_dimension(), 0);
    for (auto& b : v.bits) b = rng() & 1;
    CHECK(std::abs(softmax(forward_logits(net, v)).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    NetworkParams net = catexpand::testing::random_small_net(rng);
    LabeledDataset data;
    data.spec = net.spec;
    data.class_count = net.class_count;
    for (int m = 0; m < 6; ++m) {
      CategoricalSample s;
      for (int i = 0; i < net.spec.feature_count(); ++i)
        s.categories.push_back(
            std::uniform_int_distribution<int>(0, net.spec.category_count(i) - 1)(rng));
      data.samples.push_back(s);
      data.labels.push_back(
          std::uniform_int_distribution<int>(0, net.class_count - 1)(rng));
      data.weights.push_back(std::uniform_real_distribution<double>(0.2, 2.0)(rng));
    }
    std::vector<std::size_t> batch(data.size());
    std::iota(batch.begin(), batch.end(), std::size_t{0});
    const double l2 = 0.01;

    Gradients grads;
    loss_and_gradients(net, data, batch, l2, &grads);

    const double step = 1e-5;
    auto check_tensor = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& analytic) {
      for (Eigen::Index i = 0; i < param.rows(); ++i)
        for (Eigen::Index j = 0; j < param.cols(); ++j) {
          double save = param(i, j);
          param(i, j) = save + step;
          double up = loss_and_gradients(net, data, batch, l2, nullptr);
          param(i, j) = save - step;
          double down = loss_and_gradients(net, data, batch, l2, nullptr);
          param(i, j) = save;
          double fd = (up - down) / (2 * step);
          double denom = std::max({std::abs(fd), std::abs(analytic(i, j)), 1e-8});
          CHECK(std::abs(fd - analytic(i, j)) / denom < 1e-4);
        }
    };
    auto check_vector = [&](Eigen::VectorXd& param, const Eigen::VectorXd& analytic) {
      for (Eigen::Index i = 0; i < param.size(); ++i) {
        double save = param[i];
        param[i] = save + step;
        double up = loss_and_gradients(net, data, batch, l2, nullptr);
        param[i] = save - step;
        double down = loss_and_gradients(net, data, batch, l2, nullptr);
        param[i] = save;
        double fd = (up - down) / (2 * step);
        double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
        CHECK(std::abs(fd - analytic[i]) / denom < 1e-4);
      }
    };
    check_tensor(net.w1, grads.w1);
    check_tensor(net.w2, grads.w2);
    check_vector(net.b1, grads.b1);
    check_vector(net.b2, grads.b2);
  }
}

TEST_CASE("training learns the XOR parity dataset") {
  LabeledDataset data = xor_dataset();
  NetworkParams net0 = init_network(data.spec, 2, 8, Activation::Tanh, 42);
  TrainConfig config;
  config.learning_rate = 0.05;
  config.epochs = 500;
  config.batch_size = 4;
  config.l2_coefficient = 0.0;
  config.rng_seed = 42;
  auto [net, report] = train(net0, data, config);
  CHECK(report.final_train_accuracy == doctest::Approx(1.0));
  CHECK(report.convergence_residual < 5e-2);
}

TEST_CASE("one-sample dataset converges to confident prediction") {
  LabeledDataset data;
  data.spec = CategorySpec({2});
  data.class_count = 2;
  data.samples = {{{1}}};
  data.labels = {1};
  data.weights = {1.0};
  NetworkParams net0 = init_network(data.spec, 2, 4, Activation::Tanh, 1);
  TrainConfig config;
  config.learning_rate = 0.05;
  config.epochs = 300;
  config.batch_size = 1;
  config.rng_seed = 1;
  auto [net, report] = train(net0, data, config);
  Eigen::VectorXd p = softmax(forward_logits(net, encode_one_hot({{1}}, data.spec)));
  CHECK(p[1] > 0.99);
}

TEST_CASE("epochs=0 is a no-op") {
  LabeledDataset data = xor_dataset();
  NetworkParams net0 = init_network(data.spec, 2, 4, Activation::Tanh, 5);
  TrainConfig config;
  config.epochs = 0;
  auto [net, report] = train(net0, data, config);
  CHECK(report.epoch_losses.empty());
  CHECK(net.w1 == net0.w1);
  CHECK(net.b2 == net0.b2);
}

TEST_CASE("training is bitwise reproducible for identical seeds") {
  LabeledDataset data = xor_dataset();
  TrainConfig config;
  config.learning_rate = 0.05;
  config.epochs = 50;
  config.batch_size = 2;
  config.rng_seed = 99;
  NetworkParams net0 = init_network(data.spec, 2, 6, Activation::Tanh, 99);
  auto [a, ra] = train(net0, data, config);
  auto [b, rb] = train(net0, data, config);
  CHECK(a.w1 == b.w1);
  CHECK(a.b1 == b.b1);
  CHECK(a.w2 == b.w2);
  CHECK(a.b2 == b.b2);
  CHECK(ra.epoch_losses == rb.epoch_losses);
}

TEST_CASE("convergence_residual is zero for matched uniform outputs") {
  // labels uniformly mixed per input, net with zero weights -> uniform probs
  LabeledDataset data;
  data.spec = CategorySpec({2});
  data.class_count = 2;
  data.samples = {{{0}}, {{0}}, {{1}}, {{1}}};
  data.labels = {0, 1, 0, 1};
  data.weights = {1, 1, 1, 1};
  NetworkParams net = init_network(data.spec, 2, 4, Activation::Tanh, 0);
  net.w1.setZero();
  net.w2.setZero();
  CHECK(convergence_residual(net, data) == doctest::Approx(0.0));
}

TEST_CASE("convergence_residual of a random net is reported") {
  std::mt19937_64 rng(17);
  NetworkParams net = catexpand::testing::random_small_net(rng);
  LabeledDataset data;
  data.spec = net.spec;
  data.class_count = net.class_count;
  for (int m = 0; m < 4; ++m) {
    CategoricalSample s;
    for (int i = 0; i < net.spec.feature_count(); ++i)
      s.categories.push_back(
          std::uniform_int_distribution<int>(0, net.spec.category_count(i) - 1)(rng));
    data.samples.push_back(s);
    data.labels.push_back(
        std::uniform_int_distribution<int>(0, net.class_count - 1)(rng));
    data.weights.push_back(1.0);
  }
  double r = convergence_residual(net, data);
  CHECK(r >= 0.0);
  CHECK(std::isfinite(r));
}

TEST_CASE("model container round trip") {
  std::mt19937_64 rng(23);
  NetworkParams net = catexpand::testing::random_small_net(rng);
  std::string path = "test_model.cnet";
  save_network(net, path);
  NetworkParams back = load_network(path);
  CHECK(back.spec == net.spec);
  CHECK(back.activation == net.activation);
  CHECK(back.w1 == net.w1);
  CHECK(back.b1 == net.b1);
  CHECK(back.w2 == net.w2);
  CHECK(back.b2 == net.b2);
  std::remove(path.c_str());
}
