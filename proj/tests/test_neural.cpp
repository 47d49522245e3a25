#include "otpl/neural.hpp"

#include <cmath>

#include "doctest.h"

using namespace otpl;

namespace {

DenseNet random_net(const std::vector<int>& dims,
                    const std::vector<Activation>& acts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return DenseNet::make(dims, acts, rng);
}

}  // namespace

TEST_CASE("forward pass basics") {
  SUBCASE("zero weights yield zero output through ReLU") {
    DenseNet net = random_net({3, 4, 2}, {Activation::ReLU,
                                          Activation::Identity}, 1);
    for (auto& layer : net.layers) {
      layer.W.setZero();
      layer.b.setZero();
    }
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
    CHECK(net.forward(x).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }

  SUBCASE("identity single layer passes input through") {
    DenseNet net = random_net({3, 3}, {Activation::Identity}, 1);
    net.layers[0].W.setIdentity();
    net.layers[0].b.setZero();
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
    CHECK((net.forward(x) - x).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("hand computed tiny network") {
    DenseNet net = random_net({2, 2, 1}, {Activation::ReLU,
                                          Activation::Identity}, 1);
    net.layers[0].W << 1.0, -2.0, 0.5, 3.0;
    net.layers[0].b << 0.25, -0.5;
    net.layers[1].W << 2.0, -1.0;
    net.layers[1].b << 0.1;
    Eigen::MatrixXd x(1, 2);
    x << 1.0, 2.0;
    // pre1 = (1*1 + 2*0.5 + 0.25, 1*(-2) + 2*3 - 0.5) = (2.25, 3.5)
    // out  = 2*2.25 - 1*3.5 + 0.1 = 1.1
    CHECK(net.forward(x)(0, 0) == doctest::Approx(1.1).epsilon(1e-12));
  }
}

TEST_CASE("backward matches the normal-equation gradient for linear nets") {
  DenseNet net = random_net({4, 1}, {Activation::Identity}, 5);
  net.layers[0].b.setZero();
  const int n = 16;
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(n, 4);
  Eigen::VectorXd y = Eigen::VectorXd::Random(n);

  DenseNet::Cache cache;
  Eigen::MatrixXd out = net.forward(X, &cache);
  Eigen::MatrixXd d_out = 2.0 * (out.col(0) - y) / static_cast<double>(n);

  DenseNet::Grads grads;
  grads.setZero(net);
  net.backward(cache, d_out, &grads);

  Eigen::VectorXd w = net.layers[0].W.col(0);
  Eigen::VectorXd expected = 2.0 * X.transpose() * (X * w - y) /
                             static_cast<double>(n);
  CHECK((grads.dW[0].col(0) - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  DenseNet net = random_net({3, 5, 2}, {Activation::TanH,
                                        Activation::Identity}, 9);
  DenseNet::Cache cache;
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
  net.forward(x, &cache);
  DenseNet::Grads grads;
  grads.setZero(net);
  net.backward(cache, Eigen::MatrixXd::Zero(6, 2), &grads);
  for (const auto& dW : grads.dW) CHECK(dW.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& db : grads.db) CHECK(db.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradients agree with central differences") {
  // Production-style shapes scaled down, all three activations covered.
  std::vector<std::vector<Activation>> act_sets = {
      {Activation::ReLU, Activation::ReLU, Activation::TanH},
      {Activation::TanH, Activation::ReLU, Activation::Identity}};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (const auto& acts : act_sets) {
      DenseNet net = random_net({6, 32, 24, 2}, acts, seed);
      std::mt19937_64 rng(seed + 100);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Eigen::MatrixXd x(4, 6);
      for (int i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
      auto loss = [](const Eigen::MatrixXd& y) { return y.squaredNorm(); };
      auto loss_grad = [](const Eigen::MatrixXd& y) {
        return Eigen::MatrixXd(2.0 * y);
      };
      CHECK(gradient_check(net, x, loss, loss_grad) < 1e-4);
    }
  }
}

TEST_CASE("finite difference error shrinks with the step") {
  DenseNet net = random_net({4, 8, 1}, {Activation::TanH,
                                        Activation::Identity}, 21);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  auto loss = [](const Eigen::MatrixXd& y) { return y.squaredNorm(); };
  auto loss_grad = [](const Eigen::MatrixXd& y) {
    return Eigen::MatrixXd(2.0 * y);
  };
  const double coarse = gradient_check(net, x, loss, loss_grad, 1e-2);
  const double fine = gradient_check(net, x, loss, loss_grad, 1e-4);
  CHECK(fine < coarse);
}

TEST_CASE("adam updates") {
  DenseNet net = random_net({3, 4, 1}, {Activation::ReLU,
                                        Activation::Identity}, 2);
  AdamState opt = AdamState::make(net);

  SUBCASE("zero gradient leaves parameters unchanged") {
    DenseNet before = net;
    DenseNet::Grads grads;
    grads.setZero(net);
    adam_update(net, grads, opt, 1e-3);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      CHECK((net.layers[i].W - before.layers[i].W).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }

  SUBCASE("first step moves each parameter by about lr against the grad") {
    DenseNet before = net;
    DenseNet::Grads grads;
    grads.setZero(net);
    grads.dW[0].setConstant(0.7);
    adam_update(net, grads, opt, 1e-3);
    Eigen::MatrixXd delta = net.layers[0].W - before.layers[0].W;
    // Bias-corrected first step is -lr * g / (|g| + eps') ~= -lr * sign(g).
    CHECK((delta.array() + 1e-3).abs().maxCoeff() <= 1e-6);
  }

  SUBCASE("identical updates are deterministic") {
    DenseNet a = random_net({3, 4, 1},
                            {Activation::ReLU, Activation::Identity}, 7);
    DenseNet b = random_net({3, 4, 1},
                            {Activation::ReLU, Activation::Identity}, 7);
    AdamState sa = AdamState::make(a), sb = AdamState::make(b);
    DenseNet::Grads grads;
    grads.setZero(a);
    for (auto& g : grads.dW) g.setConstant(0.01);
    for (auto& g : grads.db) g.setConstant(-0.02);
    for (int k = 0; k < 10; ++k) {
      adam_update(a, grads, sa, 1e-3);
      adam_update(b, grads, sb, 1e-3);
    }
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      CHECK(a.layers[i].W == b.layers[i].W);
      CHECK(a.layers[i].b == b.layers[i].b);
    }
  }
}

TEST_CASE("polyak averaging") {
  DenseNet live = random_net({3, 4, 2}, {Activation::ReLU,
                                         Activation::Identity}, 3);
  DenseNet target = random_net({3, 4, 2}, {Activation::ReLU,
                                           Activation::Identity}, 4);

  SUBCASE("tau 1 copies the live net") {
    polyak_update(target, live, 1.0);
    for (std::size_t i = 0; i < live.layers.size(); ++i) {
      CHECK(target.layers[i].W == live.layers[i].W);
      CHECK(target.layers[i].b == live.layers[i].b);
    }
  }

  SUBCASE("small tau is a convex combination") {
    DenseNet old = target;
    const double tau = 0.01;
    polyak_update(target, live, tau);
    for (std::size_t i = 0; i < live.layers.size(); ++i) {
      Eigen::MatrixXd moved = target.layers[i].W - old.layers[i].W;
      Eigen::MatrixXd span = live.layers[i].W - old.layers[i].W;
      CHECK((moved - tau * span).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
}

TEST_CASE("initialization is deterministic and tanh output is bounded") {
  DenseNet a = random_net({5, 16, 3}, {Activation::ReLU, Activation::TanH}, 8);
  DenseNet b = random_net({5, 16, 3}, {Activation::ReLU, Activation::TanH}, 8);
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    CHECK(a.layers[i].W == b.layers[i].W);
    CHECK(a.layers[i].b == b.layers[i].b);
  }
  Eigen::MatrixXd x = 3.0 * Eigen::MatrixXd::Random(50, 5);
  Eigen::MatrixXd y = a.forward(x);
  CHECK(y.cwiseAbs().maxCoeff() < 1.0);
  CHECK(a.parameter_count() == 5 * 16 + 16 + 16 * 3 + 3);
}
