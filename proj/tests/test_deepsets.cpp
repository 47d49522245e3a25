#include "otpl/deepsets.hpp"

#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"

using namespace otpl;

namespace {

DeepSets small_encoder(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DeepSets::Sizes sizes;
  sizes.phi_hidden = 8;
  sizes.d_phi = 6;
  sizes.rho_hidden = 8;
  sizes.d_rho = 4;
  return DeepSets::make(sizes, rng);
}

Eigen::MatrixXd random_set(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(n, 3);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
  return m;
}

}  // namespace

TEST_CASE("permutation invariance") {
  DeepSets enc = small_encoder(1);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    Eigen::MatrixXd set = random_set(rng, n);
    Eigen::VectorXd base = enc.encode(set);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int p = 0; p < 10; ++p) {
      std::shuffle(order.begin(), order.end(), rng);
      Eigen::MatrixXd permuted(n, 3);
      for (int i = 0; i < n; ++i) permuted.row(i) = set.row(order[i]);
      CHECK((enc.encode(permuted) - base).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("empty set encodes rho of zero") {
  DeepSets enc = small_encoder(3);
  Eigen::VectorXd out = enc.encode(Eigen::MatrixXd(0, 3));
  Eigen::MatrixXd zero_pool = Eigen::MatrixXd::Zero(1, 6);
  Eigen::VectorXd expected = enc.rho.forward(zero_pool).row(0);
  CHECK((out - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("duplicate elements pool linearly") {
  DeepSets enc = small_encoder(4);
  std::mt19937_64 rng(5);
  Eigen::MatrixXd one = random_set(rng, 1);
  Eigen::MatrixXd two(2, 3);
  two.row(0) = one.row(0);
  two.row(1) = one.row(0);
  Eigen::MatrixXd phi_out = enc.phi.forward(one);
  Eigen::MatrixXd doubled = 2.0 * phi_out;
  Eigen::VectorXd expected = enc.rho.forward(doubled).row(0);
  CHECK((enc.encode(two) - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("batched encoding matches per-set encoding") {
  DeepSets enc = small_encoder(6);
  std::mt19937_64 rng(7);
  std::vector<Eigen::MatrixXd> sets;
  std::vector<int> offsets{0};
  int total = 0;
  for (int b = 0; b < 6; ++b) {
    const int n = static_cast<int>(rng() % 5);  // includes empty sets
    sets.push_back(random_set(rng, n));
    total += n;
    offsets.push_back(total);
  }
  Eigen::MatrixXd stacked(total, 3);
  for (std::size_t b = 0; b < sets.size(); ++b) {
    for (int i = 0; i < sets[b].rows(); ++i) {
      stacked.row(offsets[b] + i) = sets[b].row(i);
    }
  }
  Eigen::MatrixXd out = enc.encode_batch(stacked, offsets);
  REQUIRE(out.rows() == 6);
  for (std::size_t b = 0; b < sets.size(); ++b) {
    Eigen::VectorXd single = enc.encode(sets[b]);
    CHECK((out.row(b).transpose() - single).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("batched backward agrees with finite differences") {
  DeepSets enc = small_encoder(8);
  std::mt19937_64 rng(9);
  Eigen::MatrixXd stacked = random_set(rng, 7);
  std::vector<int> offsets{0, 3, 3, 7};  // one empty set in the middle

  // Scalar loss: weighted sum of all batch outputs.
  Eigen::MatrixXd weights = random_set(rng, 3).leftCols(1) *
                            Eigen::RowVectorXd::Ones(enc.output_dim());
  auto loss_value = [&](const DeepSets& e) {
    Eigen::MatrixXd out = e.encode_batch(stacked, offsets);
    return (out.array() * weights.array()).sum();
  };

  DeepSets::BatchCache cache;
  enc.encode_batch(stacked, offsets, &cache);
  DenseNet::Grads phi_grads, rho_grads;
  phi_grads.setZero(enc.phi);
  rho_grads.setZero(enc.rho);
  enc.backward_batch(cache, weights, &phi_grads, &rho_grads);

  const double h = 1e-6;
  auto check_layer = [&](DenseNet DeepSets::* net_member,
                         const DenseNet::Grads& grads) {
    DenseNet& net = enc.*net_member;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (int k = 0; k < std::min<int>(6, static_cast<int>(
                              net.layers[l].W.size())); ++k) {
        double& w = net.layers[l].W.data()[k];
        const double saved = w;
        w = saved + h;
        const double up = loss_value(enc);
        w = saved - h;
        const double down = loss_value(enc);
        w = saved;
        const double fd = (up - down) / (2.0 * h);
        const double analytic = grads.dW[l].data()[k];
        CHECK(std::abs(fd - analytic) <=
              1e-4 * std::max(1.0, std::abs(fd)));
      }
    }
  };
  check_layer(&DeepSets::phi, phi_grads);
  check_layer(&DeepSets::rho, rho_grads);
}

TEST_CASE("encode cost grows linearly with set size") {
  // Structural stand-in for a timing test: phi is applied exactly once per
  // element, so doubling a set doubles the pooled pre-rho activation when all
  // elements are identical.
  DeepSets enc = small_encoder(10);
  std::mt19937_64 rng(11);
  Eigen::MatrixXd base = random_set(rng, 1);
  for (int n : {2, 4, 8}) {
    Eigen::MatrixXd rep(n, 3);
    for (int i = 0; i < n; ++i) rep.row(i) = base.row(0);
    Eigen::MatrixXd pooled =
        static_cast<double>(n) * enc.phi.forward(base);
    Eigen::VectorXd expected = enc.rho.forward(pooled).row(0);
    CHECK((enc.encode(rep) - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
