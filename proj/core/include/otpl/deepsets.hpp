#pragma once

#include <vector>

#include "otpl/neural.hpp"

namespace otpl {

// Permutation-invariant set encoder: rho(sum_i phi(v_i)). The empty set pools
// to the zero vector before rho.
struct DeepSets {
  DenseNet phi;  // per-element network
  DenseNet rho;  // post-pooling network

  struct Sizes {
    int input = 3;
    int phi_hidden = 64;
    int d_phi = 64;
    int rho_hidden = 64;
    int d_rho = 32;
  };

  static DeepSets make(const Sizes& sizes, std::mt19937_64& rng);

  int output_dim() const { return rho.output_dim(); }

  // One row per set element (possibly zero rows).
  Eigen::VectorXd encode(const Eigen::MatrixXd& elements) const;

  // Batched encoding of `offsets.size()-1` sets stacked row-wise in
  // `elements`; set b owns rows [offsets[b], offsets[b+1]).
  struct BatchCache {
    DenseNet::Cache phi_cache;
    DenseNet::Cache rho_cache;
    std::vector<int> offsets;
  };

  Eigen::MatrixXd encode_batch(const Eigen::MatrixXd& elements,
                               const std::vector<int>& offsets,
                               BatchCache* cache = nullptr) const;

  // Backpropagates d_out (one row per set) into phi/rho gradients.
  void backward_batch(const BatchCache& cache, const Eigen::MatrixXd& d_out,
                      DenseNet::Grads* phi_grads,
                      DenseNet::Grads* rho_grads) const;
};

}  // namespace otpl
