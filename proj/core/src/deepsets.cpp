#include "otpl/deepsets.hpp"

#include <stdexcept>

namespace otpl {

DeepSets DeepSets::make(const Sizes& sizes, std::mt19937_64& rng) {
  DeepSets ds;
  ds.phi = DenseNet::make({sizes.input, sizes.phi_hidden, sizes.d_phi},
                          {Activation::ReLU, Activation::Identity}, rng);
  ds.rho = DenseNet::make({sizes.d_phi, sizes.rho_hidden, sizes.d_rho},
                          {Activation::ReLU, Activation::Identity}, rng);
  return ds;
}

Eigen::VectorXd DeepSets::encode(const Eigen::MatrixXd& elements) const {
  const std::vector<int> offsets = {0, static_cast<int>(elements.rows())};
  return encode_batch(elements, offsets).row(0).transpose();
}

Eigen::MatrixXd DeepSets::encode_batch(const Eigen::MatrixXd& elements,
                                       const std::vector<int>& offsets,
                                       BatchCache* cache) const {
  if (offsets.size() < 2 || offsets.front() != 0 ||
      offsets.back() != elements.rows()) {
    throw std::invalid_argument("DeepSets::encode_batch: bad segment offsets");
  }
  const auto n_sets = static_cast<int>(offsets.size()) - 1;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(n_sets, phi.output_dim());
  if (elements.rows() > 0) {
    const Eigen::MatrixXd phi_out =
        phi.forward(elements, cache ? &cache->phi_cache : nullptr);
    for (int b = 0; b < n_sets; ++b) {
      for (int r = offsets[b]; r < offsets[b + 1]; ++r) {
        pooled.row(b) += phi_out.row(r);
      }
    }
  } else if (cache) {
    cache->phi_cache = {};
  }
  if (cache) cache->offsets = offsets;
  return rho.forward(pooled, cache ? &cache->rho_cache : nullptr);
}

void DeepSets::backward_batch(const BatchCache& cache,
                              const Eigen::MatrixXd& d_out,
                              DenseNet::Grads* phi_grads,
                              DenseNet::Grads* rho_grads) const {
  const Eigen::MatrixXd d_pooled = rho.backward(cache.rho_cache, d_out, rho_grads);
  if (cache.phi_cache.inputs.empty()) return;  // every set was empty
  const auto n_rows = cache.phi_cache.inputs.front().rows();
  Eigen::MatrixXd d_phi_out(n_rows, d_pooled.cols());
  const auto n_sets = static_cast<int>(cache.offsets.size()) - 1;
  for (int b = 0; b < n_sets; ++b) {
    for (int r = cache.offsets[b]; r < cache.offsets[b + 1]; ++r) {
      d_phi_out.row(r) = d_pooled.row(b);
    }
  }
  phi.backward(cache.phi_cache, d_phi_out, phi_grads);
}

}  // namespace otpl
