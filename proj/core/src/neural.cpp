#include "otpl/neural.hpp"

#include <cmath>
#include <stdexcept>

namespace otpl {

namespace {

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::ReLU:
      return z.cwiseMax(0.0);
    case Activation::TanH:
      return z.array().tanh().matrix();
    case Activation::Identity:
      return z;
  }
  return z;
}

// Elementwise derivative given pre-activation z and activation value y.
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& y, Activation act) {
  switch (act) {
    case Activation::ReLU:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::TanH:
      return (1.0 - y.array().square()).matrix();
    case Activation::Identity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace

DenseNet DenseNet::make(const std::vector<int>& dims,
                        const std::vector<Activation>& acts,
                        std::mt19937_64& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    throw std::invalid_argument("DenseNet::make: dims/acts mismatch");
  }
  DenseNet net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer layer;
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.W.resize(dims[i], dims[i + 1]);
    layer.b.resize(dims[i + 1]);
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) {
        layer.W(r, c) = dist(rng);
      }
    }
    for (Eigen::Index c = 0; c < layer.b.size(); ++c) layer.b(c) = dist(rng);
    layer.act = acts[i];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& x,
                                  Cache* cache) const {
  if (x.cols() != layers.front().W.rows()) {
    throw std::invalid_argument("DenseNet::forward: input dim mismatch");
  }
  Eigen::MatrixXd h = x;
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (const auto& layer : layers) {
    if (cache) cache->inputs.push_back(h);
    Eigen::MatrixXd z = (h * layer.W).rowwise() + layer.b.transpose();
    if (cache) cache->pre.push_back(z);
    h = apply_activation(z, layer.act);
  }
  return h;
}

void DenseNet::Grads::setZero(const DenseNet& net) {
  dW.resize(net.layers.size());
  db.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    dW[i] = Eigen::MatrixXd::Zero(net.layers[i].W.rows(), net.layers[i].W.cols());
    db[i] = Eigen::VectorXd::Zero(net.layers[i].b.size());
  }
}

void DenseNet::Grads::add(const Grads& other) {
  for (std::size_t i = 0; i < dW.size(); ++i) {
    dW[i] += other.dW[i];
    db[i] += other.db[i];
  }
}

Eigen::MatrixXd DenseNet::backward(const Cache& cache,
                                   const Eigen::MatrixXd& d_out,
                                   Grads* grads) const {
  if (cache.inputs.size() != layers.size()) {
    throw std::logic_error("DenseNet::backward: stale cache");
  }
  if (grads && grads->dW.size() != layers.size()) grads->setZero(*this);
  Eigen::MatrixXd d = d_out;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const auto& layer = layers[idx];
    const Eigen::MatrixXd y = apply_activation(cache.pre[idx], layer.act);
    const Eigen::MatrixXd dz =
        d.cwiseProduct(activation_grad(cache.pre[idx], y, layer.act));
    if (grads) {
      grads->dW[idx] += cache.inputs[idx].transpose() * dz;
      grads->db[idx] += dz.colwise().sum().transpose();
    }
    d = dz * layer.W.transpose();
  }
  return d;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += static_cast<std::size_t>(layer.W.size() + layer.b.size());
  }
  return n;
}

AdamState AdamState::make(const DenseNet& net) {
  AdamState s;
  for (const auto& layer : net.layers) {
    s.mW.push_back(Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()));
    s.vW.push_back(Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()));
    s.mb.push_back(Eigen::VectorXd::Zero(layer.b.size()));
    s.vb.push_back(Eigen::VectorXd::Zero(layer.b.size()));
  }
  return s;
}

void adam_update(DenseNet& net, const DenseNet::Grads& grads, AdamState& state,
                 double lr) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& layer = net.layers[i];
    state.mW[i] = state.beta1 * state.mW[i] + (1.0 - state.beta1) * grads.dW[i];
    state.vW[i] = state.beta2 * state.vW[i] +
                  (1.0 - state.beta2) * grads.dW[i].cwiseProduct(grads.dW[i]);
    layer.W.array() -= lr * (state.mW[i].array() / bc1) /
                       ((state.vW[i].array() / bc2).sqrt() + state.eps);
    state.mb[i] = state.beta1 * state.mb[i] + (1.0 - state.beta1) * grads.db[i];
    state.vb[i] = state.beta2 * state.vb[i] +
                  (1.0 - state.beta2) * grads.db[i].cwiseProduct(grads.db[i]);
    layer.b.array() -= lr * (state.mb[i].array() / bc1) /
                       ((state.vb[i].array() / bc2).sqrt() + state.eps);
  }
}

void polyak_update(DenseNet& target, const DenseNet& live, double tau) {
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    target.layers[i].W =
        tau * live.layers[i].W + (1.0 - tau) * target.layers[i].W;
    target.layers[i].b =
        tau * live.layers[i].b + (1.0 - tau) * target.layers[i].b;
  }
}

double gradient_check(
    const DenseNet& net, const Eigen::MatrixXd& x,
    const std::function<double(const Eigen::MatrixXd&)>& loss,
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& loss_grad,
    double fd_step) {
  if (fd_step <= 0.0) throw std::invalid_argument("fd_step must be > 0");
  DenseNet::Cache cache;
  const Eigen::MatrixXd y = net.forward(x, &cache);
  DenseNet::Grads grads;
  grads.setZero(net);
  net.backward(cache, loss_grad(y), &grads);

  DenseNet probe = net;
  double max_rel = 0.0;
  auto check_param = [&](double* p, double analytic) {
    const double saved = *p;
    *p = saved + fd_step;
    const double up = loss(probe.forward(x));
    *p = saved - fd_step;
    const double down = loss(probe.forward(x));
    *p = saved;
    const double numeric = (up - down) / (2.0 * fd_step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t i = 0; i < probe.layers.size(); ++i) {
    auto& layer = probe.layers[i];
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) {
        check_param(&layer.W(r, c), grads.dW[i](r, c));
      }
    }
    for (Eigen::Index c = 0; c < layer.b.size(); ++c) {
      check_param(&layer.b(c), grads.db[i](c));
    }
  }
  return max_rel;
}

}  // namespace otpl
