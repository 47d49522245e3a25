#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace otpl {

enum class Activation { ReLU, TanH, Identity };

// Minimal dense network over 64-bit floats. Rows of the in/out matrices are
// batch samples: Y = act(X * W + b).
struct DenseNet {
  struct Layer {
    Eigen::MatrixXd W;  // (in, out)
    Eigen::VectorXd b;  // (out)
    Activation act = Activation::Identity;
  };
  std::vector<Layer> layers;

  int input_dim() const { return static_cast<int>(layers.front().W.rows()); }
  int output_dim() const { return static_cast<int>(layers.back().W.cols()); }

  // Uniform fan-in initialization, +-1/sqrt(fan_in), deterministic in rng.
  static DenseNet make(const std::vector<int>& dims,
                       const std::vector<Activation>& acts,
                       std::mt19937_64& rng);

  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  struct Grads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;

    void setZero(const DenseNet& net);
    void add(const Grads& other);
  };

  // Exact analytic gradients; returns the gradient w.r.t. the input. ReLU
  // subgradient at 0 is 0.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& d_out,
                           Grads* grads) const;

  std::size_t parameter_count() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;

  static AdamState make(const DenseNet& net);
};

// One bias-corrected Adam step in place.
void adam_update(DenseNet& net, const DenseNet::Grads& grads, AdamState& state,
                 double lr);

// target <- tau * live + (1 - tau) * target
void polyak_update(DenseNet& target, const DenseNet& live, double tau);

// Max relative error between analytic and central-finite-difference gradients
// of `loss` over every parameter. `loss` maps network output to a scalar and
// must be deterministic.
double gradient_check(
    const DenseNet& net, const Eigen::MatrixXd& x,
    const std::function<double(const Eigen::MatrixXd&)>& loss,
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& loss_grad,
    double fd_step = 1e-5);

}  // namespace otpl
