#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "otpl/deepsets.hpp"
#include "otpl/mdp.hpp"
#include "otpl/neural.hpp"

namespace otpl {

// Scales applied to raw features before they enter any network.
struct FeatureNorm {
  double radius = 80.0;
  double v_des = 30.0;
  double road_width = 10.5;
  double acc_scale = 4.0;
  double lat_v_scale = 4.0;
  double lane_scale = 2.0;
};

Eigen::RowVector3d normalize_vehicle(const VehicleFeatures& f,
                                     const FeatureNorm& n);
Eigen::RowVectorXd normalize_ego(const EgoFeatures& f, const FeatureNorm& n);
constexpr int kEgoFeatureDim = 7;
constexpr int kActionDim = 4;

// Affine map between physical actions and the [-1,1]^4 network convention.
Eigen::Vector4d normalize_action(const Action& a, const ActionBounds& b);
Action denormalize_action(const Eigen::Vector4d& n, const ActionBounds& b);

// One offline sample. The action is stored normalized to [-1,1]^4.
struct Transition {
  RLState s;
  std::array<double, 4> a{};
  double r = 0.0;
  RLState s2;
  int done = 0;  // 1 iff s2 is terminal (collision / road departure)
};

// FNV-1a over a canonical byte serialization; used for offline-purity and
// determinism checks.
std::string buffer_checksum(const std::vector<Transition>& transitions);

// Fixed buffer with feature tensors precomputed for batched training.
class ReplayBuffer {
 public:
  ReplayBuffer(std::vector<Transition> transitions, const FeatureNorm& norm);

  std::size_t size() const { return transitions_.size(); }
  const std::vector<Transition>& transitions() const { return transitions_; }

  Eigen::MatrixXd veh_s, veh_s2;    // stacked normalized vehicle rows
  std::vector<int> off_s, off_s2;   // per-transition row ranges (size N+1)
  Eigen::MatrixXd ego_s, ego_s2;    // (N, 7)
  Eigen::MatrixXd actions;          // (N, 4), normalized
  Eigen::VectorXd rewards;
  Eigen::VectorXd done;

 private:
  std::vector<Transition> transitions_;
};

struct TD3Hyperparams {
  double gamma = 0.99;
  double tau = 1e-4;
  int batch = 100;
  double lr = 1e-4;
  int policy_delay = 2;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  long max_iterations = 100000;
  int n_critics = 3;
  long checkpoint_every = 5000;
};

struct NetSizes {
  DeepSets::Sizes encoder;
  int actor_hidden1 = 400;
  int actor_hidden2 = 300;
  int critic_hidden1 = 400;
  int critic_hidden2 = 300;
};

// Encoder + actor + critics with their target copies and optimizer state.
struct TrainedAgent {
  DeepSets encoder, encoder_target;
  DenseNet actor, actor_target;
  std::vector<DenseNet> critics, critic_targets;

  AdamState phi_opt, rho_opt, actor_opt;
  std::vector<AdamState> critic_opt;

  TD3Hyperparams hp;
  NetSizes sizes;
  FeatureNorm norm;
  ActionBounds bounds;
  std::uint64_t seed = 0;
  long iteration = 0;
  std::string data_checksum;

  static TrainedAgent make(const TD3Hyperparams& hp, const NetSizes& sizes,
                           const FeatureNorm& norm, const ActionBounds& bounds,
                           std::uint64_t seed);

  int state_dim() const { return encoder.output_dim() + kEgoFeatureDim; }

  // Encoder + actor forward, denormalized to physical units (not clamped).
  Action act(const RLState& s) const;
};

struct IterationDiagnostics {
  double critic_loss = 0.0;
  double mean_q = 0.0;
  double mean_target = 0.0;
  bool actor_updated = false;
};

// One Algorithm-1 iteration (index j, 1-based): clipped-noise target actions,
// min-over-three-critics target, one Adam step per critic (encoder trained by
// the summed critic gradients), delayed actor update + Polyak averaging.
IterationDiagnostics td3_iteration(TrainedAgent& agent,
                                   const ReplayBuffer& buffer,
                                   std::mt19937_64& rng, long j);

using TrainCallback =
    std::function<void(long iteration, const IterationDiagnostics&)>;

// Full offline training loop; deterministic in (buffer, seed). Writes a
// checkpoint every hp.checkpoint_every iterations when a directory is given.
TrainedAgent train_offline(const std::vector<Transition>& transitions,
                           const TD3Hyperparams& hp, const NetSizes& sizes,
                           std::uint64_t seed,
                           const std::optional<std::string>& checkpoint_dir = {},
                           const TrainCallback& callback = nullptr,
                           const FeatureNorm& norm = {},
                           const ActionBounds& bounds = {});

std::string agent_to_json(const TrainedAgent& agent);
TrainedAgent agent_from_json(const std::string& text);
void save_agent(const TrainedAgent& agent, const std::string& path);
TrainedAgent load_agent(const std::string& path);

}  // namespace otpl
