#pragma once

#include <optional>
#include <vector>

#include "otpl/poly_traj.hpp"
#include "otpl/sim.hpp"

namespace otpl {

// Per-vehicle state features: relative longitudinal distance (m), relative
// velocity normalized by the desired velocity, relative lane index.
struct VehicleFeatures {
  double d_rel = 0.0;
  double v_rel = 0.0;
  int lane_rel = 0;
};

struct EgoFeatures {
  double v_rl = 0.0;
  int ll_valid = 1;
  int rl_valid = 1;
  double pos_lat = 0.0;
  double lon_a = 0.0;
  double lat_v = 0.0;
  double lat_a = 0.0;
};

// Order of `vehicles` carries no meaning; the downstream encoder is
// permutation invariant.
struct RLState {
  std::vector<VehicleFeatures> vehicles;
  EgoFeatures ego;
};

// The four continuous trajectory parameters chosen each decision step.
struct Action {
  double a_tv = 0.0;     // target longitudinal velocity, m/s
  double a_lon_d = 0.0;  // longitudinal profile duration, s
  double a_lat_d = 0.0;  // lateral profile duration, s
  double a_lp = 0.0;     // target lateral position, m
};

struct AxisBounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct ActionBounds {
  AxisBounds a_tv{0.0, 40.0};
  AxisBounds a_lon_d{1.0, 10.0};
  AxisBounds a_lat_d{1.0, 5.0};
  AxisBounds a_lp{-1.75, 8.75};
};

enum class VelocityBranch { OneSided, Symmetric };

struct RewardParams {
  double v_des = 30.0;
  double jp_lon = -0.2;
  double jp_lat = -0.2;
  double j_max_lon = 50.0;  // (m/s^3)^2
  double j_max_lat = 50.0;
  double fail_penalty = -0.5;
  VelocityBranch velocity_branch = VelocityBranch::Symmetric;
};

struct EnvConfig {
  ActionBounds bounds;
  RewardParams reward;
  double radius = 80.0;        // featurization radius, m
  double acc_min = -8.0;       // longitudinal acceleration limits for
  double acc_max = 4.0;        // the feasible-velocity cap
  double decision_period = 1.0;
  double timeout = 60.0;
  SafetyParams safety;
};

// One VehicleFeatures entry per surrounding vehicle within `radius`
// longitudinally; ego features read off the ego state.
RLState featurize(const WorldState& world, double radius, double v_des);

// Clips each component to its bounds, additionally caps a_tv to the feasible
// velocity range for the chosen duration and snaps a_lp so the ego footprint
// stays on the paved width. Idempotent.
Action clamp_action(const Action& raw, const ActionBounds& bounds,
                    const LonState& lon_state, double acc_min = -8.0,
                    double acc_max = 4.0, const Road& road = Road{});

// Immediate reward for the executed trajectory; `v_rl_next` is the ego
// velocity at the next decision state. Bounded in [fail_penalty, 1].
double compute_reward(const Trajectory& traj, bool fail,
                      const RewardParams& params, double v_rl_next);

enum class EpisodeEnd { None, Collision, RoadDeparture, Timeout, RoadEnd };

struct StepInfo {
  bool fail = false;
  EpisodeEnd end = EpisodeEnd::None;
  Action executed;      // after clamping
  bool trajectory_rejected = false;  // failed the pre-execution safety check
};

struct StepResult {
  RLState next;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// Binds the simulator and the trajectory generator into the 1 s decision
// loop: clamp action -> solve profiles -> safety check -> 5 playback ticks.
class Env {
 public:
  Env(const Scenario& scenario, const EnvConfig& config);

  void reset(const Scenario& scenario);
  RLState state() const;
  const WorldState& world() const { return sim_->world(); }
  bool done() const { return done_; }
  LonState ego_lon_state() const;
  const EnvConfig& config() const { return config_; }

  StepResult step(const Action& raw_action);

 private:
  EnvConfig config_;
  std::optional<Simulation> sim_;
  Scenario scenario_;
  bool done_ = false;
};

std::vector<ObstaclePrediction> predict_obstacles(const WorldState& world);

}  // namespace otpl
