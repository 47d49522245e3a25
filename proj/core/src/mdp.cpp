#include "otpl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace otpl {

RLState featurize(const WorldState& world, double radius, double v_des) {
  RLState s;
  const auto& ego = world.ego;
  const int ego_lane = world.road.nearest_lane(ego.lat_pos);
  for (const auto& v : world.others) {
    const double d_rel = v.lon_pos - ego.lon_pos;
    if (std::abs(d_rel) > radius) continue;
    VehicleFeatures f;
    f.d_rel = d_rel;
    f.v_rel = (v.lon_vel - ego.lon_vel) / v_des;
    f.lane_rel = world.road.nearest_lane(v.lat_pos) - ego_lane;
    s.vehicles.push_back(f);
  }
  s.ego.v_rl = ego.lon_vel;
  s.ego.ll_valid = ego_lane < world.road.n_lanes - 1 ? 1 : 0;
  s.ego.rl_valid = ego_lane > 0 ? 1 : 0;
  s.ego.pos_lat = ego.lat_pos;
  s.ego.lon_a = ego.lon_acc;
  s.ego.lat_v = ego.lat_vel;
  s.ego.lat_a = ego.lat_acc;
  return s;
}

Action clamp_action(const Action& raw, const ActionBounds& bounds,
                    const LonState& lon_state, double acc_min, double acc_max,
                    const Road& road) {
  Action a;
  a.a_lon_d = std::clamp(raw.a_lon_d, bounds.a_lon_d.lo, bounds.a_lon_d.hi);
  a.a_lat_d = std::clamp(raw.a_lat_d, bounds.a_lat_d.lo, bounds.a_lat_d.hi);
  a.a_tv = std::clamp(raw.a_tv, bounds.a_tv.lo, bounds.a_tv.hi);
  const auto [v_min, v_max] =
      velocity_bounds(lon_state, a.a_lon_d, acc_min, acc_max);
  a.a_tv = std::clamp(a.a_tv, v_min, v_max);
  a.a_lp = std::clamp(raw.a_lp, bounds.a_lp.lo, bounds.a_lp.hi);
  // keep the full ego footprint on the paved width
  a.a_lp = std::clamp(a.a_lp, road.paved_min() + 1.0, road.paved_max() - 1.0);
  return a;
}

double compute_reward(const Trajectory& traj, bool fail,
                      const RewardParams& params, double v_rl_next) {
  if (fail) return params.fail_penalty;
  double r = 0.0;
  const double delta_vel = std::abs(v_rl_next - params.v_des);
  if (params.velocity_branch == VelocityBranch::OneSided) {
    r += v_rl_next >= params.v_des ? 1.0 - delta_vel / params.v_des : 1.0;
  } else {
    r += std::max(0.0, 1.0 - delta_vel / params.v_des);
  }
  const auto [sqj_lon, sqj_lat] = mean_squared_jerk(traj);
  r += sqj_lon >= params.j_max_lon ? params.jp_lon
                                   : params.jp_lon * (sqj_lon / params.j_max_lon);
  r += sqj_lat >= params.j_max_lat ? params.jp_lat
                                   : params.jp_lat * (sqj_lat / params.j_max_lat);
  return std::max(r, params.fail_penalty);
}

std::vector<ObstaclePrediction> predict_obstacles(const WorldState& world) {
  std::vector<ObstaclePrediction> out;
  out.reserve(world.others.size());
  for (const auto& v : world.others) {
    out.push_back({v.lon_pos, v.lat_pos, v.lon_vel, v.length, v.width});
  }
  return out;
}

Env::Env(const Scenario& scenario, const EnvConfig& config)
    : config_(config) {
  reset(scenario);
}

void Env::reset(const Scenario& scenario) {
  scenario_ = scenario;
  sim_.emplace(scenario);
  done_ = false;
}

RLState Env::state() const {
  return featurize(sim_->world(), config_.radius, config_.reward.v_des);
}

LonState Env::ego_lon_state() const {
  const auto& ego = sim_->world().ego;
  return {ego.lon_pos, ego.lon_vel, ego.lon_acc};
}

StepResult Env::step(const Action& raw_action) {
  if (done_) {
    throw std::logic_error("Env::step called on a finished episode");
  }
  StepResult res;
  const auto& world = sim_->world();
  const Action a = clamp_action(raw_action, config_.bounds, ego_lon_state(),
                                config_.acc_min, config_.acc_max, world.road);
  res.info.executed = a;

  const auto& ego = world.ego;
  const QuarticProfile lon = solve_longitudinal(
      {ego.lon_pos, ego.lon_vel, ego.lon_acc}, a.a_tv, a.a_lon_d);
  const QuinticProfile lat = solve_lateral(
      {ego.lat_pos, ego.lat_vel, ego.lat_acc}, a.a_lp, a.a_lat_d);
  const Trajectory traj = sample_trajectory(lon, lat);

  const SafetyVerdict verdict =
      check_safety(traj, predict_obstacles(world), world.road, config_.safety);
  if (!verdict.safe) {
    done_ = true;
    res.done = true;
    res.info.fail = true;
    res.info.trajectory_rejected = true;
    res.info.end = verdict.reason == SafetyReason::RoadDeparture
                       ? EpisodeEnd::RoadDeparture
                       : EpisodeEnd::Collision;
    res.reward = compute_reward(traj, true, config_.reward, 0.0);
    res.next = state();
    return res;
  }

  // Execute the first decision period of the trajectory (5 ticks of 0.2 s).
  const auto ticks =
      static_cast<std::size_t>(std::lround(config_.decision_period / traj.dt));
  bool fail = false;
  for (std::size_t i = 1; i <= ticks && !fail; ++i) {
    sim_->step(traj.at(std::min(i, traj.size() - 1)));
    if (detect_collision(sim_->world())) {
      fail = true;
      const auto& e = sim_->world().ego;
      const bool off_road =
          e.lat_pos - 0.5 * e.width < world.road.paved_min() ||
          e.lat_pos + 0.5 * e.width > world.road.paved_max();
      res.info.end =
          off_road ? EpisodeEnd::RoadDeparture : EpisodeEnd::Collision;
    }
  }
  res.info.fail = fail;
  res.reward =
      compute_reward(traj, fail, config_.reward, sim_->world().ego.lon_vel);

  if (fail) {
    done_ = true;
  } else if (sim_->world().ego.lon_pos >= world.road.length) {
    done_ = true;
    res.info.end = EpisodeEnd::RoadEnd;
  } else if (sim_->world().time >= config_.timeout - 1e-9) {
    done_ = true;
    res.info.end = EpisodeEnd::Timeout;
  }
  res.done = done_;
  res.next = state();
  return res;
}

}  // namespace otpl
