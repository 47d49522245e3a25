#include "otpl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace otpl {

AgentKind agent_kind_from_name(const std::string& name) {
  if (name == "otpl") return AgentKind::Otpl;
  if (name == "random") return AgentKind::Random;
  if (name == "greedy") return AgentKind::Greedy;
  if (name == "idm") return AgentKind::Idm;
  throw std::invalid_argument("unknown agent: " + name);
}

const char* agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::Otpl:
      return "otpl";
    case AgentKind::Random:
      return "random";
    case AgentKind::Greedy:
      return "greedy";
    case AgentKind::Idm:
      return "idm";
  }
  return "?";
}

namespace {

int vehicle_lane(const Vehicle& v, const Road& road) {
  return road.nearest_lane(v.lat_pos);
}

// Vehicles sorted front-to-back that currently occupy `lane`.
std::vector<const Vehicle*> lane_members(const WorldState& world, int lane) {
  std::vector<const Vehicle*> out;
  for (const auto& v : world.others) {
    if (vehicle_lane(v, world.road) == lane || v.lane == lane) {
      out.push_back(&v);
    }
  }
  std::sort(out.begin(), out.end(), [](const Vehicle* a, const Vehicle* b) {
    return a->lon_pos > b->lon_pos;
  });
  return out;
}

const Vehicle* leader_in_lane(const WorldState& world, int lane) {
  const Vehicle* best = nullptr;
  for (const auto& v : world.others) {
    if (vehicle_lane(v, world.road) != lane && v.lane != lane) continue;
    if (v.lon_pos <= world.ego.lon_pos) continue;
    if (!best || v.lon_pos < best->lon_pos) best = &v;
  }
  return best;
}

const Vehicle* follower_in_lane(const WorldState& world, int lane) {
  const Vehicle* best = nullptr;
  for (const auto& v : world.others) {
    if (vehicle_lane(v, world.road) != lane && v.lane != lane) continue;
    if (v.lon_pos > world.ego.lon_pos) continue;
    if (!best || v.lon_pos > best->lon_pos) best = &v;
  }
  return best;
}

LonState ego_lon(const WorldState& world) {
  return {world.ego.lon_pos, world.ego.lon_vel, world.ego.lon_acc};
}

LatState ego_lat(const WorldState& world) {
  return {world.ego.lat_pos, world.ego.lat_vel, world.ego.lat_acc};
}

}  // namespace

std::vector<Gap> enumerate_gaps(const WorldState& world) {
  std::vector<Gap> gaps;
  const int ego_lane = vehicle_lane(world.ego, world.road);

  Gap own;
  own.lane = ego_lane;
  if (const Vehicle* lead = leader_in_lane(world, ego_lane)) {
    own.lead_id = lead->id;
    own.lead_pos = lead->lon_pos;
  }
  gaps.push_back(own);

  for (int lane : {ego_lane + 1, ego_lane - 1}) {
    if (lane < 0 || lane >= world.road.n_lanes) continue;
    const auto members = lane_members(world, lane);
    if (members.empty()) continue;
    Gap g;
    g.lane = lane;
    if (const Vehicle* lead = leader_in_lane(world, lane)) {
      g.lead_id = lead->id;
      g.lead_pos = lead->lon_pos;
    }
    if (const Vehicle* rear = follower_in_lane(world, lane)) {
      g.rear_id = rear->id;
      g.rear_pos = rear->lon_pos;
    }
    gaps.push_back(g);
  }
  return gaps;
}

Action random_act(std::mt19937_64& rng, const LonState& lon,
                  const EnvConfig& cfg) {
  const auto& b = cfg.bounds;
  std::uniform_real_distribution<double> lon_d(b.a_lon_d.lo, b.a_lon_d.hi);
  std::uniform_real_distribution<double> lat_d(b.a_lat_d.lo, b.a_lat_d.hi);
  std::uniform_real_distribution<double> lp(b.a_lp.lo, b.a_lp.hi);
  Action a;
  a.a_lon_d = lon_d(rng);
  a.a_lat_d = lat_d(rng);
  a.a_lp = lp(rng);
  auto [v_lo, v_hi] = velocity_bounds(lon, a.a_lon_d, cfg.acc_min, cfg.acc_max);
  v_lo = std::max(v_lo, b.a_tv.lo);
  v_hi = std::min(v_hi, b.a_tv.hi);
  if (v_hi < v_lo) v_hi = v_lo;
  std::uniform_real_distribution<double> tv(v_lo, v_hi);
  a.a_tv = tv(rng);
  return a;
}

Action idm_act(const WorldState& world, const EnvConfig& cfg) {
  const LonState lon = ego_lon(world);
  const int lane = vehicle_lane(world.ego, world.road);
  double gap = std::numeric_limits<double>::infinity();
  double lead_vel = 0.0;
  if (const Vehicle* lead = leader_in_lane(world, lane)) {
    gap = lead->lon_pos - world.ego.lon_pos -
          0.5 * (lead->length + world.ego.length);
    lead_vel = lead->lon_vel;
  }
  const double acc = idm_acceleration(world.ego.lon_vel, gap, lead_vel,
                                      DriverParams{});
  Action a;
  a.a_lon_d = 2.0;
  a.a_lat_d = 2.0;
  a.a_lp = world.road.lane_center(lane);
  auto [v_lo, v_hi] = velocity_bounds(lon, a.a_lon_d, cfg.acc_min, cfg.acc_max);
  a.a_tv = std::clamp(world.ego.lon_vel + acc * a.a_lon_d,
                      std::max(v_lo, cfg.bounds.a_tv.lo),
                      std::min(v_hi, cfg.bounds.a_tv.hi));
  return a;
}

Action greedy_act(const WorldState& world, const EnvConfig& cfg) {
  const LonState lon = ego_lon(world);
  const LatState lat = ego_lat(world);
  const int ego_lane = vehicle_lane(world.ego, world.road);
  const auto obstacles = predict_obstacles(world);
  const auto gaps = enumerate_gaps(world);

  constexpr double kLonDurations[] = {2.0, 4.0, 6.0};
  constexpr double kLatDurations[] = {2.0, 3.0};
  constexpr int kVelocitySteps = 5;

  bool found = false;
  Action best;
  double best_tv = -1.0;
  double best_msj = std::numeric_limits<double>::infinity();
  bool best_keep = false;

  for (const auto& gap : gaps) {
    const double target_lat = world.road.lane_center(gap.lane);
    const bool keep = gap.lane == ego_lane;
    for (double lon_d : kLonDurations) {
      auto [v_lo, v_hi] =
          velocity_bounds(lon, lon_d, cfg.acc_min, cfg.acc_max);
      v_lo = std::max(v_lo, cfg.bounds.a_tv.lo);
      v_hi = std::min(v_hi, cfg.bounds.a_tv.hi);
      if (v_hi < v_lo) continue;
      for (int k = 0; k < kVelocitySteps; ++k) {
        const double tv =
            v_lo + (v_hi - v_lo) * k / double(kVelocitySteps - 1);
        for (double lat_d : kLatDurations) {
          const auto lon_prof = solve_longitudinal(lon, tv, lon_d);
          const auto lat_prof = solve_lateral(lat, target_lat, lat_d);
          const auto traj = sample_trajectory(lon_prof, lat_prof, kSimDt);
          if (!check_safety(traj, obstacles, world.road, cfg.safety).safe) {
            continue;
          }
          const auto [msj_lon, msj_lat] = mean_squared_jerk(traj);
          const double msj = msj_lon + msj_lat;
          const bool better =
              tv > best_tv + 1e-9 ||
              (tv > best_tv - 1e-9 &&
               (msj < best_msj - 1e-9 ||
                (msj < best_msj + 1e-9 && keep && !best_keep)));
          if (better) {
            found = true;
            best = {tv, lon_d, lat_d, target_lat};
            best_tv = tv;
            best_msj = msj;
            best_keep = keep;
          }
        }
      }
    }
  }
  if (found) return best;

  // Nothing passed the check; brake as hard as the profile allows in lane.
  Action brake;
  brake.a_lon_d = 2.0;
  brake.a_lat_d = 2.0;
  brake.a_lp = world.road.lane_center(ego_lane);
  auto [v_lo, v_hi] =
      velocity_bounds(lon, brake.a_lon_d, cfg.acc_min, cfg.acc_max);
  brake.a_tv = std::max(v_lo, cfg.bounds.a_tv.lo);
  return brake;
}

Action otpl_act(const TrainedAgent& agent, const WorldState& world,
                const EnvConfig& cfg) {
  const RLState s = featurize(world, cfg.radius, cfg.reward.v_des);
  const Action raw = agent.act(s);
  return clamp_action(raw, cfg.bounds, ego_lon(world), cfg.acc_min,
                      cfg.acc_max, world.road);
}

}  // namespace otpl
