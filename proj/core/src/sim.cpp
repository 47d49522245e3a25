#include "otpl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace otpl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLcCooldown = 5.0;   // s between voluntary lane changes
constexpr double kLcIncentive = 0.2;  // m/s^2 advantage needed to change lane

// A vehicle occupies its registered (target) lane and, while laterally in
// between, also the lane its body is currently closest to.
bool occupies(const Vehicle& v, int lane, const Road& road) {
  return v.lane == lane || road.nearest_lane(v.lat_pos) == lane;
}

struct Neighbor {
  const Vehicle* veh = nullptr;
  double gap = kInf;  // bumper-to-bumper
};

Neighbor find_leader(const WorldState& w, double lon_pos, double length,
                     int lane, int skip_id) {
  Neighbor best;
  auto consider = [&](const Vehicle& v, bool is_ego) {
    if (!is_ego && v.id == skip_id) return;
    if (is_ego) {
      if (w.road.nearest_lane(v.lat_pos) != lane) return;
    } else if (!occupies(v, lane, w.road)) {
      return;
    }
    const double gap = v.lon_pos - lon_pos - 0.5 * (length + v.length);
    if (v.lon_pos > lon_pos && gap < best.gap) best = {&v, gap};
  };
  for (const auto& v : w.others) consider(v, false);
  consider(w.ego, true);
  return best;
}

Neighbor find_follower(const WorldState& w, double lon_pos, double length,
                       int lane, int skip_id) {
  Neighbor best;
  auto consider = [&](const Vehicle& v, bool is_ego) {
    if (!is_ego && v.id == skip_id) return;
    if (is_ego) {
      if (w.road.nearest_lane(v.lat_pos) != lane) return;
    } else if (!occupies(v, lane, w.road)) {
      return;
    }
    const double gap = lon_pos - v.lon_pos - 0.5 * (length + v.length);
    if (v.lon_pos < lon_pos && gap < best.gap) best = {&v, gap};
  };
  for (const auto& v : w.others) consider(v, false);
  consider(w.ego, true);
  return best;
}

double idm_of(const WorldState& w, const Vehicle& v, int lane) {
  const Neighbor lead = find_leader(w, v.lon_pos, v.length, lane, v.id);
  const double lead_vel = lead.veh ? lead.veh->lon_vel : 0.0;
  return idm_acceleration(v.lon_vel, lead.gap, lead_vel, v.driver);
}

void start_lane_change(Vehicle& v, int target_lane, double now,
                       const Road& road) {
  LatState lat{v.lat_pos, v.lat_vel, v.lat_acc};
  v.lc.active = true;
  v.lc.start_time = now;
  v.lc.profile =
      solve_lateral(lat, road.lane_center(target_lane), kLaneChangeDuration);
  v.lane = target_lane;
}

// MOBIL-style politeness-weighted gap acceptance for voluntary lane changes.
bool wants_lane_change(const WorldState& w, const Vehicle& v, int target) {
  if (!v.driver.lane_changing) return false;
  if (target < 0 || target >= w.road.n_lanes) return false;
  const Neighbor new_lead = find_leader(w, v.lon_pos, v.length, target, v.id);
  const Neighbor new_follow =
      find_follower(w, v.lon_pos, v.length, target, v.id);

  // Both new-lane neighbors must be left with a full desired gap.
  if (new_lead.gap < v.driver.s0 + v.lon_vel * v.driver.t_hw) return false;
  if (new_follow.veh) {
    const auto& f = *new_follow.veh;
    if (new_follow.gap < f.driver.s0 + f.lon_vel * f.driver.t_hw) return false;
  }

  const double a_cur = idm_of(w, v, v.lane);
  const double new_lead_vel = new_lead.veh ? new_lead.veh->lon_vel : 0.0;
  const double a_new =
      idm_acceleration(v.lon_vel, new_lead.gap, new_lead_vel, v.driver);

  double follower_loss = 0.0;
  if (new_follow.veh) {
    const auto& f = *new_follow.veh;
    const double before = idm_of(w, f, target);
    const double after = idm_acceleration(
        f.lon_vel, new_follow.gap, v.lon_vel, f.driver);
    follower_loss = std::max(0.0, before - after);
  }
  return a_new - a_cur > kLcIncentive + v.driver.politeness * follower_loss;
}

}  // namespace

double idm_acceleration(double follower_vel, double leader_gap,
                        double leader_vel, const DriverParams& params) {
  const double v = std::max(follower_vel, 0.0);
  double acc = params.a * (1.0 - std::pow(v / params.v0, params.delta));
  if (std::isfinite(leader_gap)) {
    if (leader_gap <= 0.0) {
      return -kEmergencyDecel;
    }
    const double dv = v - leader_vel;
    const double s_star =
        params.s0 +
        std::max(0.0, v * params.t_hw +
                          v * dv / (2.0 * std::sqrt(params.a * params.b)));
    acc -= params.a * (s_star / leader_gap) * (s_star / leader_gap);
  }
  return std::clamp(acc, -kEmergencyDecel, params.a);
}

void step_world(WorldState& world, const TrajectorySample& ego_next,
                const std::vector<ScriptedEvent>& due_events, double dt) {
  // Scripted lane changes fire first and bypass the acceptance test.
  for (const auto& ev : due_events) {
    for (auto& v : world.others) {
      if (v.id == ev.vehicle && !v.lc.active) {
        start_lane_change(v, std::clamp(ev.target_lane, 0,
                                        world.road.n_lanes - 1),
                          world.time, world.road);
      }
    }
  }

  // Voluntary lane changes, decided on the pre-step state in storage order.
  for (auto& v : world.others) {
    if (v.lc.active) continue;
    if (world.time - v.last_lc_end < kLcCooldown) continue;
    bool scripted = false;
    for (const auto& ev : due_events) scripted |= (ev.vehicle == v.id);
    if (scripted) continue;
    for (int target : {v.lane + 1, v.lane - 1}) {
      if (target < 0 || target >= world.road.n_lanes) continue;
      if (wants_lane_change(world, v, target)) {
        start_lane_change(v, target, world.time, world.road);
        break;
      }
    }
  }

  // Synchronous IDM update: accelerations from the pre-step state.
  std::vector<double> accel(world.others.size());
  for (std::size_t i = 0; i < world.others.size(); ++i) {
    accel[i] = idm_of(world, world.others[i], world.others[i].lane);
  }
  const double next_time = world.time + dt;
  for (std::size_t i = 0; i < world.others.size(); ++i) {
    auto& v = world.others[i];
    v.lon_acc = accel[i];
    v.lon_vel = std::max(0.0, v.lon_vel + accel[i] * dt);
    v.lon_pos += v.lon_vel * dt;
    if (v.lc.active) {
      const double elapsed = next_time - v.lc.start_time;
      if (elapsed >= v.lc.profile.duration) {
        v.lat_pos = v.lc.profile.pos(v.lc.profile.duration);
        v.lat_vel = 0.0;
        v.lat_acc = 0.0;
        v.lc.active = false;
        v.last_lc_end = next_time;
      } else {
        v.lat_pos = v.lc.profile.pos(elapsed);
        v.lat_vel = v.lc.profile.vel(elapsed);
        v.lat_acc = v.lc.profile.acc(elapsed);
      }
    }
  }

  // Ego is pure trajectory playback.
  world.ego.lon_pos = ego_next.lon_pos;
  world.ego.lat_pos = ego_next.lat_pos;
  world.ego.lon_vel = ego_next.lon_vel;
  world.ego.lat_vel = ego_next.lat_vel;
  world.ego.lon_acc = ego_next.lon_acc;
  world.ego.lat_acc = ego_next.lat_acc;
  world.ego.lane = world.road.nearest_lane(world.ego.lat_pos);
  world.time = next_time;
}

bool detect_collision(const WorldState& world) {
  const auto& e = world.ego;
  const double half_w = 0.5 * e.width;
  if (e.lat_pos - half_w < world.road.paved_min() ||
      e.lat_pos + half_w > world.road.paved_max()) {
    return true;
  }
  for (const auto& v : world.others) {
    if (std::abs(e.lon_pos - v.lon_pos) < 0.5 * (e.length + v.length) &&
        std::abs(e.lat_pos - v.lat_pos) < 0.5 * (e.width + v.width)) {
      return true;
    }
  }
  return false;
}

Simulation::Simulation(const Scenario& scenario) : script_(scenario.script) {
  world_.time = 0.0;
  world_.road = scenario.road;
  world_.ego = scenario.ego;
  world_.others = scenario.vehicles;
}

void Simulation::step(const TrajectorySample& ego_next, double dt) {
  std::vector<ScriptedEvent> due;
  while (cursor_ < script_.size() && script_[cursor_].t <= world_.time + 1e-9) {
    due.push_back(script_[cursor_]);
    ++cursor_;
  }
  step_world(world_, ego_next, due, dt);
}

Scenario generate_random_scenario(int n_veh, std::uint64_t seed) {
  if (n_veh < 0) throw std::invalid_argument("n_veh must be >= 0");
  std::mt19937_64 rng(seed);
  Scenario sc;
  sc.seed = seed;
  sc.road = Road{};
  sc.ego.id = 0;
  sc.ego.lane = 1;
  sc.ego.lon_pos = 0.0;
  sc.ego.lat_pos = sc.road.lane_center(1);
  sc.ego.lon_vel = 25.0;

  // Denser packs drive slower, which keeps the per-lane queues (each vehicle
  // granted at least its own desired gap) inside the road even at 80 cars.
  const double v_lo = std::max(12.0, 28.0 - 0.2 * n_veh);
  const double v_hi = std::max(v_lo + 2.0, 33.0 - 0.2 * n_veh);

  std::uniform_real_distribution<double> v0_dist(22.0, 33.0);
  std::uniform_real_distribution<double> pol_dist(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  std::uniform_real_distribution<double> vel_dist(v_lo, v_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> offset_dist(0, sc.road.n_lanes - 1);

  auto desired_gap = [](const Vehicle& follower) {
    return follower.driver.s0 + follower.lon_vel * follower.driver.t_hw;
  };

  std::vector<Vehicle> drafted;
  for (int i = 0; i < n_veh; ++i) {
    Vehicle v;
    v.id = i + 1;
    v.driver.v0 = v0_dist(rng);
    v.driver.politeness = pol_dist(rng);
    v.driver.a = 2.0 * jitter(rng);
    v.driver.b = 2.0 * jitter(rng);
    v.driver.delta = 4.0 * jitter(rng);
    v.driver.s0 = 2.0 * jitter(rng);
    v.driver.t_hw = 1.2 * jitter(rng);
    v.lon_vel = std::min(v.driver.v0, vel_dist(rng));
    drafted.push_back(v);
  }

  // Balanced lane assignment, then back-to-front placement per lane with the
  // follower's desired gap plus random slack sized so the queue always fits.
  const int lane_offset = offset_dist(rng);
  Vehicle ego_probe = sc.ego;
  for (auto& v : drafted) {
    v.lane = (v.id - 1 + lane_offset) % sc.road.n_lanes;
    v.lat_pos = sc.road.lane_center(v.lane);
  }
  for (int lane = 0; lane < sc.road.n_lanes; ++lane) {
    std::vector<Vehicle*> members;
    for (auto& v : drafted) {
      if (v.lane == lane) members.push_back(&v);
    }
    if (members.empty()) continue;

    const Vehicle* behind = lane == sc.ego.lane ? &ego_probe : nullptr;
    double frontier = behind ? sc.ego.lon_pos + 0.5 * sc.ego.length
                             : 15.0 + 10.0 * unit(rng);
    double required = 0.0;
    const Vehicle* prev = behind;
    for (const Vehicle* m : members) {
      required += (prev ? desired_gap(*prev) : 0.0) + m->length;
      prev = m;
    }
    const double slack_max =
        std::max(0.0, (sc.road.length - 30.0 - frontier - required) /
                          static_cast<double>(members.size()));
    prev = behind;
    for (Vehicle* m : members) {
      const double gap =
          (prev ? desired_gap(*prev) : 0.0) + slack_max * unit(rng);
      m->lon_pos = frontier + gap + 0.5 * m->length;
      frontier = m->lon_pos + 0.5 * m->length;
      prev = m;
    }
    if (frontier > sc.road.length - 25.0) {
      throw std::runtime_error(
          "generate_random_scenario: density does not fit on the road");
    }
  }
  for (const auto& v : drafted) sc.vehicles.push_back(v);
  return sc;
}

Scenario make_critical_scenario(CriticalKind kind) {
  Scenario sc;
  sc.road = Road{};
  sc.ego.id = 0;
  sc.ego.lane = 1;
  sc.ego.lat_pos = sc.road.lane_center(1);

  auto make_vehicle = [&](int id, int lane, double lon, double vel,
                          DriverParams driver) {
    Vehicle v;
    v.id = id;
    v.lane = lane;
    v.lon_pos = lon;
    v.lat_pos = sc.road.lane_center(lane);
    v.lon_vel = vel;
    v.driver = driver;
    return v;
  };

  if (kind == CriticalKind::CutIn) {
    sc.seed = 1001;
    sc.ego.lon_pos = 0.0;
    sc.ego.lon_vel = 30.0;
    DriverParams d1;
    d1.v0 = 26.0;
    d1.lane_changing = false;
    sc.vehicles.push_back(make_vehicle(1, 2, 30.0, 26.0, d1));
    DriverParams d2;
    d2.v0 = 22.0;
    d2.lane_changing = false;
    sc.vehicles.push_back(make_vehicle(2, 0, 40.0, 22.0, d2));
    DriverParams d3;
    d3.v0 = 23.0;
    d3.lane_changing = false;
    sc.vehicles.push_back(make_vehicle(3, 0, 90.0, 23.0, d3));
    sc.script.push_back({2.0, 2, 1});
    sc.script.push_back({8.0, 2, 2});
  } else {
    sc.seed = 1002;
    sc.ego.lon_pos = 100.0;
    sc.ego.lon_vel = 24.0;
    DriverParams steady;
    steady.v0 = 24.0;
    steady.lane_changing = false;
    DriverParams tail;  // boxed-in followers track with a short headway
    tail.v0 = 25.0;
    tail.s0 = 0.5;
    tail.t_hw = 0.05;
    tail.lane_changing = false;
    // Boxed: leader ahead and tail close behind in the ego lane, and a platoon
    // filling the right lane across the whole stretch the ego can reach inside
    // its own gap. Only the leftmost lane is free.
    sc.vehicles.push_back(make_vehicle(1, 1, 130.0, 24.0, steady));
    sc.vehicles.push_back(make_vehicle(2, 1, 84.0, 24.0, tail));
    sc.vehicles.push_back(make_vehicle(3, 0, 127.0, 24.0, steady));
    sc.vehicles.push_back(make_vehicle(4, 0, 116.0, 24.0, tail));
    sc.vehicles.push_back(make_vehicle(5, 0, 105.0, 24.0, tail));
    sc.vehicles.push_back(make_vehicle(6, 0, 94.0, 24.0, tail));
  }
  return sc;
}

namespace {

using json = nlohmann::ordered_json;

json driver_to_json(const DriverParams& d) {
  return json{{"v0", d.v0},           {"a", d.a},
              {"b", d.b},             {"delta", d.delta},
              {"s0", d.s0},           {"t_hw", d.t_hw},
              {"politeness", d.politeness},
              {"lane_changing", d.lane_changing}};
}

DriverParams driver_from_json(const json& j) {
  DriverParams d;
  d.v0 = j.at("v0");
  d.a = j.at("a");
  d.b = j.at("b");
  d.delta = j.at("delta");
  d.s0 = j.at("s0");
  d.t_hw = j.at("t_hw");
  d.politeness = j.at("politeness");
  d.lane_changing = j.value("lane_changing", true);
  return d;
}

void validate_scenario(const Scenario& sc) {
  std::vector<int> ids;
  auto check_vehicle = [&](const Vehicle& v) {
    if (v.lane < 0 || v.lane >= sc.road.n_lanes) {
      throw std::runtime_error("scenario: lane index out of range");
    }
    if (v.lat_pos < sc.road.paved_min() || v.lat_pos > sc.road.paved_max()) {
      throw std::runtime_error("scenario: lateral position off the road");
    }
    if (v.lon_vel < 0.0) throw std::runtime_error("scenario: negative speed");
    ids.push_back(v.id);
  };
  check_vehicle(sc.ego);
  for (const auto& v : sc.vehicles) check_vehicle(v);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::runtime_error("scenario: duplicate vehicle id");
  }
  auto overlap = [](const Vehicle& a, const Vehicle& b) {
    return std::abs(a.lon_pos - b.lon_pos) < 0.5 * (a.length + b.length) &&
           std::abs(a.lat_pos - b.lat_pos) < 0.5 * (a.width + b.width);
  };
  for (std::size_t i = 0; i < sc.vehicles.size(); ++i) {
    if (overlap(sc.ego, sc.vehicles[i])) {
      throw std::runtime_error("scenario: overlapping initial placement");
    }
    for (std::size_t k = i + 1; k < sc.vehicles.size(); ++k) {
      if (overlap(sc.vehicles[i], sc.vehicles[k])) {
        throw std::runtime_error("scenario: overlapping initial placement");
      }
    }
  }
  for (std::size_t i = 1; i < sc.script.size(); ++i) {
    if (sc.script[i].t < sc.script[i - 1].t) {
      throw std::runtime_error("scenario: script times must be non-decreasing");
    }
  }
}

}  // namespace

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["format_version"] = 1;
  j["seed"] = sc.seed;
  j["road"] = {{"lanes", sc.road.n_lanes},
               {"lane_width", sc.road.lane_width},
               {"length", sc.road.length}};
  j["ego"] = {{"lane", sc.ego.lane},
              {"lon_pos", sc.ego.lon_pos},
              {"lat_pos", sc.ego.lat_pos},
              {"vel", sc.ego.lon_vel}};
  j["vehicles"] = json::array();
  for (const auto& v : sc.vehicles) {
    j["vehicles"].push_back({{"id", v.id},
                             {"lane", v.lane},
                             {"lon_pos", v.lon_pos},
                             {"lat_pos", v.lat_pos},
                             {"vel", v.lon_vel},
                             {"driver", driver_to_json(v.driver)}});
  }
  j["script"] = json::array();
  for (const auto& ev : sc.script) {
    j["script"].push_back(
        {{"t", ev.t}, {"vehicle", ev.vehicle}, {"target_lane", ev.target_lane}});
  }
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format_version", 0) != 1) {
    throw std::runtime_error("scenario: unsupported format version");
  }
  Scenario sc;
  sc.seed = j.at("seed");
  sc.road.n_lanes = j.at("road").at("lanes");
  sc.road.lane_width = j.at("road").at("lane_width");
  sc.road.length = j.at("road").at("length");
  sc.ego.id = 0;
  sc.ego.lane = j.at("ego").at("lane");
  sc.ego.lon_pos = j.at("ego").at("lon_pos");
  sc.ego.lat_pos = j.at("ego").value("lat_pos",
                                     sc.road.lane_center(sc.ego.lane));
  sc.ego.lon_vel = j.at("ego").at("vel");
  for (const auto& jv : j.at("vehicles")) {
    Vehicle v;
    v.id = jv.at("id");
    v.lane = jv.at("lane");
    v.lon_pos = jv.at("lon_pos");
    v.lat_pos = jv.value("lat_pos", sc.road.lane_center(v.lane));
    v.lon_vel = jv.at("vel");
    v.driver = driver_from_json(jv.at("driver"));
    sc.vehicles.push_back(v);
  }
  if (j.contains("script")) {
    for (const auto& je : j.at("script")) {
      sc.script.push_back({je.at("t"), je.at("vehicle"), je.at("target_lane")});
    }
  }
  validate_scenario(sc);
  return sc;
}

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << scenario_to_json(sc);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return scenario_from_json(text);
}

}  // namespace otpl
