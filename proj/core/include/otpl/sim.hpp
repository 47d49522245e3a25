#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otpl/poly_traj.hpp"
#include "otpl/road.hpp"

namespace otpl {

// Intelligent-driver-model parameters plus a cooperativeness weight used by
// the gap-acceptance lane-change rule.
struct DriverParams {
  double v0 = 30.0;      // desired velocity, m/s
  double a = 2.0;        // max acceleration, m/s^2
  double b = 2.0;        // comfortable deceleration, m/s^2
  double delta = 4.0;    // acceleration exponent
  double s0 = 2.0;       // jam distance, m
  double t_hw = 1.2;     // time headway, s
  double politeness = 0.5;
  bool lane_changing = true;  // voluntary lane changes (scripted ones always run)
};

constexpr double kEmergencyDecel = 9.0;  // m/s^2, hard clamp for IDM output

// In-progress lateral lane-change maneuver (rest-to-rest quintic).
struct LaneChangeState {
  bool active = false;
  double start_time = 0.0;
  QuinticProfile profile;
};

struct Vehicle {
  int id = 0;
  int lane = 0;
  double lon_pos = 0.0;
  double lat_pos = 0.0;
  double lon_vel = 0.0;
  double lat_vel = 0.0;
  double lon_acc = 0.0;
  double lat_acc = 0.0;
  double length = 5.0;
  double width = 2.0;
  DriverParams driver;
  LaneChangeState lc;
  double last_lc_end = -1e9;
};

struct WorldState {
  double time = 0.0;
  Vehicle ego;
  std::vector<Vehicle> others;
  Road road;
};

struct ScriptedEvent {
  double t = 0.0;
  int vehicle = 0;
  int target_lane = 0;
};

struct Scenario {
  Road road;
  Vehicle ego;
  std::vector<Vehicle> vehicles;
  std::vector<ScriptedEvent> script;  // times non-decreasing
  std::uint64_t seed = 0;
};

enum class CriticalKind { CutIn, Trapped };

constexpr double kSimDt = 0.2;
constexpr double kLaneChangeDuration = 3.0;

// IDM car-following acceleration. `leader_gap` is bumper-to-bumper; pass
// +infinity (or any non-finite positive) for free flow. Clamped to
// [-kEmergencyDecel, params.a].
double idm_acceleration(double follower_vel, double leader_gap,
                        double leader_vel, const DriverParams& params);

// Advances every surrounding vehicle by one 0.2 s tick (IDM longitudinally,
// scripted / gap-acceptance lane changes laterally) and overwrites the ego
// state with the provided trajectory sample. `due_events` are the scripted
// events that fire on this tick.
void step_world(WorldState& world, const TrajectorySample& ego_next,
                const std::vector<ScriptedEvent>& due_events = {},
                double dt = kSimDt);

// True iff the ego rectangle overlaps any other vehicle rectangle (exact, no
// margin) or the ego footprint exits the paved width.
bool detect_collision(const WorldState& world);

// Owns the world plus the scenario script cursor.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario);

  const WorldState& world() const { return world_; }
  WorldState& world() { return world_; }

  void step(const TrajectorySample& ego_next, double dt = kSimDt);

 private:
  WorldState world_;
  std::vector<ScriptedEvent> script_;
  std::size_t cursor_ = 0;
};

// Random evaluation / data-collection scenario: n_veh IDM vehicles placed
// ahead of the ego with feasible initial gaps, driver parameters drawn per
// vehicle. Deterministic in seed. Throws std::runtime_error when the
// requested density cannot be placed.
Scenario generate_random_scenario(int n_veh, std::uint64_t seed);

// Hand-built critical scenarios: a double cut-in in front of a fast ego, and
// an ego boxed in the middle lane with only the leftmost lane free.
Scenario make_critical_scenario(CriticalKind kind);

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace otpl
