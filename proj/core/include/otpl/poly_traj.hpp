#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "otpl/road.hpp"

namespace otpl {

// Current longitudinal motion state of a vehicle (position, velocity >= 0,
// acceleration), all SI units.
struct LonState {
  double pos = 0.0;
  double vel = 0.0;
  double acc = 0.0;
};

// Current lateral motion state.
struct LatState {
  double pos = 0.0;
  double vel = 0.0;
  double acc = 0.0;
};

// Fourth-order longitudinal position polynomial p(t) = sum c[k] t^k valid on
// [0, duration]. Built so that v(duration) equals the requested target
// velocity and a(duration) == 0.
struct QuarticProfile {
  std::array<double, 5> c{};
  double duration = 0.0;

  double pos(double t) const;
  double vel(double t) const;
  double acc(double t) const;
  double jerk(double t) const;
};

// Fifth-order lateral position polynomial, p(duration) equals the target
// lateral position with zero terminal velocity and acceleration.
struct QuinticProfile {
  std::array<double, 6> c{};
  double duration = 0.0;

  double pos(double t) const;
  double vel(double t) const;
  double acc(double t) const;
  double jerk(double t) const;
};

struct TrajectorySample {
  double t = 0.0;
  double lon_pos = 0.0, lat_pos = 0.0;
  double lon_vel = 0.0, lat_vel = 0.0;
  double lon_acc = 0.0, lat_acc = 0.0;
  double lon_jerk = 0.0, lat_jerk = 0.0;
  double orientation = 0.0;
};

// Time-sampled trajectory at fixed dt. Derivative columns are the exact
// analytic derivatives of the generating polynomials. Past each profile's own
// duration samples hold the terminal boundary values (constant velocity
// longitudinally, constant position laterally).
struct Trajectory {
  double dt = 0.2;
  std::vector<double> lon_pos, lat_pos;
  std::vector<double> lon_vel, lat_vel;
  std::vector<double> lon_acc, lat_acc;
  std::vector<double> lon_jerk, lat_jerk;
  std::vector<double> orientation;

  std::size_t size() const { return lon_pos.size(); }
  double time_at(std::size_t i) const { return static_cast<double>(i) * dt; }
  TrajectorySample at(std::size_t i) const;
};

enum class SafetyReason { Clear, PredictedCollision, RoadDeparture };

struct SafetyVerdict {
  bool safe = true;
  SafetyReason reason = SafetyReason::Clear;
};

// Surrounding vehicle as seen by the safety check; predicted at constant
// longitudinal velocity, constant lateral position.
struct ObstaclePrediction {
  double lon_pos = 0.0;
  double lat_pos = 0.0;
  double lon_vel = 0.0;
  double length = 5.0;
  double width = 2.0;
};

struct SafetyParams {
  double ego_length = 5.0;
  double ego_width = 2.0;
  double margin = 0.5;  // inflation of the ego rectangle, per side
};

// Solves the quartic boundary-value problem: p,v,a at t=0 from `state`,
// v(a_lon_d)=a_tv, a(a_lon_d)=0. Throws std::invalid_argument on non-finite
// inputs or a_lon_d <= 0.
QuarticProfile solve_longitudinal(const LonState& state, double a_tv,
                                  double a_lon_d);

// Solves the quintic boundary-value problem: p,v,a at t=0 from `state`,
// p(a_lat_d)=a_lp, v(a_lat_d)=0, a(a_lat_d)=0.
QuinticProfile solve_lateral(const LatState& state, double a_lp,
                             double a_lat_d);

// Samples both profiles at t = 0, dt, 2dt, ... covering
// max(lon.duration, lat.duration). Orientation is atan2(lat_vel, lon_vel).
Trajectory sample_trajectory(const QuarticProfile& lon,
                             const QuinticProfile& lat, double dt = 0.2);

// Feasible target-velocity interval for solve_longitudinal such that the
// resulting quartic's acceleration stays within [acc_min, acc_max] over the
// whole profile. The lower bound is clamped to zero.
std::pair<double, double> velocity_bounds(const LonState& state,
                                          double a_lon_d, double acc_min,
                                          double acc_max);

// Mean of squared jerk per axis over the trajectory samples, (m/s^3)^2.
std::pair<double, double> mean_squared_jerk(const Trajectory& traj);

// Collision / road-departure prediction for the full trajectory horizon.
SafetyVerdict check_safety(const Trajectory& traj,
                           const std::vector<ObstaclePrediction>& others,
                           const Road& road, const SafetyParams& params = {});

// Debug dump, one sample per row:
// t,lon_pos,lat_pos,lon_vel,lat_vel,lon_acc,lat_acc,lon_jerk,lat_jerk,orientation
std::string trajectory_csv(const Trajectory& traj);

}  // namespace otpl
