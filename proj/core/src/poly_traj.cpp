#include "otpl/poly_traj.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace otpl {

namespace {

bool all_finite(std::initializer_list<double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

double QuarticProfile::pos(double t) const {
  return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
}
double QuarticProfile::vel(double t) const {
  return c[1] + t * (2 * c[2] + t * (3 * c[3] + t * 4 * c[4]));
}
double QuarticProfile::acc(double t) const {
  return 2 * c[2] + t * (6 * c[3] + t * 12 * c[4]);
}
double QuarticProfile::jerk(double t) const { return 6 * c[3] + 24 * c[4] * t; }

double QuinticProfile::pos(double t) const {
  return c[0] +
         t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
}
double QuinticProfile::vel(double t) const {
  return c[1] +
         t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])));
}
double QuinticProfile::acc(double t) const {
  return 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]));
}
double QuinticProfile::jerk(double t) const {
  return 6 * c[3] + t * (24 * c[4] + t * 60 * c[5]);
}

QuarticProfile solve_longitudinal(const LonState& state, double a_tv,
                                  double a_lon_d) {
  if (!all_finite({state.pos, state.vel, state.acc, a_tv, a_lon_d})) {
    throw std::invalid_argument("solve_longitudinal: non-finite input");
  }
  if (a_lon_d <= 0.0) {
    throw std::invalid_argument("solve_longitudinal: duration must be > 0");
  }
  const double T = a_lon_d;
  QuarticProfile q;
  q.duration = T;
  q.c[0] = state.pos;
  q.c[1] = state.vel;
  q.c[2] = 0.5 * state.acc;
  // Solve for the scaled coefficients c3 = a3 T^3, c4 = a4 T^4 in normalized
  // time tau = t/T, which keeps the 2x2 system well conditioned:
  //   3 c3 + 4 c4 = (a_tv - v0 - acc0 T) T
  //   6 c3 + 12 c4 = -acc0 T^2
  const double d1 = (a_tv - q.c[1] - 2.0 * q.c[2] * T) * T;
  const double d2 = -2.0 * q.c[2] * T * T;
  const double c3 = d1 - d2 / 3.0;
  const double c4 = d2 / 4.0 - d1 / 2.0;
  q.c[3] = c3 / (T * T * T);
  q.c[4] = c4 / (T * T * T * T);
  return q;
}

QuinticProfile solve_lateral(const LatState& state, double a_lp,
                             double a_lat_d) {
  if (!all_finite({state.pos, state.vel, state.acc, a_lp, a_lat_d})) {
    throw std::invalid_argument("solve_lateral: non-finite input");
  }
  if (a_lat_d <= 0.0) {
    throw std::invalid_argument("solve_lateral: duration must be > 0");
  }
  const double T = a_lat_d;
  QuinticProfile q;
  q.duration = T;
  q.c[0] = state.pos;
  q.c[1] = state.vel;
  q.c[2] = 0.5 * state.acc;
  // Normalized-time system for c_k = b_k T^k with terminal velocity and
  // acceleration fixed to zero:
  //    c3 +  c4 +  c5 = p(T) residual
  //   3c3 + 4c4 + 5c5 = v(T) residual
  //   6c3 +12c4 +20c5 = a(T) residual
  const double r1 = a_lp - q.c[0] - q.c[1] * T - q.c[2] * T * T;
  const double r2 = (0.0 - q.c[1] - 2.0 * q.c[2] * T) * T;
  const double r3 = (0.0 - 2.0 * q.c[2]) * T * T;
  const double c3 = 10.0 * r1 - 4.0 * r2 + 0.5 * r3;
  const double c4 = -15.0 * r1 + 7.0 * r2 - r3;
  const double c5 = 6.0 * r1 - 3.0 * r2 + 0.5 * r3;
  const double T3 = T * T * T;
  q.c[3] = c3 / T3;
  q.c[4] = c4 / (T3 * T);
  q.c[5] = c5 / (T3 * T * T);
  return q;
}

TrajectorySample Trajectory::at(std::size_t i) const {
  TrajectorySample s;
  s.t = time_at(i);
  s.lon_pos = lon_pos[i];
  s.lat_pos = lat_pos[i];
  s.lon_vel = lon_vel[i];
  s.lat_vel = lat_vel[i];
  s.lon_acc = lon_acc[i];
  s.lat_acc = lat_acc[i];
  s.lon_jerk = lon_jerk[i];
  s.lat_jerk = lat_jerk[i];
  s.orientation = orientation[i];
  return s;
}

Trajectory sample_trajectory(const QuarticProfile& lon,
                             const QuinticProfile& lat, double dt) {
  if (lon.duration <= 0.0 || lat.duration <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("sample_trajectory: invalid profile/dt");
  }
  const double horizon = std::max(lon.duration, lat.duration);
  const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)) + 1;

  Trajectory traj;
  traj.dt = dt;
  traj.lon_pos.reserve(n);
  traj.lat_pos.reserve(n);
  traj.lon_vel.reserve(n);
  traj.lat_vel.reserve(n);
  traj.lon_acc.reserve(n);
  traj.lat_acc.reserve(n);
  traj.lon_jerk.reserve(n);
  traj.lat_jerk.reserve(n);
  traj.orientation.reserve(n);

  const double lon_end_pos = lon.pos(lon.duration);
  const double lon_end_vel = lon.vel(lon.duration);
  const double lat_end_pos = lat.pos(lat.duration);

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double lp, lv, la, lj;
    if (t <= lon.duration) {
      lp = lon.pos(t);
      lv = lon.vel(t);
      la = lon.acc(t);
      lj = lon.jerk(t);
    } else {
      lp = lon_end_pos + lon_end_vel * (t - lon.duration);
      lv = lon_end_vel;
      la = 0.0;
      lj = 0.0;
    }
    double yp, yv, ya, yj;
    if (t <= lat.duration) {
      yp = lat.pos(t);
      yv = lat.vel(t);
      ya = lat.acc(t);
      yj = lat.jerk(t);
    } else {
      yp = lat_end_pos;
      yv = 0.0;
      ya = 0.0;
      yj = 0.0;
    }
    traj.lon_pos.push_back(lp);
    traj.lat_pos.push_back(yp);
    traj.lon_vel.push_back(lv);
    traj.lat_vel.push_back(yv);
    traj.lon_acc.push_back(la);
    traj.lat_acc.push_back(ya);
    traj.lon_jerk.push_back(lj);
    traj.lat_jerk.push_back(yj);
    traj.orientation.push_back(
        (lv == 0.0 && yv == 0.0) ? 0.0 : std::atan2(yv, lv));
  }
  return traj;
}

namespace {

// Extrema of the (quadratic) acceleration of a quartic over [0, duration].
std::pair<double, double> acc_extrema(const QuarticProfile& q) {
  double lo = std::min(q.acc(0.0), q.acc(q.duration));
  double hi = std::max(q.acc(0.0), q.acc(q.duration));
  if (q.c[4] != 0.0) {
    const double ts = -q.c[3] / (4.0 * q.c[4]);  // root of the jerk
    if (ts > 0.0 && ts < q.duration) {
      const double a = q.acc(ts);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  return {lo, hi};
}

// Monotone bisection: acceleration at any fixed time is nondecreasing in the
// target velocity, so both the max and the min over [0,T] are as well.
double bisect_target(const LonState& state, double T, double limit,
                     bool upper) {
  auto overshoot = [&](double tv) {
    QuarticProfile q;
    // inline solve without input validation (tv may be negative here)
    q.duration = T;
    q.c[0] = state.pos;
    q.c[1] = state.vel;
    q.c[2] = 0.5 * state.acc;
    const double d1 = (tv - q.c[1] - 2.0 * q.c[2] * T) * T;
    const double d2 = -2.0 * q.c[2] * T * T;
    const double c3 = d1 - d2 / 3.0;
    const double c4 = d2 / 4.0 - d1 / 2.0;
    q.c[3] = c3 / (T * T * T);
    q.c[4] = c4 / (T * T * T * T);
    const auto [lo, hi] = acc_extrema(q);
    return upper ? hi - limit : lo - limit;
  };
  // overshoot() is nondecreasing in tv; bracket a sign change around the
  // current velocity.
  double lo = state.vel, hi = state.vel, step = 1.0;
  while (overshoot(lo) > 0.0 && step < 1e6) {
    lo -= step;
    step *= 2.0;
  }
  step = 1.0;
  while (overshoot(hi) < 0.0 && step < 1e6) {
    hi += step;
    step *= 2.0;
  }
  for (int i = 0; i < 120; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (overshoot(mid) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return upper ? lo : hi;
}

}  // namespace

std::pair<double, double> velocity_bounds(const LonState& state,
                                          double a_lon_d, double acc_min,
                                          double acc_max) {
  const double v_max = bisect_target(state, a_lon_d, acc_max, /*upper=*/true);
  double v_min = bisect_target(state, a_lon_d, acc_min, /*upper=*/false);
  v_min = std::max(v_min, 0.0);
  return {std::min(v_min, v_max), std::max(v_min, v_max)};
}

std::pair<double, double> mean_squared_jerk(const Trajectory& traj) {
  if (traj.size() == 0) {
    throw std::invalid_argument("mean_squared_jerk: empty trajectory");
  }
  double lon = 0.0, lat = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    lon += traj.lon_jerk[i] * traj.lon_jerk[i];
    lat += traj.lat_jerk[i] * traj.lat_jerk[i];
  }
  const auto n = static_cast<double>(traj.size());
  return {lon / n, lat / n};
}

SafetyVerdict check_safety(const Trajectory& traj,
                           const std::vector<ObstaclePrediction>& others,
                           const Road& road, const SafetyParams& params) {
  const double half_w = 0.5 * params.ego_width;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.time_at(i);
    const double ex = traj.lon_pos[i];
    const double ey = traj.lat_pos[i];
    if (ey - half_w < road.paved_min() || ey + half_w > road.paved_max()) {
      return {false, SafetyReason::RoadDeparture};
    }
    for (const auto& o : others) {
      const double ox = o.lon_pos + o.lon_vel * t;
      const double dx = 0.5 * (params.ego_length + o.length) + params.margin;
      const double dy = 0.5 * (params.ego_width + o.width) + params.margin;
      if (std::abs(ex - ox) < dx && std::abs(ey - o.lat_pos) < dy) {
        return {false, SafetyReason::PredictedCollision};
      }
    }
  }
  return {true, SafetyReason::Clear};
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  os.precision(12);
  os << "t,lon_pos,lat_pos,lon_vel,lat_vel,lon_acc,lat_acc,lon_jerk,lat_jerk,"
        "orientation\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << traj.time_at(i) << ',' << traj.lon_pos[i] << ',' << traj.lat_pos[i]
       << ',' << traj.lon_vel[i] << ',' << traj.lat_vel[i] << ','
       << traj.lon_acc[i] << ',' << traj.lat_acc[i] << ',' << traj.lon_jerk[i]
       << ',' << traj.lat_jerk[i] << ',' << traj.orientation[i] << '\n';
  }
  return os.str();
}

}  // namespace otpl
