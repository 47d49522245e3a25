#include "otpl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "doctest.h"
#include "otpl/poly_traj.hpp"

using namespace otpl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TrajectorySample cruise_sample(double lon_pos, double lat_pos, double vel) {
  TrajectorySample s;
  s.lon_pos = lon_pos;
  s.lat_pos = lat_pos;
  s.lon_vel = vel;
  return s;
}

Vehicle plain_vehicle(int id, int lane, double lon, double vel,
                      DriverParams driver = {}) {
  Vehicle v;
  v.id = id;
  v.lane = lane;
  v.lon_pos = lon;
  v.lat_pos = Road{}.lane_center(lane);
  v.lon_vel = vel;
  v.driver = driver;
  return v;
}

}  // namespace

TEST_CASE("idm acceleration closed forms") {
  DriverParams d;
  CHECK(std::abs(idm_acceleration(30.0, kInf, 0.0, d)) <= 1e-12);
  CHECK(idm_acceleration(0.0, kInf, 0.0, d) ==
        doctest::Approx(d.a).epsilon(1e-12));

  const double two_thirds = 20.0 / 30.0;
  const double expected = 2.0 * (1.0 - std::pow(two_thirds, 4.0));
  CHECK(idm_acceleration(20.0, kInf, 0.0, d) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.6049).epsilon(1e-4));

  // Emergency clamp when the gap is nearly closed at high closure speed.
  CHECK(idm_acceleration(30.0, 0.5, 0.0, d) >= -kEmergencyDecel - 1e-12);
  CHECK(idm_acceleration(0.0, kInf, 0.0, d) <= d.a + 1e-12);
}

TEST_CASE("free vehicle at its desired velocity keeps it") {
  Scenario sc;
  sc.ego = plain_vehicle(0, 2, 0.0, 25.0);
  DriverParams d;
  d.v0 = 27.0;
  sc.vehicles.push_back(plain_vehicle(1, 0, 50.0, 27.0, d));
  Simulation sim(sc);
  double ego_lon = 0.0;
  for (int i = 0; i < 100; ++i) {
    ego_lon += 25.0 * kSimDt;
    sim.step(cruise_sample(ego_lon, sc.road.lane_center(2), 25.0));
  }
  CHECK(std::abs(sim.world().others[0].lon_vel - 27.0) <= 1e-12);
}

TEST_CASE("follower converges to a stationary gap behind a steady leader") {
  Scenario sc;
  sc.ego = plain_vehicle(0, 2, 0.0, 25.0);
  DriverParams steady;
  steady.v0 = 25.0;
  steady.lane_changing = false;
  DriverParams chaser;  // wants 30 but is stuck behind 25
  chaser.lane_changing = false;
  sc.vehicles.push_back(plain_vehicle(1, 0, 100.0, 25.0, steady));
  sc.vehicles.push_back(plain_vehicle(2, 0, 40.0, 20.0, chaser));
  Simulation sim(sc);
  double ego_lon = 0.0;
  const int steps = static_cast<int>(300.0 / kSimDt);
  for (int i = 0; i < steps; ++i) {
    ego_lon += 25.0 * kSimDt;
    sim.step(cruise_sample(ego_lon, sc.road.lane_center(2), 25.0));
  }
  const Vehicle& follower = sim.world().others[1];
  CHECK(std::abs(follower.lon_acc) < 1e-6);
  CHECK(follower.lon_vel == doctest::Approx(25.0).epsilon(1e-6));
}

TEST_CASE("scripted lane change runs a 3 s quintic to the lane center") {
  Scenario sc;
  sc.ego = plain_vehicle(0, 2, 0.0, 25.0);
  DriverParams d;
  d.v0 = 24.0;
  d.lane_changing = false;
  sc.vehicles.push_back(plain_vehicle(2, 0, 60.0, 24.0, d));
  sc.script.push_back({5.0, 2, 1});
  Simulation sim(sc);

  double ego_lon = 0.0;
  auto tick = [&] {
    ego_lon += 25.0 * kSimDt;
    sim.step(cruise_sample(ego_lon, sc.road.lane_center(2), 25.0));
  };
  while (sim.world().time < 5.0 - 1e-9) tick();
  CHECK(std::abs(sim.world().others[0].lat_pos - 0.0) <= 1e-12);
  // Mid-maneuver the vehicle is between the lane centers.
  while (sim.world().time < 6.4 - 1e-9) tick();
  CHECK(sim.world().others[0].lat_pos > 0.1);
  CHECK(sim.world().others[0].lat_pos < 3.4);
  while (sim.world().time < 8.0 + kSimDt - 1e-9) tick();
  CHECK(std::abs(sim.world().others[0].lat_pos - 3.5) <= 1e-9);
  CHECK(sim.world().others[0].lane == 1);
}

TEST_CASE("ego playback reproduces the trajectory sample exactly") {
  Scenario sc;
  sc.ego = plain_vehicle(0, 1, 0.0, 20.0);
  Simulation sim(sc);
  QuarticProfile lon = solve_longitudinal({0.0, 20.0, 0.0}, 30.0, 4.0);
  QuinticProfile lat = solve_lateral({3.5, 0.0, 0.0}, 7.0, 3.0);
  Trajectory traj = sample_trajectory(lon, lat);
  for (std::size_t i = 1; i <= 5; ++i) sim.step(traj.at(i));

  const Vehicle& ego = sim.world().ego;
  TrajectorySample want = traj.at(5);
  CHECK(ego.lon_pos == want.lon_pos);
  CHECK(ego.lat_pos == want.lat_pos);
  CHECK(ego.lon_vel == want.lon_vel);
  CHECK(ego.lat_vel == want.lat_vel);
  CHECK(ego.lon_acc == want.lon_acc);
  CHECK(ego.lat_acc == want.lat_acc);
  CHECK(sim.world().time == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("collision detection rectangle arithmetic") {
  WorldState w;
  w.ego = plain_vehicle(0, 1, 0.0, 25.0);
  CHECK_FALSE(detect_collision(w));

  w.others.push_back(plain_vehicle(1, 1, 5.01, 25.0));
  CHECK_FALSE(detect_collision(w));
  w.others[0].lon_pos = 4.99;
  CHECK(detect_collision(w));

  w.others[0] = w.ego;
  w.others[0].id = 1;
  CHECK(detect_collision(w));

  w.others.clear();
  w.ego.lat_pos = Road{}.paved_max() + 0.1;
  CHECK(detect_collision(w));
}

TEST_CASE("no vehicle teleports") {
  Scenario sc = generate_random_scenario(40, 77);
  Simulation sim(sc);
  std::map<int, double> prev_pos, prev_vel;
  for (const auto& v : sim.world().others) {
    prev_pos[v.id] = v.lon_pos;
    prev_vel[v.id] = v.lon_vel;
  }
  double ego_lon = sc.ego.lon_pos;
  for (int i = 0; i < 150; ++i) {
    ego_lon += sc.ego.lon_vel * kSimDt;
    sim.step(cruise_sample(ego_lon, sc.ego.lat_pos, sc.ego.lon_vel));
    for (const auto& v : sim.world().others) {
      const double bound =
          (prev_vel[v.id] + v.driver.a * kSimDt) * kSimDt + 1e-9;
      CHECK(v.lon_pos - prev_pos[v.id] <= bound);
      CHECK(v.lon_pos >= prev_pos[v.id] - 1e-9);
      prev_pos[v.id] = v.lon_pos;
      prev_vel[v.id] = v.lon_vel;
    }
  }
}

TEST_CASE("random scenario generation") {
  SUBCASE("deterministic in seed") {
    Scenario a = generate_random_scenario(30, 42);
    Scenario b = generate_random_scenario(30, 42);
    CHECK(scenario_to_json(a) == scenario_to_json(b));
    Scenario c = generate_random_scenario(30, 43);
    CHECK(scenario_to_json(a) != scenario_to_json(c));
  }

  SUBCASE("ego starts mid-lane at 25 at the rear of the pack") {
    Scenario sc = generate_random_scenario(20, 7);
    CHECK(sc.ego.lane == 1);
    CHECK(sc.ego.lon_vel == doctest::Approx(25.0));
    CHECK(static_cast<int>(sc.vehicles.size()) == 20);
    for (const auto& v : sc.vehicles) {
      if (v.lane == sc.ego.lane) CHECK(v.lon_pos > sc.ego.lon_pos);
    }
  }

  SUBCASE("initial bumper gaps respect the follower's desired headway") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      Scenario sc = generate_random_scenario(60, seed);
      for (int lane = 0; lane < 3; ++lane) {
        std::vector<const Vehicle*> in_lane;
        if (sc.ego.lane == lane) in_lane.push_back(&sc.ego);
        for (const auto& v : sc.vehicles) {
          if (v.lane == lane) in_lane.push_back(&v);
        }
        std::sort(in_lane.begin(), in_lane.end(),
                  [](const Vehicle* a, const Vehicle* b) {
                    return a->lon_pos < b->lon_pos;
                  });
        for (std::size_t i = 1; i < in_lane.size(); ++i) {
          const Vehicle* rear = in_lane[i - 1];
          const Vehicle* front = in_lane[i];
          const double gap = front->lon_pos - rear->lon_pos -
                             0.5 * (front->length + rear->length);
          const double wanted =
              rear->driver.s0 + rear->lon_vel * rear->driver.t_hw;
          CHECK(gap >= wanted - 1e-9);
        }
      }
    }
  }

  SUBCASE("impossible density is rejected") {
    CHECK_THROWS_AS(generate_random_scenario(500, 1), std::runtime_error);
  }

  SUBCASE("driver parameters within declared ranges") {
    Scenario sc = generate_random_scenario(50, 9);
    for (const auto& v : sc.vehicles) {
      CHECK(v.driver.v0 >= 22.0);
      CHECK(v.driver.v0 <= 33.0);
      CHECK(v.driver.politeness >= 0.0);
      CHECK(v.driver.politeness <= 1.0);
      CHECK(v.driver.a >= 2.0 * 0.8);
      CHECK(v.driver.a <= 2.0 * 1.2);
      CHECK(v.driver.t_hw >= 1.2 * 0.8);
      CHECK(v.driver.t_hw <= 1.2 * 1.2);
    }
  }
}

TEST_CASE("critical scenarios") {
  SUBCASE("cut-in script fires twice for vehicle 2") {
    Scenario sc = make_critical_scenario(CriticalKind::CutIn);
    REQUIRE(sc.script.size() == 2);
    CHECK(sc.script[0].vehicle == 2);
    CHECK(sc.script[1].vehicle == 2);
    CHECK(sc.script[0].t <= sc.script[1].t);
    CHECK(sc.ego.lon_vel == doctest::Approx(30.0));
  }

  SUBCASE("trapped traffic all at 24 with the leftmost lane free") {
    Scenario sc = make_critical_scenario(CriticalKind::Trapped);
    CHECK(sc.script.empty());
    for (const auto& v : sc.vehicles) {
      CHECK(v.lon_vel == doctest::Approx(24.0).epsilon(1e-12));
      CHECK(v.lane != 2);
    }
  }
}

TEST_CASE("scenario json round trip and validation") {
  Scenario sc = make_critical_scenario(CriticalKind::CutIn);
  std::string text = scenario_to_json(sc);
  Scenario back = scenario_from_json(text);
  CHECK(scenario_to_json(back) == text);

  Scenario overlapping = sc;
  overlapping.vehicles.push_back(overlapping.vehicles[0]);
  overlapping.vehicles.back().id = 99;
  CHECK_THROWS_AS(scenario_from_json(scenario_to_json(overlapping)),
                  std::runtime_error);

  std::string bad_version = text;
  bad_version.replace(bad_version.find("\"format_version\": 1"),
                      std::string("\"format_version\": 1").size(),
                      "\"format_version\": 9");
  CHECK_THROWS_AS(scenario_from_json(bad_version), std::runtime_error);
}
