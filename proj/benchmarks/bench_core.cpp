#include <benchmark/benchmark.h>

#include <random>

#include "otpl/agents.hpp"
#include "otpl/deepsets.hpp"
#include "otpl/mdp.hpp"
#include "otpl/poly_traj.hpp"
#include "otpl/sim.hpp"
#include "otpl/td3.hpp"

using namespace otpl;

namespace {

void bench_solve_and_sample(benchmark::State& state) {
  LonState lon{0.0, 22.0, 0.3};
  LatState lat{3.5, 0.0, 0.0};
  for (auto _ : state) {
    QuarticProfile q = solve_longitudinal(lon, 29.0, 5.0);
    QuinticProfile p = solve_lateral(lat, 7.0, 3.0);
    benchmark::DoNotOptimize(sample_trajectory(q, p));
  }
}
BENCHMARK(bench_solve_and_sample);

void bench_safety_check(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  QuarticProfile q = solve_longitudinal({0.0, 25.0, 0.0}, 30.0, 6.0);
  QuinticProfile p = solve_lateral({3.5, 0.0, 0.0}, 7.0, 3.0);
  Trajectory traj = sample_trajectory(q, p);
  std::vector<ObstaclePrediction> others;
  for (int i = 0; i < n; ++i) {
    ObstaclePrediction o;
    o.lon_pos = 20.0 + 12.0 * i;
    o.lat_pos = Road{}.lane_center(i % 3);
    o.lon_vel = 22.0 + (i % 5);
    others.push_back(o);
  }
  Road road;
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_safety(traj, others, road));
  }
}
BENCHMARK(bench_safety_check)->Arg(10)->Arg(40)->Arg(80);

void bench_sim_tick(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Scenario sc = generate_random_scenario(n, 3);
  Simulation sim(sc);
  TrajectorySample s;
  s.lat_pos = sc.ego.lat_pos;
  s.lon_vel = sc.ego.lon_vel;
  double lon = sc.ego.lon_pos;
  for (auto _ : state) {
    lon += sc.ego.lon_vel * kSimDt;
    s.lon_pos = lon;
    sim.step(s);
    if (lon > sc.road.length - 100.0) {
      state.PauseTiming();
      sim = Simulation(sc);
      lon = sc.ego.lon_pos;
      state.ResumeTiming();
    }
  }
}
BENCHMARK(bench_sim_tick)->Arg(10)->Arg(40)->Arg(80);

void bench_set_encode(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  DeepSets enc = DeepSets::make(DeepSets::Sizes{}, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd set(n, 3);
  for (int i = 0; i < set.size(); ++i) set.data()[i] = gauss(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enc.encode(set));
  }
}
BENCHMARK(bench_set_encode)->Arg(10)->Arg(40)->Arg(80);

std::vector<Transition> bench_buffer() {
  std::vector<Transition> ts;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Transition t;
    for (int v = 0; v < 12; ++v) {
      VehicleFeatures f;
      f.d_rel = 60.0 * u(rng);
      f.v_rel = 0.3 * u(rng);
      f.lane_rel = static_cast<int>(rng() % 3) - 1;
      t.s.vehicles.push_back(f);
      t.s2.vehicles.push_back(f);
    }
    t.s.ego.v_rl = 25.0;
    t.s2.ego.v_rl = 25.0;
    t.a = {u(rng), u(rng), u(rng), u(rng)};
    t.r = 0.5 * u(rng) + 0.4;
    t.done = (i % 8 == 0) ? 1 : 0;
    ts.push_back(t);
  }
  return ts;
}

void bench_td3_iteration(benchmark::State& state) {
  TD3Hyperparams hp;
  NetSizes sizes;
  sizes.actor_hidden1 = 128;
  sizes.actor_hidden2 = 128;
  sizes.critic_hidden1 = 128;
  sizes.critic_hidden2 = 128;
  TrainedAgent agent = TrainedAgent::make(hp, sizes, FeatureNorm{},
                                          ActionBounds{}, 7);
  ReplayBuffer buf(bench_buffer(), agent.norm);
  std::mt19937_64 rng(9);
  long j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(td3_iteration(agent, buf, rng, ++j));
  }
}
BENCHMARK(bench_td3_iteration);

void bench_greedy_policy(benchmark::State& state) {
  Scenario sc = generate_random_scenario(40, 5);
  WorldState w;
  w.road = sc.road;
  w.ego = sc.ego;
  w.others = sc.vehicles;
  EnvConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(greedy_act(w, cfg));
  }
}
BENCHMARK(bench_greedy_policy);

}  // namespace

BENCHMARK_MAIN();
