#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otpl/agents.hpp"

namespace otpl {

// One evaluated episode. avg_velocity is distance over elapsed time;
// completed means the episode ended without collision or road departure.
struct EvalRow {
  std::string scenario_id;
  int n_veh = 0;
  std::string agent;
  std::uint64_t seed = 0;
  double avg_velocity = 0.0;
  double driving_time = 0.0;
  bool completed = false;
  bool collided = false;
  bool left_road = false;
};

// Runs one episode to termination. `policy` is consulted only when kind is
// Otpl; `seed` feeds the random agent (the others ignore it).
EvalRow evaluate_episode(const Scenario& scenario, AgentKind kind,
                         const TrainedAgent* policy, const EnvConfig& cfg,
                         std::uint64_t seed, const std::string& scenario_id);

// report CSV with header
// scenario_id,n_veh,agent,seed,avg_velocity,driving_time,completed,collided,left_road
std::string report_csv(const std::vector<EvalRow>& rows);
std::vector<EvalRow> parse_report_csv(const std::string& text);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Bar {
  std::string label;
  double value = 0.0;
};

// Mean avg_velocity per (agent, n_veh), sorted by density.
std::vector<Series> velocity_by_density(const std::vector<EvalRow>& rows);
// Mean driving_time per agent label.
std::vector<Bar> driving_time_by_agent(const std::vector<EvalRow>& rows);

std::string series_csv(const std::vector<Series>& series,
                       const std::string& x_name, const std::string& y_name);
std::string bars_csv(const std::vector<Bar>& bars, const std::string& y_name);

// Deterministic hand-rolled SVG; no timestamps or random ids.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series);
std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<Bar>& bars);

}  // namespace otpl
