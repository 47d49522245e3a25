#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "otpl/mdp.hpp"
#include "otpl/td3.hpp"

namespace otpl {

enum class AgentKind { Otpl, Random, Greedy, Idm };

AgentKind agent_kind_from_name(const std::string& name);
const char* agent_kind_name(AgentKind kind);

// A drivable slot in some lane around the ego's longitudinal position. Either
// bound may be open (no vehicle on that side).
struct Gap {
  int lane = 0;
  std::optional<int> lead_id;
  std::optional<int> rear_id;
  double lead_pos = 0.0;  // bumper positions; meaningful only when bounded
  double rear_pos = 0.0;
};

// The ego's own lane always yields its front gap. Adjacent lanes yield the
// gap straddling the ego position, but only when the lane holds at least one
// vehicle; an empty lane offers no gap to target.
std::vector<Gap> enumerate_gaps(const WorldState& world);

// Uniform action draw: durations and lateral target over their bounds, the
// target velocity over the feasible interval for the drawn duration.
Action random_act(std::mt19937_64& rng, const LonState& lon,
                  const EnvConfig& cfg);

// Keep-lane car following: IDM acceleration toward the current leader,
// projected over a 2 s profile.
Action idm_act(const WorldState& world, const EnvConfig& cfg);

// Exhaustive search over gaps and a small duration/velocity grid; picks the
// fastest candidate whose trajectory passes the safety check. Falls back to
// a keep-lane brake when nothing passes. Deterministic.
Action greedy_act(const WorldState& world, const EnvConfig& cfg);

// Trained policy: featurize, encode, actor forward, then the same clamping
// the environment applies.
Action otpl_act(const TrainedAgent& agent, const WorldState& world,
                const EnvConfig& cfg);

}  // namespace otpl
