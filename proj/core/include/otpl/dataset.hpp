#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "otpl/agents.hpp"
#include "otpl/td3.hpp"

namespace otpl {

struct DatasetMetadata {
  int format_version = 1;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  double terminal_fraction = 0.0;
  std::string policy = "random";
  RewardParams reward;
  ActionBounds bounds;
};

// Offline buffer plus provenance. `ends` runs parallel to `transitions` and
// records how the episode stood after each step (None mid-episode).
struct TransitionSet {
  DatasetMetadata metadata;
  std::vector<Transition> transitions;
  std::vector<EpisodeEnd> ends;

  std::size_t size() const { return transitions.size(); }
  double measured_terminal_fraction() const;
};

// Rolls random-policy episodes on freshly drawn scenarios (density uniform in
// {10..80}) until n_samples decision-step transitions are recorded.
// Deterministic in seed. Never touches a trained network.
TransitionSet collect(std::size_t n_samples, std::uint64_t seed,
                      const EnvConfig& cfg = {});

// Subsamples the majority class (without replacement, order preserved) so the
// done=1 fraction hits p within one sample. Throws when p is unachievable.
TransitionSet rebalance_terminal_fraction(const TransitionSet& set, double p,
                                          std::uint64_t rng_seed);

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<std::size_t> counts;  // fixed bin count, [lo, hi] inclusive top
};

struct DatasetStats {
  std::size_t n = 0;
  std::size_t collisions = 0;
  std::size_t departures = 0;
  std::size_t timeouts = 0;
  double collision_fraction = 0.0;
  double departure_fraction = 0.0;
  double timeout_fraction = 0.0;
  double terminal_fraction = 0.0;
  Histogram reward_hist;
  std::array<Histogram, 4> action_hist;  // normalized components
};

DatasetStats dataset_stats(const TransitionSet& set);
std::string stats_to_json(const DatasetStats& stats);

// Line-delimited JSON: one metadata header line, then one record per line.
// load() rejects version mismatches, malformed records (reporting the record
// index), and metadata that disagrees with the body.
void save_dataset(const TransitionSet& set, const std::string& path);
TransitionSet load_dataset(const std::string& path);

}  // namespace otpl
