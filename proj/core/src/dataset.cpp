#include "otpl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace otpl {

namespace {

using json = nlohmann::ordered_json;

const char* end_name(EpisodeEnd e) {
  switch (e) {
    case EpisodeEnd::None:
      return "none";
    case EpisodeEnd::Collision:
      return "collision";
    case EpisodeEnd::RoadDeparture:
      return "departure";
    case EpisodeEnd::Timeout:
      return "timeout";
    case EpisodeEnd::RoadEnd:
      return "road_end";
  }
  return "none";
}

EpisodeEnd end_from_name(const std::string& s) {
  if (s == "none") return EpisodeEnd::None;
  if (s == "collision") return EpisodeEnd::Collision;
  if (s == "departure") return EpisodeEnd::RoadDeparture;
  if (s == "timeout") return EpisodeEnd::Timeout;
  if (s == "road_end") return EpisodeEnd::RoadEnd;
  throw std::runtime_error("unknown episode end tag: " + s);
}

json state_to_json(const RLState& s) {
  json veh = json::array();
  for (const auto& v : s.vehicles) {
    veh.push_back({v.d_rel, v.v_rel, v.lane_rel});
  }
  return json{{"veh", std::move(veh)},
              {"ego",
               {s.ego.v_rl, s.ego.ll_valid, s.ego.rl_valid, s.ego.pos_lat,
                s.ego.lon_a, s.ego.lat_v, s.ego.lat_a}}};
}

RLState state_from_json(const json& j) {
  RLState s;
  for (const auto& jv : j.at("veh")) {
    s.vehicles.push_back({jv.at(0), jv.at(1), jv.at(2)});
  }
  const auto& je = j.at("ego");
  s.ego.v_rl = je.at(0);
  s.ego.ll_valid = je.at(1);
  s.ego.rl_valid = je.at(2);
  s.ego.pos_lat = je.at(3);
  s.ego.lon_a = je.at(4);
  s.ego.lat_v = je.at(5);
  s.ego.lat_a = je.at(6);
  return s;
}

json metadata_to_json(const DatasetMetadata& m) {
  auto axis = [](const AxisBounds& a) { return json{a.lo, a.hi}; };
  json j;
  j["format_version"] = m.format_version;
  j["seed"] = m.seed;
  j["n_samples"] = m.n_samples;
  j["terminal_fraction"] = m.terminal_fraction;
  j["policy"] = m.policy;
  j["reward"] = {{"v_des", m.reward.v_des},
                 {"jp_lon", m.reward.jp_lon},
                 {"jp_lat", m.reward.jp_lat},
                 {"j_max_lon", m.reward.j_max_lon},
                 {"j_max_lat", m.reward.j_max_lat},
                 {"fail_penalty", m.reward.fail_penalty},
                 {"velocity_branch",
                  m.reward.velocity_branch == VelocityBranch::OneSided
                      ? "one_sided"
                      : "symmetric"}};
  j["bounds"] = {{"a_tv", axis(m.bounds.a_tv)},
                 {"a_lon_d", axis(m.bounds.a_lon_d)},
                 {"a_lat_d", axis(m.bounds.a_lat_d)},
                 {"a_lp", axis(m.bounds.a_lp)}};
  return j;
}

DatasetMetadata metadata_from_json(const json& j) {
  DatasetMetadata m;
  m.format_version = j.at("format_version");
  m.seed = j.at("seed");
  m.n_samples = j.at("n_samples");
  m.terminal_fraction = j.at("terminal_fraction");
  m.policy = j.at("policy");
  const auto& jr = j.at("reward");
  m.reward.v_des = jr.at("v_des");
  m.reward.jp_lon = jr.at("jp_lon");
  m.reward.jp_lat = jr.at("jp_lat");
  m.reward.j_max_lon = jr.at("j_max_lon");
  m.reward.j_max_lat = jr.at("j_max_lat");
  m.reward.fail_penalty = jr.at("fail_penalty");
  m.reward.velocity_branch = jr.at("velocity_branch") == "one_sided"
                                 ? VelocityBranch::OneSided
                                 : VelocityBranch::Symmetric;
  auto axis = [](const json& ja) { return AxisBounds{ja.at(0), ja.at(1)}; };
  const auto& jb = j.at("bounds");
  m.bounds.a_tv = axis(jb.at("a_tv"));
  m.bounds.a_lon_d = axis(jb.at("a_lon_d"));
  m.bounds.a_lat_d = axis(jb.at("a_lat_d"));
  m.bounds.a_lp = axis(jb.at("a_lp"));
  return m;
}

Histogram make_histogram(double lo, double hi, int bins) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  return h;
}

void hist_add(Histogram& h, double x) {
  const auto bins = static_cast<int>(h.counts.size());
  int b = static_cast<int>(std::floor((x - h.lo) / (h.hi - h.lo) * bins));
  b = std::clamp(b, 0, bins - 1);
  h.counts[static_cast<std::size_t>(b)] += 1;
}

json hist_to_json(const Histogram& h) {
  return json{{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}};
}

}  // namespace

double TransitionSet::measured_terminal_fraction() const {
  if (transitions.empty()) return 0.0;
  std::size_t t = 0;
  for (const auto& tr : transitions) t += static_cast<std::size_t>(tr.done);
  return static_cast<double>(t) / static_cast<double>(transitions.size());
}

TransitionSet collect(std::size_t n_samples, std::uint64_t seed,
                      const EnvConfig& cfg) {
  if (n_samples == 0) throw std::invalid_argument("collect: n_samples == 0");
  TransitionSet set;
  set.metadata.seed = seed;
  set.metadata.policy = "random";
  set.metadata.reward = cfg.reward;
  set.metadata.bounds = cfg.bounds;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> density(10, 80);
  std::uint64_t scenario_counter = 0;

  while (set.transitions.size() < n_samples) {
    const int n_veh = density(rng);
    Scenario scenario;
    bool placed = false;
    for (int attempt = 0; attempt < 8 && !placed; ++attempt) {
      const std::uint64_t s =
          seed ^ (0xd1342543de82ef95ull * ++scenario_counter);
      try {
        scenario = generate_random_scenario(n_veh, s);
        placed = true;
      } catch (const std::runtime_error&) {
      }
    }
    if (!placed) {
      throw std::runtime_error("collect: could not place a scenario");
    }
    Env env(scenario, cfg);
    while (!env.done() && set.transitions.size() < n_samples) {
      Transition tr;
      tr.s = env.state();
      const Action action = random_act(rng, env.ego_lon_state(), cfg);
      const StepResult res = env.step(action);
      const Eigen::Vector4d an =
          normalize_action(res.info.executed, cfg.bounds);
      tr.a = {an(0), an(1), an(2), an(3)};
      tr.r = res.reward;
      tr.s2 = res.next;
      tr.done = res.info.fail ? 1 : 0;
      set.transitions.push_back(std::move(tr));
      set.ends.push_back(res.info.end);
    }
  }
  set.metadata.n_samples = set.transitions.size();
  set.metadata.terminal_fraction = set.measured_terminal_fraction();
  return set;
}

TransitionSet rebalance_terminal_fraction(const TransitionSet& set, double p,
                                          std::uint64_t rng_seed) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("rebalance: p outside [0,1]");
  }
  std::vector<std::size_t> term, nonterm;
  for (std::size_t i = 0; i < set.size(); ++i) {
    (set.transitions[i].done ? term : nonterm).push_back(i);
  }
  const auto t = term.size();
  const auto n = nonterm.size();
  if (p > 0.0 && t == 0) {
    throw std::invalid_argument("rebalance: no terminal samples available");
  }
  if (p < 1.0 && n == 0) {
    throw std::invalid_argument("rebalance: no non-terminal samples available");
  }

  std::size_t keep_t = t, keep_n = n;
  if (p == 0.0) {
    keep_t = 0;
  } else if (p == 1.0) {
    keep_n = 0;
  } else {
    const double native =
        static_cast<double>(t) / static_cast<double>(t + n);
    if (p > native) {
      keep_n = static_cast<std::size_t>(
          std::llround(static_cast<double>(t) * (1.0 - p) / p));
      keep_n = std::min(keep_n, n);
    } else if (p < native) {
      keep_t = static_cast<std::size_t>(
          std::llround(static_cast<double>(n) * p / (1.0 - p)));
      keep_t = std::min(keep_t, t);
    }
  }

  std::mt19937_64 rng(rng_seed);
  auto subsample = [&rng](std::vector<std::size_t> idx, std::size_t keep) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  const auto kept_t = keep_t < t ? subsample(term, keep_t) : term;
  const auto kept_n = keep_n < n ? subsample(nonterm, keep_n) : nonterm;

  std::vector<std::size_t> merged;
  merged.reserve(kept_t.size() + kept_n.size());
  std::merge(kept_t.begin(), kept_t.end(), kept_n.begin(), kept_n.end(),
             std::back_inserter(merged));

  TransitionSet out;
  out.metadata = set.metadata;
  for (std::size_t i : merged) {
    out.transitions.push_back(set.transitions[i]);
    out.ends.push_back(i < set.ends.size() ? set.ends[i] : EpisodeEnd::None);
  }
  out.metadata.n_samples = out.transitions.size();
  out.metadata.terminal_fraction = out.measured_terminal_fraction();
  return out;
}

DatasetStats dataset_stats(const TransitionSet& set) {
  DatasetStats st;
  st.n = set.size();
  st.reward_hist = make_histogram(-0.5, 1.0, 30);
  for (auto& h : st.action_hist) h = make_histogram(-1.0, 1.0, 20);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto end = i < set.ends.size() ? set.ends[i] : EpisodeEnd::None;
    if (end == EpisodeEnd::Collision) st.collisions++;
    if (end == EpisodeEnd::RoadDeparture) st.departures++;
    if (end == EpisodeEnd::Timeout) st.timeouts++;
    hist_add(st.reward_hist, set.transitions[i].r);
    for (int k = 0; k < 4; ++k) {
      hist_add(st.action_hist[static_cast<std::size_t>(k)],
               set.transitions[i].a[static_cast<std::size_t>(k)]);
    }
  }
  if (st.n > 0) {
    const auto dn = static_cast<double>(st.n);
    st.collision_fraction = static_cast<double>(st.collisions) / dn;
    st.departure_fraction = static_cast<double>(st.departures) / dn;
    st.timeout_fraction = static_cast<double>(st.timeouts) / dn;
    st.terminal_fraction = set.measured_terminal_fraction();
  }
  return st;
}

std::string stats_to_json(const DatasetStats& st) {
  json j;
  j["n"] = st.n;
  j["collisions"] = st.collisions;
  j["departures"] = st.departures;
  j["timeouts"] = st.timeouts;
  j["collision_fraction"] = st.collision_fraction;
  j["departure_fraction"] = st.departure_fraction;
  j["timeout_fraction"] = st.timeout_fraction;
  j["terminal_fraction"] = st.terminal_fraction;
  j["reward_hist"] = hist_to_json(st.reward_hist);
  j["action_hist"] = json::array();
  for (const auto& h : st.action_hist) j["action_hist"].push_back(hist_to_json(h));
  return j.dump(2);
}

void save_dataset(const TransitionSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << metadata_to_json(set.metadata).dump() << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& tr = set.transitions[i];
    json j;
    j["s"] = state_to_json(tr.s);
    j["a"] = tr.a;
    j["r"] = tr.r;
    j["s2"] = state_to_json(tr.s2);
    j["done"] = tr.done;
    j["end"] = end_name(i < set.ends.size() ? set.ends[i] : EpisodeEnd::None);
    out << j.dump() << '\n';
  }
}

TransitionSet load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("dataset: missing metadata header");
  }
  TransitionSet set;
  try {
    const json jm = json::parse(line);
    set.metadata = metadata_from_json(jm);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("dataset: bad metadata header: ") +
                             e.what());
  }
  if (set.metadata.format_version != 1) {
    throw std::runtime_error("dataset: unsupported format version");
  }
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Transition tr;
    try {
      const json j = json::parse(line);
      tr.s = state_from_json(j.at("s"));
      const auto& ja = j.at("a");
      for (std::size_t k = 0; k < 4; ++k) tr.a[k] = ja.at(k);
      tr.r = j.at("r");
      tr.s2 = state_from_json(j.at("s2"));
      tr.done = j.at("done");
      set.ends.push_back(end_from_name(j.at("end")));
    } catch (const json::exception& e) {
      throw std::runtime_error("dataset: corrupted record " +
                               std::to_string(index) + ": " + e.what());
    }
    set.transitions.push_back(std::move(tr));
    ++index;
  }
  if (set.transitions.size() != set.metadata.n_samples) {
    throw std::runtime_error(
        "dataset: corrupted record " + std::to_string(index) +
        ": expected " + std::to_string(set.metadata.n_samples) + " records");
  }
  if (std::abs(set.measured_terminal_fraction() -
               set.metadata.terminal_fraction) > 1e-6) {
    throw std::runtime_error(
        "dataset: metadata terminal_fraction disagrees with body");
  }
  return set;
}

}  // namespace otpl
