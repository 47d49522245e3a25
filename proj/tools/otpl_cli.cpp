// Command line front end: scenario generation, data collection, offline
// training, evaluation, and plotting. Every artifact embeds the resolved run
// configuration so outputs are self-describing.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otpl/dataset.hpp"
#include "otpl/report.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

json config_block(const json& params) {
  return json{{"tool_version", kToolVersion}, {"params", params}};
}

// JSON artifacts carry the config as an extra top-level key; loaders ignore
// keys they do not know.
void write_json_with_config(const std::string& path, const std::string& body,
                            const json& config) {
  json j = json::parse(body);
  j["run_config"] = config;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << j.dump() << '\n';
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << body;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "10..80" or "10..80:10"; bare "50" is a single density.
std::vector<int> parse_densities(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {std::stoi(text)};
  const auto colon = text.find(':', dots);
  const int lo = std::stoi(text.substr(0, dots));
  const int step = colon == std::string::npos
                       ? 10
                       : std::stoi(text.substr(colon + 1));
  const int hi = std::stoi(text.substr(dots + 2, colon - dots - 2));
  if (step <= 0 || hi < lo) {
    throw std::invalid_argument("bad density range: " + text);
  }
  std::vector<int> out;
  for (int d = lo; d <= hi; d += step) out.push_back(d);
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct ScenarioGenOpts {
  std::string densities = "10..80";
  int per_density = 10;
  std::uint64_t seed = 0;
  std::string out;
};

int run_scenario_gen(const ScenarioGenOpts& o) {
  const auto densities = parse_densities(o.densities);
  fs::create_directories(o.out);
  const json cfg = config_block({{"command", "scenario gen"},
                                 {"densities", o.densities},
                                 {"per_density", o.per_density},
                                 {"seed", o.seed}});
  std::uint64_t stream = 0;
  for (int d : densities) {
    for (int i = 0; i < o.per_density; ++i) {
      const auto scenario =
          otpl::generate_random_scenario(d, derive_seed(o.seed, stream++));
      char name[64];
      std::snprintf(name, sizeof(name), "scenario_d%03d_%02d.json", d, i);
      write_json_with_config(o.out + "/" + name,
                             otpl::scenario_to_json(scenario), cfg);
    }
  }
  std::cout << "wrote " << densities.size() * o.per_density
            << " scenarios to " << o.out << "\n";
  return 0;
}

struct ScenarioCriticalOpts {
  std::string kind;
  std::string out;
};

int run_scenario_critical(const ScenarioCriticalOpts& o) {
  otpl::CriticalKind kind;
  if (o.kind == "cutin") {
    kind = otpl::CriticalKind::CutIn;
  } else if (o.kind == "trapped") {
    kind = otpl::CriticalKind::Trapped;
  } else {
    throw std::invalid_argument("unknown critical kind: " + o.kind);
  }
  const json cfg = config_block(
      {{"command", "scenario critical"}, {"kind", o.kind}});
  write_json_with_config(
      o.out, otpl::scenario_to_json(otpl::make_critical_scenario(kind)), cfg);
  std::cout << "wrote " << o.out << "\n";
  return 0;
}

struct CollectOpts {
  std::size_t samples = 50000;
  std::uint64_t seed = 0;
  std::string out;
  double terminal_fraction = -1.0;  // <0 keeps the native fraction
};

int run_collect(const CollectOpts& o) {
  otpl::EnvConfig env_cfg;
  auto set = otpl::collect(o.samples, o.seed, env_cfg);
  if (o.terminal_fraction >= 0.0) {
    set = otpl::rebalance_terminal_fraction(set, o.terminal_fraction,
                                            derive_seed(o.seed, 0xbeef));
  }
  otpl::save_dataset(set, o.out);
  // the dataset header is JSONL, so rewrite line 1 with the config attached
  std::string text = read_text(o.out);
  const auto nl = text.find('\n');
  json header = json::parse(text.substr(0, nl));
  header["run_config"] =
      config_block({{"command", "collect"},
                    {"samples", o.samples},
                    {"seed", o.seed},
                    {"terminal_fraction", o.terminal_fraction}});
  write_text(o.out, header.dump() + text.substr(nl));

  const auto stats = otpl::dataset_stats(set);
  write_text(o.out + ".stats.json", otpl::stats_to_json(stats) + "\n");
  std::cout << "wrote " << set.size() << " transitions to " << o.out
            << " (terminal fraction "
            << set.measured_terminal_fraction() << ")\n";
  return 0;
}

struct TrainOpts {
  std::string data;
  std::uint64_t seed = 0;
  long iters = 20000;
  std::string out;
  otpl::TD3Hyperparams hp;
  otpl::NetSizes sizes;
  long log_every = 1000;
};

int run_train(const TrainOpts& o) {
  const auto set = otpl::load_dataset(o.data);
  fs::create_directories(o.out);
  otpl::TD3Hyperparams hp = o.hp;
  hp.max_iterations = o.iters;
  const auto callback = [&](long it, const otpl::IterationDiagnostics& d) {
    if (o.log_every > 0 && it % o.log_every == 0) {
      std::cout << "iter " << it << " critic_loss " << d.critic_loss
                << " mean_q " << d.mean_q << "\n";
    }
  };
  const auto agent = otpl::train_offline(set.transitions, hp, o.sizes, o.seed,
                                         o.out, callback);
  const json cfg = config_block({{"command", "train"},
                                 {"data", o.data},
                                 {"seed", o.seed},
                                 {"iters", o.iters}});
  write_json_with_config(o.out + "/agent.json", otpl::agent_to_json(agent),
                         cfg);
  std::cout << "wrote " << o.out << "/agent.json\n";
  return 0;
}

struct EvalOpts {
  std::string agent = "idm";
  std::string checkpoint;
  std::string scenarios;
  std::string out;
  std::uint64_t seed = 0;
};

int run_eval(const EvalOpts& o) {
  const auto kind = otpl::agent_kind_from_name(o.agent);
  std::optional<otpl::TrainedAgent> policy;
  if (kind == otpl::AgentKind::Otpl) {
    if (o.checkpoint.empty()) {
      throw std::invalid_argument("eval: --checkpoint required for otpl");
    }
    const fs::path p = fs::is_directory(o.checkpoint)
                           ? fs::path(o.checkpoint) / "agent.json"
                           : fs::path(o.checkpoint);
    policy = otpl::load_agent(p.string());
  }

  std::vector<fs::path> files;
  if (fs::is_directory(o.scenarios)) {
    for (const auto& e : fs::directory_iterator(o.scenarios)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(o.scenarios);
  }
  if (files.empty()) {
    throw std::invalid_argument("eval: no scenario files in " + o.scenarios);
  }

  otpl::EnvConfig env_cfg;
  std::vector<otpl::EvalRow> rows;
  for (const auto& f : files) {
    const auto scenario = otpl::load_scenario(f.string());
    rows.push_back(otpl::evaluate_episode(scenario, kind,
                                          policy ? &*policy : nullptr, env_cfg,
                                          o.seed, f.stem().string()));
  }
  const json cfg = config_block({{"command", "eval"},
                                 {"agent", o.agent},
                                 {"checkpoint", o.checkpoint},
                                 {"scenarios", o.scenarios},
                                 {"seed", o.seed}});
  write_text(o.out, "# " + cfg.dump() + "\n" + otpl::report_csv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << o.out << "\n";
  return 0;
}

struct PlotOpts {
  std::string report;
  std::string out;
};

int run_plot(const PlotOpts& o) {
  const auto rows = otpl::parse_report_csv(read_text(o.report));
  const json cfg =
      config_block({{"command", "plot"}, {"report", o.report}});
  const std::string stamp = "<!-- " + cfg.dump() + " -->\n";

  const auto velocity = otpl::velocity_by_density(rows);
  write_text(o.out + "_velocity.csv",
             "# " + cfg.dump() + "\n" +
                 otpl::series_csv(velocity, "n_veh", "avg_velocity"));
  write_text(o.out + "_velocity.svg",
             stamp + otpl::line_chart_svg("average velocity vs density",
                                          "surrounding vehicles",
                                          "avg velocity [m/s]", velocity));

  const auto times = otpl::driving_time_by_agent(rows);
  write_text(o.out + "_driving_time.csv",
             "# " + cfg.dump() + "\n" +
                 otpl::bars_csv(times, "mean_driving_time"));
  write_text(o.out + "_driving_time.svg",
             stamp + otpl::bar_chart_svg("driving time by agent",
                                         "mean driving time [s]", times));
  std::cout << "wrote plots with prefix " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory-parameter policy toolkit"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  auto* scenario = app.add_subcommand("scenario", "scenario files");
  scenario->require_subcommand(1);

  ScenarioGenOpts gen_opts;
  auto* gen = scenario->add_subcommand("gen", "random evaluation scenarios");
  gen->add_option("--densities", gen_opts.densities, "range, e.g. 10..80:10");
  gen->add_option("--per-density", gen_opts.per_density);
  gen->add_option("--seed", gen_opts.seed);
  gen->add_option("--out", gen_opts.out, "output directory")->required();

  ScenarioCriticalOpts crit_opts;
  auto* crit = scenario->add_subcommand("critical", "hand-built scenarios");
  crit->add_option("--kind", crit_opts.kind, "cutin|trapped")->required();
  crit->add_option("--out", crit_opts.out)->required();

  CollectOpts collect_opts;
  auto* collect = app.add_subcommand("collect", "random-policy data");
  collect->add_option("--samples", collect_opts.samples);
  collect->add_option("--seed", collect_opts.seed);
  collect->add_option("--out", collect_opts.out)->required();
  collect->add_option("--terminal-fraction", collect_opts.terminal_fraction,
                      "rebalance to this done=1 fraction");

  TrainOpts train_opts;
  auto* train = app.add_subcommand("train", "offline policy training");
  train->add_option("--data", train_opts.data)->required();
  train->add_option("--seed", train_opts.seed);
  train->add_option("--iters", train_opts.iters);
  train->add_option("--out", train_opts.out)->required();
  train->add_option("--tau", train_opts.hp.tau);
  train->add_option("--lr", train_opts.hp.lr);
  train->add_option("--batch", train_opts.hp.batch);
  train->add_option("--gamma", train_opts.hp.gamma);
  train->add_option("--checkpoint-every", train_opts.hp.checkpoint_every);
  train->add_option("--actor-hidden1", train_opts.sizes.actor_hidden1);
  train->add_option("--actor-hidden2", train_opts.sizes.actor_hidden2);
  train->add_option("--critic-hidden1", train_opts.sizes.critic_hidden1);
  train->add_option("--critic-hidden2", train_opts.sizes.critic_hidden2);
  train->add_option("--phi-hidden", train_opts.sizes.encoder.phi_hidden);
  train->add_option("--d-phi", train_opts.sizes.encoder.d_phi);
  train->add_option("--rho-hidden", train_opts.sizes.encoder.rho_hidden);
  train->add_option("--d-rho", train_opts.sizes.encoder.d_rho);
  train->add_option("--log-every", train_opts.log_every);

  EvalOpts eval_opts;
  auto* eval = app.add_subcommand("eval", "run agents on scenarios");
  eval->add_option("--agent", eval_opts.agent, "otpl|idm|greedy|random");
  eval->add_option("--checkpoint", eval_opts.checkpoint);
  eval->add_option("--scenarios", eval_opts.scenarios)->required();
  eval->add_option("--out", eval_opts.out)->required();
  eval->add_option("--seed", eval_opts.seed);

  PlotOpts plot_opts;
  auto* plot = app.add_subcommand("plot", "report aggregates and charts");
  plot->add_option("--report", plot_opts.report)->required();
  plot->add_option("--out", plot_opts.out, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) return run_scenario_gen(gen_opts);
    if (*crit) return run_scenario_critical(crit_opts);
    if (*collect) return run_collect(collect_opts);
    if (*train) return run_train(train_opts);
    if (*eval) return run_eval(eval_opts);
    if (*plot) return run_plot(plot_opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
