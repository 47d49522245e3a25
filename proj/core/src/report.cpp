#include "otpl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace otpl {

EvalRow evaluate_episode(const Scenario& scenario, AgentKind kind,
                         const TrainedAgent* policy, const EnvConfig& cfg,
                         std::uint64_t seed, const std::string& scenario_id) {
  if (kind == AgentKind::Otpl && policy == nullptr) {
    throw std::invalid_argument("evaluate_episode: otpl needs a checkpoint");
  }
  Env env(scenario, cfg);
  std::mt19937_64 rng(seed);
  const double start_pos = env.world().ego.lon_pos;

  EpisodeEnd end = EpisodeEnd::None;
  while (!env.done()) {
    Action a;
    switch (kind) {
      case AgentKind::Otpl:
        a = otpl_act(*policy, env.world(), cfg);
        break;
      case AgentKind::Random:
        a = random_act(rng, env.ego_lon_state(), cfg);
        break;
      case AgentKind::Greedy:
        a = greedy_act(env.world(), cfg);
        break;
      case AgentKind::Idm:
        a = idm_act(env.world(), cfg);
        break;
    }
    const StepResult res = env.step(a);
    if (res.done) end = res.info.end;
  }

  EvalRow row;
  row.scenario_id = scenario_id;
  row.n_veh = static_cast<int>(scenario.vehicles.size());
  row.agent = agent_kind_name(kind);
  row.seed = seed;
  row.driving_time = env.world().time;
  const double dist = env.world().ego.lon_pos - start_pos;
  row.avg_velocity = row.driving_time > 0.0 ? dist / row.driving_time : 0.0;
  row.collided = end == EpisodeEnd::Collision;
  row.left_road = end == EpisodeEnd::RoadDeparture;
  row.completed = !row.collided && !row.left_road;
  return row;
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

constexpr const char* kReportHeader =
    "scenario_id,n_veh,agent,seed,avg_velocity,driving_time,completed,"
    "collided,left_road";

}  // namespace

std::string report_csv(const std::vector<EvalRow>& rows) {
  std::string out = kReportHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.scenario_id + ',' + std::to_string(r.n_veh) + ',' + r.agent +
           ',' + std::to_string(r.seed) + ',' + fmt(r.avg_velocity) + ',' +
           fmt(r.driving_time) + ',' + (r.completed ? "1" : "0") + ',' +
           (r.collided ? "1" : "0") + ',' + (r.left_road ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<EvalRow> parse_report_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  // leading '#' lines carry embedded run configuration
  do {
    if (!std::getline(ss, line)) {
      throw std::runtime_error("report: unexpected CSV header");
    }
  } while (!line.empty() && line[0] == '#');
  if (line != kReportHeader) {
    throw std::runtime_error("report: unexpected CSV header");
  }
  std::vector<EvalRow> rows;
  std::size_t index = 0;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) {
      throw std::runtime_error("report: malformed row " + std::to_string(index));
    }
    EvalRow r;
    r.scenario_id = f[0];
    r.n_veh = std::stoi(f[1]);
    r.agent = f[2];
    r.seed = std::stoull(f[3]);
    r.avg_velocity = std::stod(f[4]);
    r.driving_time = std::stod(f[5]);
    r.completed = f[6] == "1";
    r.collided = f[7] == "1";
    r.left_road = f[8] == "1";
    rows.push_back(std::move(r));
    ++index;
  }
  return rows;
}

std::vector<Series> velocity_by_density(const std::vector<EvalRow>& rows) {
  std::map<std::string, std::map<int, std::pair<double, int>>> acc;
  for (const auto& r : rows) {
    auto& [sum, n] = acc[r.agent][r.n_veh];
    sum += r.avg_velocity;
    n += 1;
  }
  std::vector<Series> out;
  for (const auto& [agent, by_density] : acc) {
    Series s;
    s.name = agent;
    for (const auto& [density, sn] : by_density) {
      s.points.emplace_back(density, sn.first / sn.second);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Bar> driving_time_by_agent(const std::vector<EvalRow>& rows) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    auto& [sum, n] = acc[r.agent];
    sum += r.driving_time;
    n += 1;
  }
  std::vector<Bar> out;
  for (const auto& [agent, sn] : acc) {
    out.push_back({agent, sn.first / sn.second});
  }
  return out;
}

std::string series_csv(const std::vector<Series>& series,
                       const std::string& x_name, const std::string& y_name) {
  std::string out = "series," + x_name + "," + y_name + "\n";
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      out += s.name + ',' + fmt(x) + ',' + fmt(y) + '\n';
    }
  }
  return out;
}

std::string bars_csv(const std::vector<Bar>& bars, const std::string& y_name) {
  std::string out = "label," + y_name + "\n";
  for (const auto& b : bars) out += b.label + ',' + fmt(b.value) + '\n';
  return out;
}

namespace {

constexpr int kWidth = 640, kHeight = 420;
constexpr int kMarginL = 60, kMarginR = 20, kMarginT = 40, kMarginB = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#ff7f0e", "#9467bd", "#8c564b"};

std::string svg_header(const std::string& title) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       std::to_string(kWidth) + "\" height=\"" + std::to_string(kHeight) +
       "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
       std::to_string(kHeight) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(kWidth / 2) +
       "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">" +
       title + "</text>\n";
  return s;
}

std::string axis_lines() {
  const int x0 = kMarginL, y0 = kHeight - kMarginB;
  const int x1 = kWidth - kMarginR, y1 = kMarginT;
  std::string s;
  s += "<line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y0) +
       "\" x2=\"" + std::to_string(x1) + "\" y2=\"" + std::to_string(y0) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y0) +
       "\" x2=\"" + std::to_string(x0) + "\" y2=\"" + std::to_string(y1) +
       "\" stroke=\"black\"/>\n";
  return s;
}

std::string text_at(double x, double y, const std::string& t,
                    const std::string& anchor, int size = 12) {
  return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" +
         anchor + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\">" + t + "</text>\n";
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series) {
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double px0 = kMarginL, px1 = kWidth - kMarginR;
  const double py0 = kHeight - kMarginB, py1 = kMarginT;
  auto sx = [&](double x) { return px0 + (x - x_min) / (x_max - x_min) * (px1 - px0); };
  auto sy = [&](double y) { return py0 + (y - y_min) / (y_max - y_min) * (py1 - py0); };

  std::string out = svg_header(title) + axis_lines();
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_min + (x_max - x_min) * i / 4.0;
    const double yv = y_min + (y_max - y_min) * i / 4.0;
    out += text_at(sx(xv), py0 + 18, fmt(xv), "middle", 11);
    out += text_at(px0 - 8, sy(yv) + 4, fmt(yv), "end", 11);
  }
  out += text_at((px0 + px1) / 2, kHeight - 12, x_label, "middle");
  out += text_at(16, (py0 + py1) / 2, y_label, "middle");

  int color = 0;
  double legend_y = kMarginT + 10;
  for (const auto& s : series) {
    const char* c = kColors[color % 6];
    std::string pts;
    for (const auto& [x, y] : s.points) {
      pts += fmt(sx(x)) + "," + fmt(sy(y)) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(c) +
           "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    for (const auto& [x, y] : s.points) {
      out += "<circle cx=\"" + fmt(sx(x)) + "\" cy=\"" + fmt(sy(y)) +
             "\" r=\"3\" fill=\"" + c + "\"/>\n";
    }
    out += "<rect x=\"" + fmt(px1 - 130) + "\" y=\"" + fmt(legend_y - 9) +
           "\" width=\"12\" height=\"12\" fill=\"" + c + "\"/>\n";
    out += text_at(px1 - 112, legend_y + 2, s.name, "start", 12);
    legend_y += 18;
    ++color;
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<Bar>& bars) {
  double y_max = 1.0;
  for (const auto& b : bars) y_max = std::max(y_max, b.value);
  y_max *= 1.1;

  const double px0 = kMarginL, px1 = kWidth - kMarginR;
  const double py0 = kHeight - kMarginB, py1 = kMarginT;
  const auto n = bars.size();
  const double slot = (px1 - px0) / std::max<std::size_t>(n, 1);
  auto sy = [&](double y) { return py0 + y / y_max * (py1 - py0); };

  std::string out = svg_header(title) + axis_lines();
  for (int i = 0; i <= 4; ++i) {
    const double yv = y_max * i / 4.0;
    out += text_at(px0 - 8, sy(yv) + 4, fmt(yv), "end", 11);
  }
  out += text_at(16, (py0 + py1) / 2, y_label, "middle");
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = px0 + slot * (static_cast<double>(i) + 0.5);
    const double w = slot * 0.6;
    const double top = sy(bars[i].value);
    out += "<rect x=\"" + fmt(cx - w / 2) + "\" y=\"" + fmt(top) +
           "\" width=\"" + fmt(w) + "\" height=\"" + fmt(py0 - top) +
           "\" fill=\"" + kColors[i % 6] + "\"/>\n";
    out += text_at(cx, py0 + 18, bars[i].label, "middle", 11);
    out += text_at(cx, top - 6, fmt(bars[i].value), "middle", 11);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace otpl
