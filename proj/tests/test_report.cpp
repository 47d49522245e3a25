#include "otpl/report.hpp"

#include <cmath>

#include "doctest.h"

using namespace otpl;

namespace {

EvalRow row(const std::string& id, int n_veh, const std::string& agent,
            double vel, double time, bool completed) {
  EvalRow r;
  r.scenario_id = id;
  r.n_veh = n_veh;
  r.agent = agent;
  r.seed = 1;
  r.avg_velocity = vel;
  r.driving_time = time;
  r.completed = completed;
  r.collided = !completed;
  return r;
}

}  // namespace

TEST_CASE("report csv round trip with the pinned header") {
  std::vector<EvalRow> rows{row("d010_00", 10, "idm", 27.5, 36.4, true),
                            row("d020_01", 20, "otpl", 26.25, 38.1, false)};
  std::string csv = report_csv(rows);
  CHECK(csv.rfind("scenario_id,n_veh,agent,seed,avg_velocity,driving_time,"
                  "completed,collided,left_road",
                  0) == 0);
  std::vector<EvalRow> back = parse_report_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].scenario_id == "d010_00");
  CHECK(back[0].avg_velocity == doctest::Approx(27.5));
  CHECK(back[1].agent == "otpl");
  CHECK(back[1].completed == false);
  CHECK(back[1].collided == true);
}

TEST_CASE("csv parser skips comment lines") {
  std::string csv =
      "# {\"cmd\":\"eval\"}\n"
      "scenario_id,n_veh,agent,seed,avg_velocity,driving_time,completed,"
      "collided,left_road\n"
      "a,10,idm,3,25.5,40,1,0,0\n";
  std::vector<EvalRow> rows = parse_report_csv(csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].seed == 3);
  CHECK(rows[0].driving_time == doctest::Approx(40.0));
}

TEST_CASE("aggregations") {
  std::vector<EvalRow> rows{
      row("a", 10, "idm", 28.0, 30.0, true),
      row("b", 10, "idm", 26.0, 34.0, true),
      row("c", 20, "idm", 24.0, 36.0, true),
      row("d", 10, "otpl", 29.0, 31.0, true),
  };

  SUBCASE("velocity by density averages per agent and density") {
    auto series = velocity_by_density(rows);
    REQUIRE(series.size() == 2);
    const Series* idm = nullptr;
    for (const auto& s : series) {
      if (s.name == "idm") idm = &s;
    }
    REQUIRE(idm != nullptr);
    REQUIRE(idm->points.size() == 2);
    CHECK(idm->points[0].first == doctest::Approx(10.0));
    CHECK(idm->points[0].second == doctest::Approx(27.0));
    CHECK(idm->points[1].second == doctest::Approx(24.0));
  }

  SUBCASE("driving time by agent") {
    auto bars = driving_time_by_agent(rows);
    REQUIRE(bars.size() == 2);
    for (const auto& b : bars) {
      if (b.label == "idm") {
        CHECK(b.value == doctest::Approx((30.0 + 34.0 + 36.0) / 3.0));
      } else {
        CHECK(b.value == doctest::Approx(31.0));
      }
    }
  }

  SUBCASE("csv emitters") {
    std::string sc = series_csv(velocity_by_density(rows), "n_veh",
                                "avg_velocity");
    CHECK(sc.find("n_veh") != std::string::npos);
    CHECK(sc.find("idm") != std::string::npos);
    std::string bc = bars_csv(driving_time_by_agent(rows), "driving_time");
    CHECK(bc.find("driving_time") != std::string::npos);
  }
}

TEST_CASE("svg charts are deterministic") {
  std::vector<EvalRow> rows{row("a", 10, "idm", 28.0, 30.0, true),
                            row("b", 20, "idm", 25.0, 35.0, true)};
  auto series = velocity_by_density(rows);
  std::string one = line_chart_svg("velocity", "n_veh", "m/s", series);
  std::string two = line_chart_svg("velocity", "n_veh", "m/s", series);
  CHECK(one == two);
  CHECK(one.find("<svg") != std::string::npos);
  CHECK(one.find("</svg>") != std::string::npos);

  auto bars = driving_time_by_agent(rows);
  std::string b1 = bar_chart_svg("driving time", "s", bars);
  CHECK(b1 == bar_chart_svg("driving time", "s", bars));
  CHECK(b1.find("<svg") != std::string::npos);
}

TEST_CASE("idm episode on an empty road cruises near the desired velocity") {
  Scenario sc;
  sc.road = Road{};
  sc.ego.id = 0;
  sc.ego.lane = 1;
  sc.ego.lat_pos = sc.road.lane_center(1);
  sc.ego.lon_pos = 0.0;
  sc.ego.lon_vel = 30.0;
  EvalRow r = evaluate_episode(sc, AgentKind::Idm, nullptr, EnvConfig{}, 1,
                               "empty");
  CHECK(r.completed);
  CHECK_FALSE(r.collided);
  CHECK_FALSE(r.left_road);
  CHECK(std::abs(r.avg_velocity - 30.0) <= 0.5);
  CHECK(r.driving_time > 0.0);
  CHECK(r.agent == "idm");

  EvalRow again = evaluate_episode(sc, AgentKind::Idm, nullptr, EnvConfig{},
                                   1, "empty");
  CHECK(again.avg_velocity == r.avg_velocity);
  CHECK(again.driving_time == r.driving_time);
}
