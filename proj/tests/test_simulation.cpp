#include <doctest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rcov/io.hpp"
#include "rcov/simulation.hpp"
#include "test_support.hpp"

using namespace rcov;
using testing::error_kind;

namespace {

const std::filesystem::path kData = RCOV_TEST_DATA_DIR;

ScenarioConfig golden_config() { return scenario_from_json(read_json_file(kData / "golden_scenario.json")); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string trace_text(const SimulationResult& r) {
  std::ostringstream s;
  write_trace_csv(s, r.traces);
  return s.str();
}

std::string events_text(const SimulationResult& r) {
  std::ostringstream s;
  write_events_jsonl(s, r.events);
  return s.str();
}

ScenarioConfig single_robot(Vec2 start) {
  ScenarioConfig c;
  c.n = 1;
  c.positions = {start};
  c.socs = {1.0};
  c.energy_enabled = false;
  c.steps = 300;
  return c;
}

}  // namespace

TEST_CASE("a single robot without energy limits settles on the space centroid") {
  const SimulationResult r = simulate(single_robot(Vec2(1.0, 3.2)));
  CHECK_FALSE(r.summary.fatal);
  CHECK(r.summary.transitions == 0);
  CHECK(r.summary.departures == 0);
  const TraceRecord& last = r.traces.back();
  CHECK(last.mode == Mode::Coverage);
  CHECK((last.position - Vec2(2.0, 2.0)).norm() < 1e-3);
  CHECK(last.velocity.norm() < 1e-3);
  REQUIRE(last.centroid);
  CHECK((*last.centroid - Vec2(2.0, 2.0)).norm() < 1e-12);
}

TEST_CASE("a single robot's coverage cost stays above the centroid floor and reaches it") {
  const SimulationResult r = simulate(single_robot(Vec2(0.6, 0.9)));
  const auto& cost = r.summary.coverage_cost;
  REQUIRE(cost.size() == 300);
  // Polar moment of the square about its centroid.
  const double floor = 16.0 * (16.0 + 16.0) / 12.0;
  for (double c : cost) CHECK(c >= floor - 1e-9);
  CHECK(cost.back() == doctest::Approx(floor).epsilon(1e-6));
  CHECK(cost.back() < cost.front());
}

TEST_CASE("identical configurations give byte-identical outputs") {
  const ScenarioConfig c = golden_config();
  const SimulationResult a = simulate(c), b = simulate(c);
  CHECK(trace_text(a) == trace_text(b));
  CHECK(events_text(a) == events_text(b));
}

TEST_CASE("the golden scenario reproduces the frozen trace and events") {
  const SimulationResult r = simulate(golden_config());
  CHECK(trace_text(r) == slurp(kData / "golden" / "trace.csv"));
  CHECK(events_text(r) == slurp(kData / "golden" / "events.jsonl"));
}

TEST_CASE("golden scenario exercises the full recharge cycle") {
  const SimulationResult r = simulate(golden_config());
  const SimulationSummary& s = r.summary;
  CHECK_FALSE(s.fatal);
  CHECK(s.departures == 1);
  CHECK(s.rejoins == 1);
  CHECK(s.transitions == 3);
  CHECK(s.rigidity_checks == s.rigidity_passed);
  CHECK(s.base_reached_before_recharge);
  CHECK(s.min_soc >= 0.0);
}

TEST_CASE("seed changes random initial conditions but not explicit ones") {
  ScenarioConfig c;
  c.n = 4;
  c.steps = 3;
  c.seed = 1;
  const SimulationResult a = simulate(c);
  c.seed = 2;
  const SimulationResult b = simulate(c);
  CHECK(trace_text(a) != trace_text(b));

  ScenarioConfig g = golden_config();
  g.steps = 5;
  const SimulationResult x = simulate(g);
  g.seed = 999;
  CHECK(trace_text(x) == trace_text(simulate(g)));
}

TEST_CASE("random initialisation draws SOCs from the configured range") {
  ScenarioConfig c;
  c.n = 10;
  c.steps = 0;
  c.seed = 5;
  const SimulationResult r = simulate(c);
  CHECK(r.traces.empty());
  // Zero steps still builds the network.
  REQUIRE(!r.events.empty());
  ScenarioConfig one = c;
  one.steps = 1;
  const SimulationResult s = simulate(one);
  REQUIRE(s.traces.size() == 10);
  // One step of drain is at most mu * 2 u_max^2 + gamma.
  for (const TraceRecord& t : s.traces) {
    CHECK(t.soc <= c.soc_max);
    CHECK(t.soc >= c.soc_min - 0.005);
  }
}

TEST_CASE("fleet conservation and trace invariants on a multi-robot run") {
  ScenarioConfig c;
  c.n = 6;
  c.steps = 400;
  c.seed = 3;
  c.soc_min = 0.05;
  c.soc_max = 0.6;
  c.energy.rho_c = 0.05;
  c.energy.s_th = 0.5;
  const SimulationResult r = simulate(c);
  REQUIRE_FALSE(r.summary.fatal);
  CHECK(r.summary.departures >= 1);

  std::map<int, std::set<int>> robots_at;
  for (const TraceRecord& t : r.traces) robots_at[t.k].insert(t.robot);
  CHECK(robots_at.size() == 400);
  for (const auto& [k, ids] : robots_at) CHECK(ids.size() == 6);

  std::map<int, const TraceRecord*> prev;
  for (const TraceRecord& t : r.traces) {
    CHECK(t.soc >= 0.0);
    CHECK(t.soc <= 1.0);
    CHECK(t.centroid.has_value() == (t.mode == Mode::Coverage));
    CHECK(t.cell_cost.has_value() == (t.mode == Mode::Coverage));
    if (prev.count(t.robot)) {
      const TraceRecord& p = *prev[t.robot];
      const int a = mode_number(p.mode), b = mode_number(t.mode);
      // Modes cycle 1 -> 2 -> 3 -> 1.
      CHECK((a == b || b == a % 3 + 1));
      if (p.mode == Mode::Recharge && t.mode == Mode::Recharge) {
        CHECK((t.position - p.position).norm() == 0.0);
        CHECK(t.soc >= p.soc);
      }
    }
    prev[t.robot] = &t;
  }
  CHECK(r.summary.max_area_error <= 1e-9);
}

TEST_CASE("every reconfiguration and rejoin is followed by a passing rigidity check") {
  ScenarioConfig c;
  c.n = 7;
  c.steps = 300;
  c.seed = 11;
  c.soc_min = 0.1;
  c.soc_max = 0.4;
  c.energy.rho_c = 0.1;
  c.energy.s_th = 0.4;
  const SimulationResult r = simulate(c);
  REQUIRE_FALSE(r.summary.fatal);
  int structural = 0;
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    const Event& e = r.events[i];
    if (e.kind != EventKind::Reconfiguration && e.kind != EventKind::Rejoin) continue;
    ++structural;
    bool found = false;
    for (std::size_t j = i + 1; j < r.events.size() && r.events[j].k == e.k; ++j)
      if (r.events[j].kind == EventKind::RigidityCheck) {
        CHECK(r.events[j].payload.at("pass").get<bool>());
        found = true;
        break;
      }
    CHECK(found);
  }
  CHECK(structural >= 2);
  CHECK(r.summary.rigidity_checks == r.summary.rigidity_passed);
}

TEST_CASE("departure events carry the robot, SOC and return horizon") {
  const SimulationResult r = simulate(golden_config());
  int departures = 0;
  for (const Event& e : r.events)
    if (e.kind == EventKind::Departure) {
      ++departures;
      CHECK(e.payload.at("robot").get<int>() == 2);
      CHECK(e.payload.at("tau_star").get<int>() > 0);
      CHECK(e.payload.at("soc").get<double>() > 0.0);
    }
  CHECK(departures == 1);
}

TEST_CASE("energy exhaustion is fatal and stops the run") {
  ScenarioConfig c;
  c.n = 2;
  c.positions = {Vec2(3.5, 3.5), Vec2(2.0, 3.0)};
  c.socs = {0.001, 1.0};
  c.steps = 100;
  const SimulationResult r = simulate(c);
  CHECK(r.summary.fatal);
  CHECK(r.summary.steps_run < 100);
  REQUIRE_FALSE(r.events.empty());
  CHECK(r.events.back().kind == EventKind::Fatal);
}

TEST_CASE("optional per-step outputs are produced only on request") {
  ScenarioConfig c = golden_config();
  c.steps = 10;
  const SimulationResult plain = simulate(c);
  CHECK(plain.cell_dump.empty());
  CHECK(plain.solver_log.empty());
  c.dump_cells = true;
  c.verbose_solver = true;
  const SimulationResult full = simulate(c);
  CHECK(full.cell_dump.size() == 10);
  CHECK(!full.solver_log.empty());
  CHECK(trace_text(plain) == trace_text(full));
}

TEST_CASE("base slots lie inside the base disk and are distinct") {
  const auto slots = base_slots(Vec2(1, 1), 0.2, 5);
  REQUIRE(slots.size() == 5);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    CHECK((slots[i] - Vec2(1, 1)).norm() <= 0.2);
    for (std::size_t j = 0; j < i; ++j) CHECK((slots[i] - slots[j]).norm() > 1e-3);
  }
}

TEST_CASE("invalid scenarios are rejected before running") {
  ScenarioConfig c;
  c.n = 2;
  c.positions = {Vec2(1, 1)};
  CHECK(error_kind([&] { simulate(c); }) == ErrorKind::InvalidArgument);
  c.positions = {Vec2(1, 1), Vec2(9, 9)};
  CHECK(error_kind([&] { simulate(c); }) == ErrorKind::InvalidArgument);
  c.positions.clear();
  c.socs = {0.5, 1.5};
  CHECK(error_kind([&] { simulate(c); }) == ErrorKind::InvalidArgument);
  c.socs.clear();
  c.base = Vec2(-1, 0);
  CHECK(error_kind([&] { simulate(c); }) == ErrorKind::InvalidArgument);
  c.base = Vec2(0.5, 0.5);
  c.space = {Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)};
  CHECK(error_kind([&] { simulate(c); }) == ErrorKind::DegeneratePolygon);
}

TEST_CASE("event kinds round-trip through their names") {
  for (EventKind k : {EventKind::ModeTransition, EventKind::Departure, EventKind::Reconfiguration, EventKind::Rejoin,
                      EventKind::RigidityCheck, EventKind::Warning, EventKind::Fatal})
    CHECK(event_kind_from_string(to_string(k)) == k);
  CHECK_FALSE(event_kind_from_string("Explosion").has_value());
}
