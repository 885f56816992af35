#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcov/coverage.hpp"
#include "rcov/energy.hpp"
#include "rcov/model.hpp"
#include "rcov/mpc.hpp"
#include "rcov/network.hpp"

namespace rcov {

struct ScenarioConfig {
  std::vector<Vec2> space{Vec2(0, 0), Vec2(4, 0), Vec2(4, 4), Vec2(0, 4)};
  int n = 10;
  // Explicit initial positions / SOCs; empty means seeded random.
  std::vector<Vec2> positions;
  std::vector<double> socs;
  // Random initialization: positions uniform in the box, rejected when
  // closer than min_separation to another robot or near the base.
  std::optional<std::pair<Vec2, Vec2>> init_region;  // default: space bounding box
  double soc_min = 0.4;
  double soc_max = 1.0;
  double min_separation = 0.25;

  Vec2 base = Vec2(0.5, 0.5);
  double base_radius = 0.15;
  RobotModel model;  // bounds are overwritten with the space bounding box
  double r_safe = 0.1;
  EnergyParams energy;
  bool energy_enabled = true;
  MpcConfig mpc;
  BuildOptions network;

  int steps = 2000;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool dump_cells = false;
  bool verbose_solver = false;
  // SOC headroom assumed consumed per step when scheduling the next return
  // plan of a coverage robot.
  double replan_rate = 0.01;
  int max_replan_interval = 50;

  /// Model with bounds set to the space bounding box; energy params with
  /// the base filled in and the default guard margin applied.
  RobotModel effective_model() const;
  EnergyParams effective_energy() const;

  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;
};

enum class EventKind { ModeTransition, Departure, Reconfiguration, Rejoin, RigidityCheck, Warning, Fatal };

const char* to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(const std::string& s);

struct Event {
  int k = 0;
  EventKind kind = EventKind::Warning;
  nlohmann::json payload = nlohmann::json::object();
};

struct TraceRecord {
  int k = 0;
  int robot = 0;
  Mode mode = Mode::Coverage;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double soc = 0.0;
  int level = 1;
  std::optional<Vec2> centroid;     // coverage robots only
  std::optional<double> cell_cost;  // coverage robots only
};

struct SolverRecord {
  int k = 0;
  int robot = 0;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool warning = false;
};

struct SimulationSummary {
  int n = 0;
  int steps_requested = 0;
  int steps_run = 0;
  double min_soc = 1.0;
  std::vector<double> final_socs;
  std::vector<double> coverage_cost;  // per step, coverage robots before moving
  double max_area_error = 0.0;        // relative, over all partitions
  int rigidity_checks = 0;
  int rigidity_passed = 0;
  int transitions = 0;
  int departures = 0;
  int rejoins = 0;
  int warnings = 0;
  int return_plans = 0;
  bool base_reached_before_recharge = true;
  bool fatal = false;
  std::string fatal_message;
};

struct SimulationResult {
  std::vector<TraceRecord> traces;
  std::vector<Event> events;
  SimulationSummary summary;
  std::vector<VoronoiCell> final_cells;             // owner = robot id
  std::vector<std::vector<VoronoiCell>> cell_dump;  // per step, with dump_cells
  std::vector<SolverRecord> solver_log;             // with verbose_solver
};

/// Runs the coverage / return / recharge loop. Library errors raised inside
/// the loop that invalidate the run (energy exhaustion, failed repair) end
/// it with a Fatal event; configuration errors throw.
SimulationResult simulate(const ScenarioConfig& config);

/// Per-robot base slots on a circle of 0.6 base radii.
std::vector<Vec2> base_slots(const Vec2& base, double base_radius, int n);

}  // namespace rcov
