#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcov/network.hpp"
#include "rcov/planner.hpp"
#include "rcov/simulation.hpp"

namespace rcov {

// All readers throw Error(ParseError) on malformed or inconsistent input.

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Missing keys keep their defaults; unknown keys are rejected.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& c);

/// {"positions": [[x, y], ...], "edges": [[i, j], ...]}
Framework framework_from_json(const nlohmann::json& j);
nlohmann::json framework_to_json(const Framework& fw);
nlohmann::json record_to_json(const HennebergRecord& record);

RobotModel model_from_json(const nlohmann::json& j, RobotModel base = {});
EnergyParams energy_from_json(const nlohmann::json& j, EnergyParams base = {});
nlohmann::json plan_to_json(const ReturnPlan& plan);

inline constexpr const char* kTraceHeader = "k,robot,mode,x,y,vx,vy,soc,level,cx,cy,cell_cost";

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& traces);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

nlohmann::json event_to_json(const Event& e);
void write_events_jsonl(std::ostream& out, const std::vector<Event>& events);
std::vector<Event> read_events_jsonl(std::istream& in);

nlohmann::json summary_to_json(const SimulationSummary& s);
nlohmann::json cells_to_json(const std::vector<VoronoiCell>& cells);
std::vector<VoronoiCell> cells_from_json(const nlohmann::json& j);

/// trace.csv, events.jsonl, summary.json, final_cells.json, plus
/// cells.jsonl / solver.csv when the corresponding flags produced data.
void write_outputs(const SimulationResult& result, const std::filesystem::path& dir);

/// Shortest round-trip decimal form, used for every number in the CSV.
std::string format_number(double v);

}  // namespace rcov
