#include "rcov/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "rcov/error.hpp"

namespace rcov {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

Vec2 to_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    parse_error(what + ": expected [x, y]");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

std::vector<Vec2> to_points(const json& j, const std::string& what) {
  if (!j.is_array()) parse_error(what + ": expected an array of points");
  std::vector<Vec2> out;
  for (const json& p : j) out.push_back(to_point(p, what));
  return out;
}

json from_point(const Vec2& p) { return json::array({p.x(), p.y()}); }

json from_points(const std::vector<Vec2>& pts) {
  json out = json::array();
  for (const Vec2& p : pts) out.push_back(from_point(p));
  return out;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) parse_error(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) parse_error(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    parse_error(std::string("key '") + key + "': " + e.what());
  }
}

double parse_double(const std::string& s, const std::string& what) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) parse_error(what + ": bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) parse_error(what + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    parse_error(path.string() + ": " + e.what());
  }
}

RobotModel model_from_json(const json& j, RobotModel m) {
  check_keys(j, {"kind", "dt", "u_max", "v_max", "pos_min", "pos_max", "r_safe"}, "model");
  if (j.contains("kind")) {
    const std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
    if (kind == "double_integrator") m.kind = ModelKind::DoubleIntegrator;
    else if (kind == "single_integrator") m.kind = ModelKind::SingleIntegrator;
    else parse_error("model.kind must be double_integrator or single_integrator");
  }
  read(j, "dt", m.dt);
  read(j, "u_max", m.u_max);
  read(j, "v_max", m.v_max);
  if (j.contains("pos_min")) m.pos_min = to_point(j["pos_min"], "model.pos_min");
  if (j.contains("pos_max")) m.pos_max = to_point(j["pos_max"], "model.pos_max");
  return m;
}

EnergyParams energy_from_json(const json& j, EnergyParams e) {
  check_keys(j, {"mu", "gamma", "s_th", "rho_c", "s_max", "guard_margin", "stale_threshold", "base", "base_radius",
                 "enabled"},
             "energy");
  read(j, "mu", e.mu);
  read(j, "gamma", e.gamma);
  read(j, "s_th", e.s_th);
  read(j, "rho_c", e.rho_c);
  read(j, "s_max", e.s_max);
  read(j, "guard_margin", e.guard_margin);
  read(j, "stale_threshold", e.stale_threshold);
  read(j, "base_radius", e.base_radius);
  if (j.contains("base")) e.base = to_point(j["base"], "energy.base");
  return e;
}

ScenarioConfig scenario_from_json(const json& j) {
  check_keys(j, {"space", "n", "positions", "socs", "init_region", "soc_range", "min_separation", "base",
                 "base_radius", "model", "energy", "mpc", "network", "steps", "seed", "output_dir", "dump_cells",
                 "verbose_solver", "replan_rate", "max_replan_interval"},
             "scenario");
  ScenarioConfig c;
  if (j.contains("space")) c.space = to_points(j["space"], "space");
  read(j, "n", c.n);
  if (j.contains("positions")) c.positions = to_points(j["positions"], "positions");
  read(j, "socs", c.socs);
  if (j.contains("positions") && !j.contains("n")) c.n = static_cast<int>(c.positions.size());
  if (j.contains("init_region")) {
    const auto box = to_points(j["init_region"], "init_region");
    if (box.size() != 2) parse_error("init_region: expected [[xmin, ymin], [xmax, ymax]]");
    c.init_region = std::make_pair(box[0], box[1]);
  }
  if (j.contains("soc_range")) {
    const Vec2 r = to_point(j["soc_range"], "soc_range");
    c.soc_min = r.x();
    c.soc_max = r.y();
  }
  read(j, "min_separation", c.min_separation);
  if (j.contains("base")) c.base = to_point(j["base"], "base");
  read(j, "base_radius", c.base_radius);
  if (j.contains("model")) {
    c.model = model_from_json(j["model"], c.model);
    read(j["model"], "r_safe", c.r_safe);
  }
  if (j.contains("energy")) {
    c.energy = energy_from_json(j["energy"], c.energy);
    read(j["energy"], "enabled", c.energy_enabled);
  }
  if (j.contains("mpc")) {
    const json& m = j["mpc"];
    check_keys(m, {"N", "q_position", "q_velocity", "r_input", "p_scale", "tracking_weight", "lambda", "tol", "max_iter"},
               "mpc");
    read(m, "N", c.mpc.N);
    read(m, "q_position", c.mpc.q_position);
    read(m, "q_velocity", c.mpc.q_velocity);
    read(m, "r_input", c.mpc.r_input);
    read(m, "p_scale", c.mpc.p_scale);
    if (m.contains("tracking_weight") && m["tracking_weight"].is_string()) {
      if (m["tracking_weight"] != "inf") parse_error("mpc.tracking_weight: number or \"inf\"");
      c.mpc.tracking_weight = std::numeric_limits<double>::infinity();
    } else {
      read(m, "tracking_weight", c.mpc.tracking_weight);
    }
    read(m, "lambda", c.mpc.lambda);
    read(m, "tol", c.mpc.tol);
    read(m, "max_iter", c.mpc.max_iter);
  }
  if (j.contains("network")) {
    const json& nw = j["network"];
    check_keys(nw, {"edge_split_probability", "allow_level_fallback", "jitter_retries", "jitter_scale"}, "network");
    read(nw, "edge_split_probability", c.network.edge_split_probability);
    read(nw, "allow_level_fallback", c.network.allow_level_fallback);
    read(nw, "jitter_retries", c.network.jitter_retries);
    read(nw, "jitter_scale", c.network.jitter_scale);
  }
  read(j, "steps", c.steps);
  read(j, "seed", c.seed);
  read(j, "output_dir", c.output_dir);
  read(j, "dump_cells", c.dump_cells);
  read(j, "verbose_solver", c.verbose_solver);
  read(j, "replan_rate", c.replan_rate);
  read(j, "max_replan_interval", c.max_replan_interval);
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["space"] = from_points(c.space);
  j["n"] = c.n;
  if (!c.positions.empty()) j["positions"] = from_points(c.positions);
  if (!c.socs.empty()) j["socs"] = c.socs;
  if (c.init_region) j["init_region"] = from_points({c.init_region->first, c.init_region->second});
  j["soc_range"] = json::array({c.soc_min, c.soc_max});
  j["min_separation"] = c.min_separation;
  j["base"] = from_point(c.base);
  j["base_radius"] = c.base_radius;
  j["model"] = {{"kind", c.model.kind == ModelKind::DoubleIntegrator ? "double_integrator" : "single_integrator"},
                {"dt", c.model.dt},
                {"u_max", c.model.u_max},
                {"v_max", c.model.v_max},
                {"r_safe", c.r_safe}};
  j["energy"] = {{"mu", c.energy.mu},       {"gamma", c.energy.gamma},
                 {"s_th", c.energy.s_th},   {"rho_c", c.energy.rho_c},
                 {"s_max", c.energy.s_max}, {"guard_margin", c.energy.guard_margin},
                 {"stale_threshold", c.energy.stale_threshold}, {"enabled", c.energy_enabled}};
  j["mpc"] = {{"N", c.mpc.N},
              {"q_position", c.mpc.q_position},
              {"q_velocity", c.mpc.q_velocity},
              {"r_input", c.mpc.r_input},
              {"p_scale", c.mpc.p_scale},
              {"lambda", c.mpc.lambda},
              {"tol", c.mpc.tol},
              {"max_iter", c.mpc.max_iter}};
  if (std::isinf(c.mpc.tracking_weight)) j["mpc"]["tracking_weight"] = "inf";
  else j["mpc"]["tracking_weight"] = c.mpc.tracking_weight;
  j["network"] = {{"edge_split_probability", c.network.edge_split_probability},
                  {"allow_level_fallback", c.network.allow_level_fallback},
                  {"jitter_retries", c.network.jitter_retries},
                  {"jitter_scale", c.network.jitter_scale}};
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["dump_cells"] = c.dump_cells;
  j["verbose_solver"] = c.verbose_solver;
  j["replan_rate"] = c.replan_rate;
  j["max_replan_interval"] = c.max_replan_interval;
  return j;
}

Framework framework_from_json(const json& j) {
  check_keys(j, {"positions", "edges", "record", "warnings", "jitter_attempts"}, "framework");
  if (!j.contains("positions") || !j.contains("edges")) parse_error("framework needs positions and edges");
  const std::vector<Vec2> pts = to_points(j["positions"], "positions");
  Graph g(static_cast<int>(pts.size()));
  if (!j["edges"].is_array()) parse_error("edges: expected an array");
  for (const json& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      parse_error("edges: expected [i, j] integer pairs");
    try {
      g.add_edge(e[0].get<int>(), e[1].get<int>());
    } catch (const Error& err) {
      parse_error(std::string("edges: ") + err.what());
    }
  }
  try {
    return Framework(std::move(g), Configuration(pts));
  } catch (const Error& err) {
    parse_error(std::string("positions: ") + err.what());
  }
}

json framework_to_json(const Framework& fw) {
  json j;
  j["positions"] = from_points(std::vector<Vec2>(fw.config.points().begin(), fw.config.points().end()));
  json edges = json::array();
  for (const Edge& e : fw.graph.edges()) edges.push_back(json::array({e.a, e.b}));
  j["edges"] = edges;
  return j;
}

json record_to_json(const HennebergRecord& record) {
  json steps = json::array();
  for (const HennebergStep& s : record.steps) {
    json o{{"kind", s.kind == HennebergStep::Kind::VertexAddition ? "vertex_addition" : "edge_splitting"},
           {"v", s.v},
           {"i", s.i},
           {"j", s.j},
           {"relaxed", s.relaxed}};
    if (s.kind == HennebergStep::Kind::EdgeSplitting) o["k"] = s.k;
    steps.push_back(o);
  }
  return json{{"v1", record.v1}, {"v2", record.v2}, {"steps", steps}};
}

json plan_to_json(const ReturnPlan& plan) {
  json states = json::array(), inputs = json::array();
  for (const auto& x : plan.trajectory.states) states.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  for (const Vec2& u : plan.trajectory.inputs) inputs.push_back(from_point(u));
  return json{{"tau_star", plan.tau_star}, {"energy_required", plan.energy_required}, {"states", states},
              {"inputs", inputs}};
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& traces) {
  out << kTraceHeader << '\n';
  for (const TraceRecord& t : traces) {
    out << t.k << ',' << t.robot << ',' << mode_number(t.mode) << ',' << format_number(t.position.x()) << ','
        << format_number(t.position.y()) << ',' << format_number(t.velocity.x()) << ','
        << format_number(t.velocity.y()) << ',' << format_number(t.soc) << ',' << t.level << ',';
    if (t.centroid) out << format_number(t.centroid->x()) << ',' << format_number(t.centroid->y());
    else out << ',';
    out << ',';
    if (t.cell_cost) out << format_number(*t.cell_cost);
    out << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) parse_error("trace: missing or unexpected header");
  std::vector<TraceRecord> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    const std::string where = "trace row " + std::to_string(row);
    if (f.size() != 12) parse_error(where + ": expected 12 fields");
    TraceRecord t;
    t.k = parse_int(f[0], where);
    t.robot = parse_int(f[1], where);
    const int mode = parse_int(f[2], where);
    if (mode < 1 || mode > 3) parse_error(where + ": mode must be 1, 2 or 3");
    t.mode = static_cast<Mode>(mode);
    t.position = Vec2(parse_double(f[3], where), parse_double(f[4], where));
    t.velocity = Vec2(parse_double(f[5], where), parse_double(f[6], where));
    t.soc = parse_double(f[7], where);
    t.level = parse_int(f[8], where);
    if (!f[9].empty()) t.centroid = Vec2(parse_double(f[9], where), parse_double(f[10], where));
    if (!f[11].empty()) t.cell_cost = parse_double(f[11], where);
    out.push_back(t);
  }
  return out;
}

json event_to_json(const Event& e) { return json{{"k", e.k}, {"kind", to_string(e.kind)}, {"payload", e.payload}}; }

void write_events_jsonl(std::ostream& out, const std::vector<Event>& events) {
  for (const Event& e : events) out << event_to_json(e).dump() << '\n';
}

std::vector<Event> read_events_jsonl(std::istream& in) {
  std::vector<Event> out;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      parse_error("events line " + std::to_string(row) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("k") || !j.contains("kind") || !j["k"].is_number_integer() ||
        !j["kind"].is_string())
      parse_error("events line " + std::to_string(row) + ": expected {k, kind, payload}");
    const auto kind = event_kind_from_string(j["kind"].get<std::string>());
    if (!kind) parse_error("events line " + std::to_string(row) + ": unknown kind");
    out.push_back(Event{j["k"].get<int>(), *kind, j.value("payload", json::object())});
  }
  return out;
}

json summary_to_json(const SimulationSummary& s) {
  return json{{"n", s.n},
              {"steps_requested", s.steps_requested},
              {"steps_run", s.steps_run},
              {"min_soc", s.min_soc},
              {"final_socs", s.final_socs},
              {"coverage_cost", s.coverage_cost},
              {"max_area_error", s.max_area_error},
              {"rigidity_checks", {{"total", s.rigidity_checks}, {"passed", s.rigidity_passed}}},
              {"transitions", s.transitions},
              {"departures", s.departures},
              {"rejoins", s.rejoins},
              {"warnings", s.warnings},
              {"return_plans", s.return_plans},
              {"base_reached_before_recharge", s.base_reached_before_recharge},
              {"fatal", s.fatal},
              {"fatal_message", s.fatal_message}};
}

json cells_to_json(const std::vector<VoronoiCell>& cells) {
  json out = json::array();
  for (const VoronoiCell& c : cells)
    out.push_back(json{{"owner", c.owner}, {"polygon", from_points(c.polygon)}, {"centroid", from_point(c.centroid)},
                       {"mass", c.mass}});
  return out;
}

std::vector<VoronoiCell> cells_from_json(const json& j) {
  if (!j.is_array()) parse_error("cells: expected an array");
  std::vector<VoronoiCell> out;
  for (const json& c : j) {
    if (!c.is_object() || !c.contains("owner") || !c.contains("polygon")) parse_error("cells: expected owner and polygon");
    VoronoiCell cell;
    read(c, "owner", cell.owner);
    cell.polygon = to_points(c["polygon"], "cell polygon");
    if (c.contains("centroid")) cell.centroid = to_point(c["centroid"], "cell centroid");
    read(c, "mass", cell.mass);
    out.push_back(std::move(cell));
  }
  return out;
}

void write_outputs(const SimulationResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("trace.csv");
    write_trace_csv(f, result.traces);
  }
  {
    auto f = open("events.jsonl");
    write_events_jsonl(f, result.events);
  }
  {
    auto f = open("summary.json");
    f << summary_to_json(result.summary).dump(2) << '\n';
  }
  {
    auto f = open("final_cells.json");
    f << cells_to_json(result.final_cells).dump() << '\n';
  }
  if (!result.cell_dump.empty()) {
    auto f = open("cells.jsonl");
    for (std::size_t k = 0; k < result.cell_dump.size(); ++k)
      f << json{{"k", k}, {"cells", cells_to_json(result.cell_dump[k])}}.dump() << '\n';
  }
  if (!result.solver_log.empty()) {
    auto f = open("solver.csv");
    f << "k,robot,iterations,kkt_residual,warning\n";
    for (const SolverRecord& s : result.solver_log)
      f << s.k << ',' << s.robot << ',' << s.iterations << ',' << format_number(s.kkt_residual) << ','
        << (s.warning ? 1 : 0) << '\n';
  }
}

}  // namespace rcov
