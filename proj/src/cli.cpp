#include "rcov/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>
#include <ostream>

#include "rcov/error.hpp"
#include "rcov/io.hpp"
#include "rcov/planner.hpp"
#include "rcov/plots.hpp"
#include "rcov/simulation.hpp"

namespace rcov {

namespace {

using nlohmann::json;

int exit_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::CoincidentPoints:
    case ErrorKind::DegeneratePolygon:
    case ErrorKind::ModelUnsupported:
      return kExitInputError;
    default:
      return kExitPropertyFailure;
  }
}

int simulate_cmd(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 std::optional<int> steps, bool dump_cells, bool verbose, std::ostream& out) {
  ScenarioConfig cfg = scenario_from_json(read_json_file(config_path));
  if (seed) cfg.seed = *seed;
  if (steps) cfg.steps = *steps;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.dump_cells = cfg.dump_cells || dump_cells;
  cfg.verbose_solver = cfg.verbose_solver || verbose;
  const SimulationResult r = simulate(cfg);
  write_outputs(r, cfg.output_dir);
  const SimulationSummary& s = r.summary;
  out << "steps " << s.steps_run << '/' << s.steps_requested << ", min SOC " << s.min_soc << ", departures "
      << s.departures << ", rejoins " << s.rejoins << ", rigidity checks " << s.rigidity_passed << '/'
      << s.rigidity_checks << '\n';
  if (s.fatal) {
    out << "fatal: " << s.fatal_message << '\n';
    return kExitFatal;
  }
  return kExitOk;
}

int check_rigidity_cmd(const std::string& path, std::ostream& out) {
  const Framework fw = framework_from_json(read_json_file(path));
  const IbrReport rep = is_ibr(fw);
  out << "vertices " << fw.vertex_count() << ", edges " << fw.graph.edge_count() << ", rank " << rep.rank
      << ", nullity " << rep.nullity << ", rigid " << (rep.rigid ? "true" : "false") << '\n';
  return rep.rigid ? kExitOk : kExitPropertyFailure;
}

int build_network_cmd(const std::string& in_path, const std::string& out_path, std::ostream& out) {
  const json j = read_json_file(in_path);
  if (!j.is_object() || !j.contains("positions") || !j.contains("socs"))
    throw Error(ErrorKind::ParseError, "build-network input needs positions and socs");
  const Framework pts = framework_from_json(json{{"positions", j["positions"]}, {"edges", json::array()}});
  std::vector<double> socs;
  std::uint64_t seed = 0;
  try {
    socs = j["socs"].get<std::vector<double>>();
    seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  BuildOptions opts;
  if (j.contains("edge_split_probability")) opts.edge_split_probability = j["edge_split_probability"].get<double>();
  const NetworkBuild b = build_network(pts.config, socs, seed, opts);
  json result = framework_to_json(b.framework);
  result["record"] = record_to_json(b.record);
  result["warnings"] = b.warnings;
  result["jitter_attempts"] = b.jitter_attempts;
  std::ofstream f(out_path);
  if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + out_path);
  f << result.dump(2) << '\n';
  out << "built " << b.framework.vertex_count() << " vertices, " << b.framework.graph.edge_count() << " edges\n";
  return kExitOk;
}

int plan_return_cmd(const std::string& in_path, std::ostream& out) {
  const json j = read_json_file(in_path);
  if (!j.is_object() || !j.contains("state") || !j.contains("base"))
    throw Error(ErrorKind::ParseError, "plan-return input needs state and base");
  const RobotModel model = j.contains("model") ? model_from_json(j["model"]) : RobotModel{};
  const EnergyParams energy = j.contains("energy") ? energy_from_json(j["energy"]) : EnergyParams{};
  std::vector<double> state;
  std::vector<Obstacle> obstacles;
  Vec2 base;
  try {
    state = j["state"].get<std::vector<double>>();
    const auto b = j["base"].get<std::vector<double>>();
    if (b.size() != 2) throw Error(ErrorKind::ParseError, "base must be [x, y]");
    base = Vec2(b[0], b[1]);
    for (const json& o : j.value("obstacles", json::array())) {
      const auto c = o.at("center").get<std::vector<double>>();
      if (c.size() != 2) throw Error(ErrorKind::ParseError, "obstacle center must be [x, y]");
      obstacles.push_back(Obstacle{Vec2(c[0], c[1]), o.at("radius").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  if (static_cast<int>(state.size()) != model.state_dim())
    throw Error(ErrorKind::ParseError, "state dimension does not match the model");
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
  const ReturnPlan plan = min_time_return(x0, base, model, obstacles, energy);
  out << plan_to_json(plan).dump() << '\n';
  return kExitOk;
}

int plot_cmd(const std::string& trace_path, const std::string& events_path, const std::string& out_dir,
             const std::string& cells_path, std::ostream& out) {
  std::ifstream tf(trace_path);
  if (!tf) throw Error(ErrorKind::ParseError, "cannot open " + trace_path);
  const auto traces = read_trace_csv(tf);
  std::vector<Event> events;
  if (!events_path.empty()) {
    std::ifstream ef(events_path);
    if (!ef) throw Error(ErrorKind::ParseError, "cannot open " + events_path);
    events = read_events_jsonl(ef);
  }
  PlotOptions opts;
  std::filesystem::path cells = cells_path;
  if (cells.empty()) cells = std::filesystem::path(trace_path).parent_path() / "final_cells.json";
  if (std::filesystem::exists(cells)) opts.final_cells = cells_from_json(read_json_file(cells));
  for (const auto& p : render_plots(traces, events, out_dir, opts)) out << p.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-aware rigid multi-robot coverage simulator", "rcov"};
  app.require_subcommand(1);

  std::string config, out_dir, framework, input, output, trace, events, cells;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  bool dump_cells = false, verbose = false;

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write trace, events and summary");
  sim->add_option("--config", config, "Scenario JSON")->required();
  sim->add_option("--out", out_dir, "Output directory (overrides the scenario)");
  sim->add_option("--seed", seed, "Seed override");
  sim->add_option("--steps", steps, "Step count override");
  sim->add_flag("--dump-cells", dump_cells, "Write per-step Voronoi cells");
  sim->add_flag("--verbose-solver", verbose, "Write per-step MPC solver statistics");

  auto* rig = app.add_subcommand("check-rigidity", "Infinitesimal bearing rigidity of a framework file");
  rig->add_option("--framework", framework, "Framework JSON")->required();

  auto* net = app.add_subcommand("build-network", "Energy-aware rigid network construction");
  net->add_option("--input", input, "Positions and SOCs JSON")->required();
  net->add_option("--out", output, "Output framework JSON")->required();

  auto* plan = app.add_subcommand("plan-return", "Minimum-time return plan");
  plan->add_option("--input", input, "State, base and model JSON")->required();

  auto* plot = app.add_subcommand("plot", "Render SVG plots from a trace");
  plot->add_option("--trace", trace, "trace.csv")->required();
  plot->add_option("--events", events, "events.jsonl");
  plot->add_option("--out", out_dir, "Output directory")->required();
  plot->add_option("--cells", cells, "Final cells JSON (default: next to the trace)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (*sim) return simulate_cmd(config, out_dir, seed, steps, dump_cells, verbose, out);
    if (*rig) return check_rigidity_cmd(framework, out);
    if (*net) return build_network_cmd(input, output, out);
    if (*plan) return plan_return_cmd(input, out);
    if (*plot) return plot_cmd(trace, events, out_dir, cells, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << "ParseError: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace rcov
