#include "rcov/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "rcov/error.hpp"
#include "rcov/planner.hpp"
#include "rcov/reconfig.hpp"

namespace rcov {

namespace {

using nlohmann::json;

json point_json(const Vec2& p) { return json::array({p.x(), p.y()}); }

struct RobotState {
  int id = 0;
  Eigen::VectorXd x;
  EnergyState energy;
  Vec2 slot = Vec2::Zero();
  int next_plan_k = 0;
};

// Fleet network over the coverage robots; vertex v is robot members[v].
struct Network {
  Framework framework;
  HennebergRecord record;
  std::vector<int> members;

  int vertex_of(int robot) const {
    const auto it = std::find(members.begin(), members.end(), robot);
    return it == members.end() ? -1 : static_cast<int>(it - members.begin());
  }
};

class Simulator {
 public:
  explicit Simulator(const ScenarioConfig& cfg)
      : cfg_(cfg), model_(cfg.effective_model()), energy_(cfg.effective_energy()), space_(cfg.space) {}

  SimulationResult run();

 private:
  void emit(int k, EventKind kind, json payload) {
    if (kind == EventKind::Warning) ++result_.summary.warnings;
    result_.events.push_back(Event{k, kind, std::move(payload)});
  }
  void fatal(int k, const std::string& message) {
    emit(k, EventKind::Fatal, json{{"message", message}});
    result_.summary.fatal = true;
    result_.summary.fatal_message = message;
  }

  void initialize();
  void build_initial_network();
  bool rigidity_check(int k, const std::string& cause);
  std::optional<ReturnPlan> plan_for(int k, RobotState& r);
  bool step(int k);
  bool handle_departures(int k, const std::vector<int>& departing);
  bool handle_rejoins(int k, const std::vector<int>& joining);
  std::vector<double> member_socs() const;
  void refresh_positions();

  ScenarioConfig cfg_;
  RobotModel model_;
  EnergyParams energy_;
  MissionSpace space_;
  std::vector<RobotState> robots_;
  std::vector<TrackingController> controllers_;
  Network net_;
  SimulationResult result_;
};

void Simulator::initialize() {
  std::mt19937_64 rng(cfg_.seed);
  const int n = cfg_.n;
  std::vector<Vec2> pos = cfg_.positions;
  if (pos.empty()) {
    const Vec2 lo = cfg_.init_region ? cfg_.init_region->first : space_.lower();
    const Vec2 hi = cfg_.init_region ? cfg_.init_region->second : space_.upper();
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
    const double keep_out = cfg_.base_radius + 2.0 * cfg_.r_safe;
    for (int attempt = 0; static_cast<int>(pos.size()) < n; ++attempt) {
      if (attempt > 100000) throw Error(ErrorKind::InvalidArgument, "cannot place robots with the requested separation");
      const Vec2 p(ux(rng), uy(rng));
      if (!space_.contains(p) || (p - cfg_.base).norm() < keep_out) continue;
      bool clear = true;
      for (const Vec2& q : pos) clear = clear && (p - q).norm() >= cfg_.min_separation;
      if (clear) pos.push_back(p);
    }
  }
  std::vector<double> socs = cfg_.socs;
  if (socs.empty()) {
    std::uniform_real_distribution<double> us(cfg_.soc_min, cfg_.soc_max);
    for (int i = 0; i < n; ++i) socs.push_back(us(rng));
  }
  const std::vector<Vec2> slots = base_slots(cfg_.base, cfg_.base_radius, n);
  for (int i = 0; i < n; ++i) {
    RobotState r;
    r.id = i;
    r.x = model_.rest_state(pos[static_cast<std::size_t>(i)]);
    r.energy = EnergyState{socs[static_cast<std::size_t>(i)], Mode::Coverage, std::nullopt, 0};
    r.slot = slots[static_cast<std::size_t>(i)];
    robots_.push_back(std::move(r));
    controllers_.emplace_back(model_, cfg_.mpc);
  }
  result_.summary.n = n;
  result_.summary.steps_requested = cfg_.steps;
  result_.summary.min_soc = *std::min_element(socs.begin(), socs.end());
}

std::vector<double> Simulator::member_socs() const {
  std::vector<double> s;
  for (int id : net_.members) s.push_back(robots_[static_cast<std::size_t>(id)].energy.soc);
  return s;
}

void Simulator::refresh_positions() {
  std::vector<Vec2> pts;
  for (int id : net_.members) pts.push_back(RobotModel::position(robots_[static_cast<std::size_t>(id)].x));
  net_.framework = Framework(net_.framework.graph, Configuration(pts));
}

void Simulator::build_initial_network() {
  for (const RobotState& r : robots_) net_.members.push_back(r.id);
  std::vector<Vec2> pts;
  for (int id : net_.members) pts.push_back(RobotModel::position(robots_[static_cast<std::size_t>(id)].x));
  if (pts.size() < 2) {
    net_.framework = Framework(Graph(static_cast<int>(pts.size())), Configuration(pts));
    return;
  }
  const std::vector<double> socs = member_socs();
  NetworkBuild b = build_network(Configuration(pts), socs, cfg_.seed, cfg_.network);
  for (const std::string& w : b.warnings) emit(0, EventKind::Warning, json{{"message", w}});
  net_.framework = std::move(b.framework);
  net_.record = std::move(b.record);
  rigidity_check(0, "build");
}

bool Simulator::rigidity_check(int k, const std::string& cause) {
  const int n = net_.framework.vertex_count();
  json payload{{"cause", cause}, {"vertices", n}, {"edges", net_.framework.graph.edge_count()}};
  bool pass = true;
  if (n >= 2) {
    const IbrReport rep = is_ibr(net_.framework);
    pass = rep.rigid && net_.framework.graph.edge_count() == 2 * n - 3;
    payload["rank"] = rep.rank;
    payload["expected_rank"] = 2 * n - 3;
  }
  payload["pass"] = pass;
  ++result_.summary.rigidity_checks;
  if (pass) ++result_.summary.rigidity_passed;
  emit(k, EventKind::RigidityCheck, std::move(payload));
  if (!pass) fatal(k, "network lost infinitesimal bearing rigidity after " + cause);
  return pass;
}

std::optional<ReturnPlan> Simulator::plan_for(int k, RobotState& r) {
  if (k < r.next_plan_k) return std::nullopt;
  std::vector<Obstacle> obstacles;
  const double near_base = cfg_.base_radius + 2.0 * cfg_.r_safe;
  for (const RobotState& o : robots_) {
    if (o.id == r.id || o.energy.mode == Mode::Recharge) continue;
    const Vec2 p = RobotModel::position(o.x);
    if ((p - cfg_.base).norm() <= near_base) continue;
    obstacles.push_back(Obstacle{p, cfg_.r_safe});
  }
  std::optional<ReturnPlan> plan;
  try {
    plan = min_time_return(r.x, r.slot, model_, obstacles, energy_);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Unreachable && e.kind() != ErrorKind::SolverFailure) throw;
    emit(k, EventKind::Warning,
         json{{"robot", r.id}, {"message", std::string("return plan retried without obstacles: ") + e.what()}});
    plan = min_time_return(r.x, r.slot, model_, {}, energy_);
  }
  ++result_.summary.return_plans;
  const double headroom = r.energy.soc - plan->energy_required - energy_.guard_margin;
  const int wait = static_cast<int>(std::floor(std::max(0.0, headroom) / cfg_.replan_rate));
  r.next_plan_k = k + std::clamp(wait, 1, cfg_.max_replan_interval);
  return plan;
}

bool Simulator::handle_departures(int k, const std::vector<int>& departing) {
  DepartureBatch batch;
  json ids = json::array();
  for (int id : departing) {
    const RobotState& r = robots_[static_cast<std::size_t>(id)];
    EnergyLevel level = energy_level(r.energy.soc);
    json d{{"robot", id}, {"soc", r.energy.soc}, {"level", level_number(level)},
           {"tau_star", r.energy.plan ? r.energy.plan->tau_star : 0}};
    if (level_number(level) < 3) {
      emit(k, EventKind::Warning,
           json{{"robot", id}, {"message", "departure above level 3 treated as level 3"}, {"level", level_number(level)}});
      level = EnergyLevel::Three;
    }
    emit(k, EventKind::Departure, std::move(d));
    ++result_.summary.departures;
    const int v = net_.vertex_of(id);
    if (v >= 0) batch.departing.push_back(Departure{v, level});
    ids.push_back(id);
  }
  if (batch.departing.empty()) return true;

  refresh_positions();
  const int n = net_.framework.vertex_count();
  const int remaining = n - static_cast<int>(batch.departing.size());
  std::vector<int> survivors_old;
  json payload{{"departed", ids}};
  if (remaining >= 2) {
    std::vector<EnergyLevel> levels;
    for (int id : net_.members) levels.push_back(energy_level(robots_[static_cast<std::size_t>(id)].energy.soc));
    for (const Departure& d : batch.departing) levels[static_cast<std::size_t>(d.vertex)] = d.level;
    ReconfigResult rr;
    try {
      rr = reconfigure(net_.framework, net_.record, batch, levels);
    } catch (const Error& e) {
      fatal(k, std::string("reconfiguration failed: ") + e.what());
      return false;
    }
    auto robot_edges = [&](const std::vector<Edge>& edges) {
      json out = json::array();
      for (const Edge& e : edges)
        out.push_back(json::array({net_.members[static_cast<std::size_t>(e.a)], net_.members[static_cast<std::size_t>(e.b)]}));
      return out;
    };
    payload["removed_edges"] = robot_edges(rr.report.removed_edges);
    payload["added_edges"] = robot_edges(rr.report.added_edges);
    payload["used_fallback"] = rr.report.used_fallback;
    payload["relaxed_levels"] = rr.report.relaxed_levels;
    payload["locality"] = rr.report.locality;
    survivors_old = rr.survivors;
    net_.framework = std::move(rr.framework);
    net_.record = std::move(rr.record);
  } else {
    std::set<int> gone;
    for (const Departure& d : batch.departing) gone.insert(d.vertex);
    std::vector<Vec2> pts;
    for (int v = 0; v < n; ++v)
      if (!gone.count(v)) {
        survivors_old.push_back(v);
        pts.push_back(net_.framework.config[v]);
      }
    net_.framework = Framework(Graph(static_cast<int>(pts.size())), Configuration(pts));
    net_.record = HennebergRecord{};
    payload["used_fallback"] = false;
    payload["note"] = "fewer than two robots remain";
  }
  std::vector<int> members;
  for (int old : survivors_old) members.push_back(net_.members[static_cast<std::size_t>(old)]);
  net_.members = std::move(members);
  payload["members"] = net_.members;
  emit(k, EventKind::Reconfiguration, std::move(payload));
  return rigidity_check(k, "reconfiguration");
}

bool Simulator::handle_rejoins(int k, const std::vector<int>& joining) {
  for (int id : joining) {
    RobotState& r = robots_[static_cast<std::size_t>(id)];
    const Vec2 p = RobotModel::position(r.x);
    json payload{{"robot", id}, {"soc", r.energy.soc}};
    if (net_.framework.vertex_count() == 0) {
      net_.framework = Framework(Graph(1), Configuration({p}));
      net_.record = HennebergRecord{};
    } else {
      try {
        refresh_positions();
        NetworkUpdate up = insert_robot(net_.framework, net_.record, member_socs(), p, r.energy.soc);
        if (!up.record.steps.empty()) {
          const HennebergStep& s = up.record.steps.back();
          payload["anchors"] = json::array({net_.members[static_cast<std::size_t>(s.i)], net_.members[static_cast<std::size_t>(s.j)]});
        }
        payload["relaxed"] = up.relaxed;
        net_.framework = std::move(up.framework);
        net_.record = std::move(up.record);
      } catch (const Error& e) {
        fatal(k, std::string("rejoin failed: ") + e.what());
        return false;
      }
    }
    net_.members.push_back(id);
    controllers_[static_cast<std::size_t>(id)].reset();
    r.next_plan_k = k;
    ++result_.summary.rejoins;
    emit(k, EventKind::Rejoin, std::move(payload));
    if (!rigidity_check(k, "rejoin")) return false;
  }
  return true;
}

bool Simulator::step(int k) {
  // Guards.
  std::vector<int> departing, joining;
  if (cfg_.energy_enabled) {
    for (RobotState& r : robots_) {
      const PlannerHandle handle = [&](const Eigen::VectorXd&) { return plan_for(k, r); };
      const Vec2 before = RobotModel::position(r.x);
      GuardOutcome g;
      try {
        g = evaluate_guard(r.energy, r.x, handle, energy_);
      } catch (const Error& e) {
        fatal(k, std::string("guard evaluation failed: ") + e.what());
        return false;
      }
      if (g.transition) {
        ++result_.summary.transitions;
        const double dist = (before - cfg_.base).norm();
        json payload{{"robot", r.id},
                     {"from", mode_number(g.transition->from)},
                     {"to", mode_number(g.transition->to)},
                     {"soc", g.transition->soc},
                     {"position", point_json(before)},
                     {"distance_to_base", dist}};
        if (g.transition->to == Mode::ReturnToBase) payload["tau_star"] = g.transition->tau_star;
        if (g.transition->to == Mode::Recharge && dist > cfg_.base_radius + 1e-12)
          result_.summary.base_reached_before_recharge = false;
        emit(k, EventKind::ModeTransition, std::move(payload));
        if (g.transition->to == Mode::ReturnToBase) departing.push_back(r.id);
        if (g.transition->to == Mode::Coverage) joining.push_back(r.id);
      }
      if (g.pin_to_base) r.x = model_.rest_state(r.slot);
      r.energy = std::move(g.state);
    }
  }
  if (!departing.empty() && !handle_departures(k, departing)) return false;
  if (!joining.empty() && !handle_rejoins(k, joining)) return false;

  // Partition and references over the coverage robots.
  const std::size_t m = net_.members.size();
  std::vector<Vec2> pts;
  for (int id : net_.members) pts.push_back(RobotModel::position(robots_[static_cast<std::size_t>(id)].x));
  std::map<int, Vec2> centroid;
  std::map<int, double> cell_cost;
  std::vector<Vec2> refs(m, Vec2::Zero());
  double total_cost = 0.0;
  std::vector<VoronoiCell> cells;
  if (m > 0) {
    VoronoiPartition part = voronoi_partition(pts, space_, net_.members);
    for (int j : part.jittered)
      emit(k, EventKind::Warning, json{{"robot", net_.members[static_cast<std::size_t>(j)]}, {"message", "coincident generator jittered"}});
    double area = 0.0;
    for (std::size_t v = 0; v < m; ++v) {
      const VoronoiCell& c = part.cells[v];
      area += c.mass;
      refs[v] = c.centroid;
      const double h = polar_moment(c.polygon, pts[v]);
      centroid[net_.members[v]] = c.centroid;
      cell_cost[net_.members[v]] = h;
      total_cost += h;
    }
    result_.summary.max_area_error =
        std::max(result_.summary.max_area_error, std::abs(area - space_.area()) / space_.area());
    cells = std::move(part.cells);
  }
  result_.summary.coverage_cost.push_back(total_cost);
  if (cfg_.dump_cells) result_.cell_dump.push_back(cells);

  // Inputs.
  std::vector<Vec2> inputs(robots_.size(), Vec2::Zero());
  const auto brake = [&](const Eigen::VectorXd& x) -> Vec2 {
    if (model_.kind != ModelKind::DoubleIntegrator) return Vec2::Zero();
    return (-model_.velocity(x) / model_.dt).cwiseMax(-model_.u_max).cwiseMin(model_.u_max);
  };
  for (std::size_t v = 0; v < m; ++v) {
    const int id = net_.members[v];
    RobotState& r = robots_[static_cast<std::size_t>(id)];
    BearingTargets targets;
    try {
      targets = desired_bearings(refs, net_.framework.graph, static_cast<int>(v));
    } catch (const Error& e) {
      emit(k, EventKind::Warning, json{{"robot", id}, {"message", std::string("bearing targets dropped: ") + e.what()}});
    }
    for (int& j : targets.neighbors) j = net_.members[static_cast<std::size_t>(j)];
    try {
      const MpcControl c = controllers_[static_cast<std::size_t>(id)].step(r.x, refs[v], targets);
      inputs[static_cast<std::size_t>(id)] = c.u;
      if (c.warning) emit(k, EventKind::Warning, json{{"robot", id}, {"message", "MPC iteration cap reached"}});
      if (cfg_.verbose_solver)
        result_.solver_log.push_back(SolverRecord{k, id, c.solution.iterations, c.solution.kkt_residual, c.warning});
    } catch (const Error& e) {
      emit(k, EventKind::Warning, json{{"robot", id}, {"message", std::string("MPC failed, braking: ") + e.what()}});
      controllers_[static_cast<std::size_t>(id)].reset();
      inputs[static_cast<std::size_t>(id)] = brake(r.x);
    }
  }
  for (RobotState& r : robots_) {
    if (r.energy.mode != Mode::ReturnToBase) continue;
    const ReturnPlan& plan = *r.energy.plan;
    inputs[static_cast<std::size_t>(r.id)] =
        r.energy.plan_offset < plan.tau_star ? follow_plan(plan, r.energy.plan_offset) : brake(r.x);
  }

  // Integrate, energy, trace.
  for (RobotState& r : robots_) {
    const Vec2 u = inputs[static_cast<std::size_t>(r.id)];
    const Eigen::VectorXd x_prev = r.x;
    if (r.energy.mode != Mode::Recharge) r.x = model_.step(r.x, u);
    if (cfg_.energy_enabled) {
      try {
        r.energy = apply_energy(r.energy, x_prev, u, energy_);
      } catch (const Error& e) {
        fatal(k, std::string("robot ") + std::to_string(r.id) + ": " + e.what());
        return false;
      }
    }
    result_.summary.min_soc = std::min(result_.summary.min_soc, r.energy.soc);
    TraceRecord t;
    t.k = k;
    t.robot = r.id;
    t.mode = r.energy.mode;
    t.position = RobotModel::position(r.x);
    t.velocity = model_.velocity(r.x);
    t.soc = r.energy.soc;
    t.level = level_number(energy_level(r.energy.soc));
    if (const auto it = centroid.find(r.id); it != centroid.end()) {
      t.centroid = it->second;
      t.cell_cost = cell_cost[r.id];
    }
    result_.traces.push_back(t);
  }
  return true;
}

SimulationResult Simulator::run() {
  initialize();
  build_initial_network();
  if (result_.summary.fatal) return std::move(result_);
  for (int k = 0; k < cfg_.steps; ++k) {
    if (!step(k)) break;
    result_.summary.steps_run = k + 1;
  }
  std::vector<Vec2> pts;
  for (int id : net_.members) pts.push_back(RobotModel::position(robots_[static_cast<std::size_t>(id)].x));
  if (!pts.empty()) result_.final_cells = voronoi_partition(pts, space_, net_.members).cells;
  for (const RobotState& r : robots_) result_.summary.final_socs.push_back(r.energy.soc);
  return std::move(result_);
}

}  // namespace

RobotModel ScenarioConfig::effective_model() const {
  RobotModel m = model;
  const MissionSpace s(space);
  m.pos_min = s.lower();
  m.pos_max = s.upper();
  return m;
}

EnergyParams ScenarioConfig::effective_energy() const {
  EnergyParams e = energy;
  e.base = base;
  e.base_radius = base_radius;
  if (!(e.guard_margin > 0.0)) e.guard_margin = EnergyParams::default_margin(e.mu, e.gamma, model.u_max);
  return e;
}

void ScenarioConfig::validate() const {
  const MissionSpace s(space);
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "scenario needs at least one robot");
  if (!positions.empty() && static_cast<int>(positions.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "one initial position per robot required");
  if (!socs.empty() && static_cast<int>(socs.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "one initial SOC per robot required");
  for (const Vec2& p : positions)
    if (!s.contains(p, 1e-9)) throw Error(ErrorKind::InvalidArgument, "initial position outside the mission space");
  for (double v : socs)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InvalidArgument, "initial SOC outside [0, 1]");
  if (!(soc_min >= 0.0 && soc_min <= soc_max && soc_max <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "bad random SOC range");
  if (!(base_radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "base radius must be positive");
  if (!s.contains(base)) throw Error(ErrorKind::InvalidArgument, "base outside the mission space");
  for (const Vec2& q : base_slots(base, base_radius, n))
    if (!s.contains(q)) throw Error(ErrorKind::InvalidArgument, "base disk leaves the mission space");
  if (!(r_safe >= 0.0) || !(min_separation >= 0.0)) throw Error(ErrorKind::InvalidArgument, "negative distance");
  if (steps < 0) throw Error(ErrorKind::InvalidArgument, "negative step count");
  if (!(replan_rate > 0.0) || max_replan_interval < 1) throw Error(ErrorKind::InvalidArgument, "bad replan schedule");
  if (init_region && !(init_region->first.array() < init_region->second.array()).all())
    throw Error(ErrorKind::InvalidArgument, "empty initialization region");
  const RobotModel m = effective_model();
  m.validate();
  effective_energy().validate();
  mpc.validate(m);
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ModeTransition: return "ModeTransition";
    case EventKind::Departure: return "Departure";
    case EventKind::Reconfiguration: return "Reconfiguration";
    case EventKind::Rejoin: return "Rejoin";
    case EventKind::RigidityCheck: return "RigidityCheck";
    case EventKind::Warning: return "Warning";
    case EventKind::Fatal: return "Fatal";
  }
  return "Unknown";
}

std::optional<EventKind> event_kind_from_string(const std::string& s) {
  for (EventKind k : {EventKind::ModeTransition, EventKind::Departure, EventKind::Reconfiguration, EventKind::Rejoin,
                      EventKind::RigidityCheck, EventKind::Warning, EventKind::Fatal})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

std::vector<Vec2> base_slots(const Vec2& base, double base_radius, int n) {
  std::vector<Vec2> out;
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * M_PI * i / std::max(n, 1);
    out.push_back(n == 1 ? base : base + 0.6 * base_radius * Vec2(std::cos(th), std::sin(th)));
  }
  return out;
}

SimulationResult simulate(const ScenarioConfig& config) {
  config.validate();
  return Simulator(config).run();
}

}  // namespace rcov
