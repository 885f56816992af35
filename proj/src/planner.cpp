#include "rcov/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "rcov/error.hpp"
#include "rcov/qp.hpp"

namespace rcov {

namespace {

constexpr double kAtRest = 1e-9;

double rest_to_rest_time(double d, double a, double vm) {
  const double vp = std::sqrt(a * d);
  if (vp <= vm) return 2.0 * vp / a;
  return 2.0 * vm / a + (d - vm * vm / a) / vm;
}

// One axis of the double integrator, from (0, v0) to rest at d.
double axis_time_double(double d, double v0, double a, double vm) {
  if (d < 0.0) {
    d = -d;
    v0 = -v0;
  }
  const double stop = v0 > 0.0 ? v0 * v0 / (2.0 * a) : 0.0;
  if (v0 > 0.0 && stop > d) return v0 / a + rest_to_rest_time(stop - d, a, vm);
  const double vp = std::sqrt(a * d + 0.5 * v0 * v0);
  if (vp <= vm || std::abs(v0) > vm) return (vp - v0) / a + vp / a;
  const double accel = (vm * vm - v0 * v0) / (2.0 * a);
  const double brake = vm * vm / (2.0 * a);
  return (vm - v0) / a + vm / a + (d - accel - brake) / vm;
}

bool at_rest_on(const Eigen::VectorXd& x0, const Vec2& base, const RobotModel& model) {
  return (RobotModel::position(x0) - base).norm() <= kAtRest && model.velocity(x0).norm() <= kAtRest;
}

// Rows of the inequality system A U <= b bounding the predicted positions
// and velocities of steps 1..T-1 and the inputs. `axes` is 1 for the
// decoupled problem and 2 for the planar one; the layout follows condense().
void add_box_rows(const Prediction& pred, const Eigen::VectorXd& x0, const RobotModel& model, int axes,
                  const std::vector<int>& axis_ids, std::vector<Eigen::RowVectorXd>& rows, std::vector<double>& rhs) {
  const int T = pred.N;
  const int nu = pred.nu;
  for (int c = 0; c < T * nu; ++c) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(T * nu);
    r(c) = 1.0;
    rows.push_back(r);
    rhs.push_back(model.u_max);
    rows.push_back(-r);
    rhs.push_back(model.u_max);
  }
  const bool dbl = model.kind == ModelKind::DoubleIntegrator;
  for (int l = 1; l < T; ++l) {
    for (int a = 0; a < axes; ++a) {
      const int axis = axis_ids[static_cast<std::size_t>(a)];
      const int prow = l * pred.nx + a;
      const Eigen::RowVectorXd g = pred.Gamma.row(prow);
      const double free = pred.Phi.row(prow).dot(x0);
      rows.push_back(g);
      rhs.push_back(model.pos_max(axis) - free);
      rows.push_back(-g);
      rhs.push_back(free - model.pos_min(axis));
      if (dbl) {
        const int vrow = l * pred.nx + axes + a;
        const Eigen::RowVectorXd gv = pred.Gamma.row(vrow);
        const double fv = pred.Phi.row(vrow).dot(x0);
        rows.push_back(gv);
        rhs.push_back(model.v_max - fv);
        rows.push_back(-gv);
        rhs.push_back(model.v_max + fv);
      }
    }
  }
}

QpProblem assemble(int n, const std::vector<Eigen::RowVectorXd>& eq_rows, const std::vector<double>& eq_rhs,
                   const std::vector<Eigen::RowVectorXd>& in_rows, const std::vector<double>& in_rhs) {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(n, n);
  p.g = Eigen::VectorXd::Zero(n);
  p.A_eq.resize(static_cast<Eigen::Index>(eq_rows.size()), n);
  p.b_eq.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t i = 0; i < eq_rows.size(); ++i) {
    p.A_eq.row(static_cast<Eigen::Index>(i)) = eq_rows[i];
    p.b_eq(static_cast<Eigen::Index>(i)) = eq_rhs[i];
  }
  p.A_in.resize(static_cast<Eigen::Index>(in_rows.size()), n);
  p.b_in.resize(static_cast<Eigen::Index>(in_rows.size()));
  for (std::size_t i = 0; i < in_rows.size(); ++i) {
    p.A_in.row(static_cast<Eigen::Index>(i)) = in_rows[i];
    p.b_in(static_cast<Eigen::Index>(i)) = in_rhs[i];
  }
  return p;
}

std::optional<Eigen::VectorXd> solve_checked(const QpProblem& p, const PlannerOptions& options) {
  QpOptions qo;
  qo.max_iter = 20 * (p.variables() + static_cast<int>(p.A_in.rows())) + 100;
  const QpResult r = solve_qp(p, qo);
  if (r.status == QpStatus::MaxIterations) throw Error(ErrorKind::SolverFailure, "return planner hit max iterations");
  if (r.status != QpStatus::Optimal) return std::nullopt;
  double viol = 0.0;
  if (p.A_eq.rows() > 0) viol = (p.A_eq * r.z - p.b_eq).lpNorm<Eigen::Infinity>();
  if (p.A_in.rows() > 0) viol = std::max(viol, (p.A_in * r.z - p.b_in).maxCoeff());
  if (viol > options.solver_tol) return std::nullopt;
  return r.z;
}

// Terminal equalities: rest at the base.
void add_terminal_rows(const Prediction& pred, const Eigen::VectorXd& x0, const Vec2& base, int axes,
                       const std::vector<int>& axis_ids, std::vector<Eigen::RowVectorXd>& rows,
                       std::vector<double>& rhs) {
  const int T = pred.N;
  for (int s = 0; s < pred.nx; ++s) {
    const int row = T * pred.nx + s;
    const int a = s % axes;
    const bool is_position = s < axes;
    const double target = is_position ? base(axis_ids[static_cast<std::size_t>(a)]) : 0.0;
    rows.push_back(pred.Gamma.row(row));
    rhs.push_back(target - pred.Phi.row(row).dot(x0));
  }
}

// Least-effort inputs for one axis over T steps.
std::optional<Eigen::VectorXd> axis_probe(int T, const Eigen::VectorXd& s0, int axis, const Vec2& base,
                                          const RobotModel& model, const PlannerOptions& options) {
  const Prediction pred = condense(model.axis_A(), model.axis_B(), T);
  std::vector<Eigen::RowVectorXd> eq, in;
  std::vector<double> beq, bin;
  add_terminal_rows(pred, s0, base, 1, {axis}, eq, beq);
  add_box_rows(pred, s0, model, 1, {axis}, in, bin);
  return solve_checked(assemble(T, eq, beq, in, bin), options);
}

Eigen::VectorXd axis_state(const Eigen::VectorXd& x0, int axis, const RobotModel& model) {
  Eigen::VectorXd s(model.axis_dim());
  for (int k = 0; k < model.axis_dim(); ++k) s(k) = x0(2 * k + axis);
  return s;
}

Trajectory rollout(const Eigen::VectorXd& x0, const std::vector<Vec2>& inputs, const RobotModel& model) {
  Trajectory t;
  t.states.push_back(x0);
  t.inputs = inputs;
  for (const Vec2& u : inputs) t.states.push_back(model.step(t.states.back(), u));
  return t;
}

std::vector<Obstacle> relevant(std::span<const Obstacle> obstacles, const Eigen::VectorXd& x0) {
  std::vector<Obstacle> out;
  for (const Obstacle& o : obstacles)
    if (o.radius > 0.0 && (RobotModel::position(x0) - o.center).norm() >= o.radius) out.push_back(o);
  return out;
}

bool clear_of(const Trajectory& t, const std::vector<Obstacle>& obstacles, double tol) {
  for (std::size_t l = 1; l < t.states.size(); ++l)
    for (const Obstacle& o : obstacles)
      if ((RobotModel::position(t.states[l]) - o.center).norm() < o.radius - tol) return false;
  return true;
}

// Planar problem with the separation constraints linearized around `seed`
// pushed out of each obstacle: n'(p_l - c) >= r with n the outward normal.
std::optional<Trajectory> planar_probe(int T, const Eigen::VectorXd& x0, const Vec2& base, const RobotModel& model,
                                       const std::vector<Obstacle>& obstacles, Trajectory seed,
                                       const PlannerOptions& options) {
  const Prediction pred = condense(model.A(), model.B(), T);
  const Vec2 travel = base - RobotModel::position(x0);
  const Vec2 side = travel.norm() > 0 ? Vec2(-travel.y(), travel.x()).normalized() : Vec2(1.0, 0.0);
  for (int iter = 0; iter < options.max_linearizations; ++iter) {
    std::vector<Eigen::RowVectorXd> eq, in;
    std::vector<double> beq, bin;
    add_terminal_rows(pred, x0, base, 2, {0, 1}, eq, beq);
    add_box_rows(pred, x0, model, 2, {0, 1}, in, bin);
    for (int l = 1; l <= T; ++l) {
      const Vec2 p = RobotModel::position(seed.states[static_cast<std::size_t>(l)]);
      for (const Obstacle& o : obstacles) {
        const Vec2 off = p - o.center;
        if (off.norm() >= 2.0 * o.radius) continue;
        const Vec2 n = off.norm() > 1e-12 ? Vec2(off.normalized()) : side;
        Eigen::RowVectorXd row = -(n.x() * pred.Gamma.row(l * pred.nx) + n.y() * pred.Gamma.row(l * pred.nx + 1));
        const Vec2 free(pred.Phi.row(l * pred.nx).dot(x0), pred.Phi.row(l * pred.nx + 1).dot(x0));
        in.push_back(row);
        bin.push_back(n.dot(free - o.center) - o.radius);
      }
    }
    const auto z = solve_checked(assemble(2 * T, eq, beq, in, bin), options);
    if (!z) return std::nullopt;
    std::vector<Vec2> inputs;
    for (int l = 0; l < T; ++l) inputs.emplace_back((*z)(2 * l), (*z)(2 * l + 1));
    Trajectory t = rollout(x0, inputs, model);
    if (clear_of(t, obstacles, options.solver_tol)) return t;
    seed = std::move(t);
  }
  return std::nullopt;
}

std::optional<Trajectory> decoupled_probe(int T, const Eigen::VectorXd& x0, const Vec2& base,
                                          const RobotModel& model, const PlannerOptions& options) {
  std::vector<Vec2> inputs(static_cast<std::size_t>(T), Vec2::Zero());
  for (int axis = 0; axis < 2; ++axis) {
    const auto u = axis_probe(T, axis_state(x0, axis, model), axis, base, model, options);
    if (!u) return std::nullopt;
    for (int l = 0; l < T; ++l) inputs[static_cast<std::size_t>(l)](axis) = (*u)(l);
  }
  return rollout(x0, inputs, model);
}

// Smallest T in [0, t_max] with feasible(T), assuming monotonicity and
// starting the search at `hint`.
std::optional<int> smallest_feasible(const std::function<bool(int)>& feasible, int hint, int t_max) {
  hint = std::clamp(hint, 0, t_max);
  int lo = -1, hi = -1;  // lo infeasible, hi feasible
  if (feasible(hint)) {
    hi = hint;
    for (int step = 1; hi > 0; step *= 2) {
      const int t = std::max(0, hi - step);
      if (feasible(t)) {
        hi = t;
      } else {
        lo = t;
        break;
      }
    }
  } else {
    lo = hint;
    for (int step = 1;; step *= 2) {
      const int t = std::min(t_max, lo + step);
      if (feasible(t)) {
        hi = t;
        break;
      }
      lo = t;
      if (t == t_max) return std::nullopt;
    }
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

int default_t_max(const RobotModel& model) {
  const double diag = (model.pos_max - model.pos_min).norm();
  // Mean speed of a rest-to-rest crossing of the diagonal, capped by v_max.
  const double speed = model.kind == ModelKind::DoubleIntegrator
                           ? std::min(model.v_max, 0.5 * std::sqrt(model.u_max * diag))
                           : model.u_max;
  const double steps = std::ceil(4.0 * diag / speed / model.dt);
  return static_cast<int>(std::min(2000.0, steps));
}

double min_time_lower_bound(const Eigen::VectorXd& x0, const Vec2& base, const RobotModel& model) {
  double t = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double d = base(axis) - x0(axis);
    if (model.kind == ModelKind::SingleIntegrator)
      t = std::max(t, std::abs(d) / model.u_max);
    else
      t = std::max(t, axis_time_double(d, x0(2 + axis), model.u_max, model.v_max));
  }
  return t;
}

std::optional<Trajectory> feasibility_probe(int T, const Eigen::VectorXd& x0, const Vec2& base,
                                            const RobotModel& model, std::span<const Obstacle> obstacles,
                                            const PlannerOptions& options) {
  if (T < 0) throw Error(ErrorKind::InvalidArgument, "negative horizon");
  if (x0.size() != model.state_dim()) throw Error(ErrorKind::InvalidArgument, "state dimension mismatch");
  const std::vector<Obstacle> obs = relevant(obstacles, x0);
  for (const Obstacle& o : obs)
    if ((base - o.center).norm() < o.radius) return std::nullopt;
  if (T == 0) {
    if (!at_rest_on(x0, base, model)) return std::nullopt;
    return Trajectory{{x0}, {}};
  }
  auto free = decoupled_probe(T, x0, base, model, options);
  if (!free) return std::nullopt;
  if (clear_of(*free, obs, options.solver_tol)) return free;

  // Seed points in an obstacle's shadow along the travel direction move
  // sideways onto its boundary, so the linearized constraints steer around
  // it instead of blocking the way.
  Trajectory seed = *free;
  const Vec2 travel = base - RobotModel::position(x0);
  const Vec2 dir = travel.norm() > 0 ? Vec2(travel.normalized()) : Vec2(1.0, 0.0);
  const Vec2 side(-dir.y(), dir.x());
  for (std::size_t l = 1; l < seed.states.size(); ++l) {
    for (const Obstacle& o : obs) {
      const Vec2 off = RobotModel::position(seed.states[l]) - o.center;
      const double along = off.dot(dir);
      if (off.norm() >= 2.0 * o.radius || std::abs(along) >= o.radius) continue;
      const Vec2 perp = off - along * dir;
      const Vec2 out = perp.norm() > 1e-9 ? Vec2(perp.normalized()) : side;
      const double reach = std::max(std::sqrt(o.radius * o.radius - along * along), perp.norm());
      seed.states[l].head<2>() = o.center + along * dir + reach * out;
    }
  }
  return planar_probe(T, x0, base, model, obs, std::move(seed), options);
}

ReturnPlan min_time_return(const Eigen::VectorXd& x0, const Vec2& base, const RobotModel& model,
                           std::span<const Obstacle> obstacles, const EnergyParams& params,
                           const PlannerOptions& options) {
  model.validate();
  if (x0.size() != model.state_dim()) throw Error(ErrorKind::InvalidArgument, "state dimension mismatch");
  if (!((base.array() >= model.pos_min.array()).all() && (base.array() <= model.pos_max.array()).all()))
    throw Error(ErrorKind::InvalidArgument, "base outside the position bounds");
  const std::vector<Obstacle> obs = relevant(obstacles, x0);
  for (const Obstacle& o : obs)
    if ((base - o.center).norm() < o.radius) throw Error(ErrorKind::Unreachable, "an obstacle covers the base");
  const int t_max = options.t_max > 0 ? options.t_max : default_t_max(model);

  ReturnPlan plan;
  if (at_rest_on(x0, base, model)) {
    plan.trajectory = Trajectory{{x0}, {}};
    return plan;
  }

  // Per-axis minimum horizons; the planar obstacle-free optimum is their max.
  const int hint = static_cast<int>(std::ceil(min_time_lower_bound(x0, base, model) / model.dt - 1e-9));
  int t_free = 0;
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::VectorXd s0 = axis_state(x0, axis, model);
    std::map<int, bool> cache;
    auto feasible = [&](int T) {
      auto it = cache.find(T);
      if (it != cache.end()) return it->second;
      bool ok;
      if (T == 0) {
        ok = std::abs(s0(0) - base(axis)) <= kAtRest && (s0.size() < 2 || std::abs(s0(1)) <= kAtRest);
      } else {
        ok = axis_probe(T, s0, axis, base, model, options).has_value();
      }
      return cache[T] = ok;
    };
    const auto t = smallest_feasible(feasible, hint, t_max);
    if (!t) throw Error(ErrorKind::Unreachable, "base not reachable within " + std::to_string(t_max) + " steps");
    t_free = std::max(t_free, *t);
  }

  std::map<int, std::optional<Trajectory>> probes;
  auto feasible = [&](int T) {
    auto it = probes.find(T);
    if (it == probes.end()) it = probes.emplace(T, feasibility_probe(T, x0, base, model, obs, options)).first;
    return it->second.has_value();
  };
  std::optional<int> tau;
  if (feasible(t_free)) {
    tau = t_free;
  } else {
    // Obstacles only make things harder: search upward from t_free.
    int lo = t_free, hi = -1;
    for (int step = 1;; step *= 2) {
      const int t = std::min(t_max, lo + step);
      if (feasible(t)) {
        hi = t;
        break;
      }
      lo = t;
      if (t == t_max) break;
    }
    if (hi < 0) throw Error(ErrorKind::Unreachable, "no obstacle-free return within " + std::to_string(t_max) + " steps");
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (feasible(mid))
        hi = mid;
      else
        lo = mid;
    }
    tau = hi;
  }
  plan.trajectory = *probes.at(*tau);
  plan.tau_star = *tau;
  plan.energy_required = plan_energy(plan.trajectory, params);
  return plan;
}

Vec2 follow_plan(const ReturnPlan& plan, int k_offset) {
  if (k_offset < 0 || k_offset >= plan.tau_star)
    throw Error(ErrorKind::PlanExhausted, "plan offset " + std::to_string(k_offset) + " past tau_star " +
                                              std::to_string(plan.tau_star));
  return plan.trajectory.inputs[static_cast<std::size_t>(k_offset)];
}

std::vector<std::string> plan_violations(const ReturnPlan& plan, const Eigen::VectorXd& x0, const Vec2& base,
                                         double base_radius, const RobotModel& model,
                                         std::span<const Obstacle> obstacles, double tol) {
  std::vector<std::string> out;
  const Trajectory& t = plan.trajectory;
  if (t.states.size() != t.inputs.size() + 1 || plan.tau_star != t.steps()) {
    out.push_back("length mismatch");
    return out;
  }
  if ((t.states.front() - x0).norm() > 1e-12) out.push_back("does not start at x0");
  for (int l = 0; l < t.steps(); ++l) {
    const auto& x = t.states[static_cast<std::size_t>(l)];
    const auto& u = t.inputs[static_cast<std::size_t>(l)];
    if ((model.step(x, u) - t.states[static_cast<std::size_t>(l + 1)]).norm() > 1e-9)
      out.push_back("dynamics residual at step " + std::to_string(l));
    if (u.cwiseAbs().maxCoeff() > model.u_max + tol) out.push_back("input bound at step " + std::to_string(l));
  }
  for (std::size_t l = 1; l < t.states.size(); ++l) {
    const Vec2 p = RobotModel::position(t.states[l]);
    if ((p.array() < model.pos_min.array() - tol).any() || (p.array() > model.pos_max.array() + tol).any())
      out.push_back("position bound at step " + std::to_string(l));
    if (model.velocity(t.states[l]).cwiseAbs().maxCoeff() > model.v_max + tol)
      out.push_back("velocity bound at step " + std::to_string(l));
  }
  if ((RobotModel::position(t.states.back()) - base).norm() > base_radius + tol) out.push_back("ends outside base");
  if (model.velocity(t.states.back()).norm() > tol) out.push_back("not at rest at the end");
  if (!clear_of(t, relevant(obstacles, x0), tol)) out.push_back("enters an obstacle");
  return out;
}

}  // namespace rcov
