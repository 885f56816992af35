#include "rcov/energy.hpp"

#include <algorithm>
#include <string>

#include "rcov/error.hpp"

namespace rcov {

namespace {

constexpr double kSocFloor = -1e-12;
constexpr double kGuardEps = 1e-12;

}  // namespace

void EnergyParams::validate() const {
  for (double v : {mu, gamma, s_th, s_max, guard_margin, base_radius, stale_threshold})
    if (!(v >= 0.0)) throw Error(ErrorKind::InvalidArgument, "energy parameters must be non-negative");
  if (s_th > s_max) throw Error(ErrorKind::InvalidArgument, "s_th exceeds s_max");
  if (!(rho_c > 0.0)) throw Error(ErrorKind::InvalidArgument, "rho_c must be positive");
  if (!base.allFinite()) throw Error(ErrorKind::InvalidArgument, "base position must be finite");
}

double consumption(const Eigen::VectorXd& /*x*/, const Vec2& u) { return u.squaredNorm(); }

double discharge_step(double s, const Eigen::VectorXd& x, const Vec2& u, const EnergyParams& params) {
  const double next = s - params.mu * consumption(x, u) - params.gamma;
  if (next < kSocFloor) throw Error(ErrorKind::EnergyExhausted, "SOC would drop to " + std::to_string(next));
  return std::max(next, 0.0);
}

double charge_step(double s, const EnergyParams& params) { return std::min(s + params.rho_c, params.s_max); }

double plan_energy(const Trajectory& t, const EnergyParams& params) {
  double total = 0.0;
  for (int l = 0; l < t.steps(); ++l)
    total += params.mu * consumption(t.states[static_cast<std::size_t>(l)], t.inputs[static_cast<std::size_t>(l)]) +
             params.gamma;
  return total;
}

bool guard_1_to_2(double s, const Eigen::VectorXd& x, const ReturnPlan& plan, const EnergyParams& params) {
  if (plan.trajectory.states.empty() || plan.start().size() != x.size() ||
      (plan.start() - x).norm() > params.stale_threshold)
    throw Error(ErrorKind::StalePlan, "return plan was made for a different state");
  return s - plan.energy_required <= params.guard_margin + kGuardEps;
}

bool guard_2_to_3(const Eigen::VectorXd& x, const EnergyParams& params) {
  return (RobotModel::position(x) - params.base).norm() <= params.base_radius;
}

bool guard_3_to_1(double s, const EnergyParams& params) { return s >= params.s_th; }

GuardOutcome evaluate_guard(const EnergyState& state, const Eigen::VectorXd& x, const PlannerHandle& planner,
                            const EnergyParams& params) {
  GuardOutcome out{state, std::nullopt, false};
  switch (state.mode) {
    case Mode::Coverage: {
      std::optional<ReturnPlan> plan = planner ? planner(x) : std::nullopt;
      if (plan && guard_1_to_2(state.soc, x, *plan, params)) {
        out.transition = Transition{Mode::Coverage, Mode::ReturnToBase, state.soc, plan->tau_star};
        out.state.mode = Mode::ReturnToBase;
        out.state.plan = std::move(plan);
        out.state.plan_offset = 0;
      }
      break;
    }
    case Mode::ReturnToBase:
      if (guard_2_to_3(x, params)) {
        out.transition = Transition{Mode::ReturnToBase, Mode::Recharge, state.soc, 0};
        out.state.mode = Mode::Recharge;
        out.state.plan.reset();
        out.state.plan_offset = 0;
        out.pin_to_base = true;
      }
      break;
    case Mode::Recharge:
      if (guard_3_to_1(state.soc, params)) {
        out.transition = Transition{Mode::Recharge, Mode::Coverage, state.soc, 0};
        out.state.mode = Mode::Coverage;
        out.state.plan.reset();
      }
      break;
  }
  return out;
}

EnergyState apply_energy(const EnergyState& state, const Eigen::VectorXd& x, const Vec2& u,
                         const EnergyParams& params) {
  EnergyState next = state;
  if (state.mode == Mode::Recharge) {
    next.soc = charge_step(state.soc, params);
  } else {
    next.soc = discharge_step(state.soc, x, u, params);
    if (state.mode == Mode::ReturnToBase) ++next.plan_offset;
  }
  return next;
}

GuardOutcome automaton_step(const EnergyState& state, const Eigen::VectorXd& x, const Vec2& u,
                            const PlannerHandle& planner, const EnergyParams& params) {
  GuardOutcome out = evaluate_guard(state, x, planner, params);
  out.state = apply_energy(out.state, x, u, params);
  return out;
}

}  // namespace rcov
