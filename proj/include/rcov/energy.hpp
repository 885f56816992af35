#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "rcov/model.hpp"

namespace rcov {

enum class Mode : int { Coverage = 1, ReturnToBase = 2, Recharge = 3 };

constexpr int mode_number(Mode m) { return static_cast<int>(m); }

struct EnergyParams {
  double mu = 0.002;      // SOC per unit of squared input
  double gamma = 0.0004;  // constant drain per step
  double s_th = 1.0;      // recharge complete
  double rho_c = 0.01;    // charge per step
  double s_max = 1.0;
  double guard_margin = 0.0;
  Vec2 base = Vec2(0.5, 0.5);
  double base_radius = 0.15;
  // Max distance between the current state and the state a plan was made
  // for before the plan counts as stale.
  double stale_threshold = 0.05;

  /// Two worst-case steps of drain for a per-axis input bound.
  static double default_margin(double mu, double gamma, double u_max) { return 2.0 * (mu * u_max * u_max + gamma); }

  /// Throws InvalidArgument when a field is negative, s_th > s_max or
  /// rho_c <= 0.
  void validate() const;
};

/// Effort of one step: ||u||^2.
double consumption(const Eigen::VectorXd& x, const Vec2& u);

/// s - mu * xi - gamma. Throws EnergyExhausted below -1e-12; tiny negative
/// round-off is clamped to zero.
double discharge_step(double s, const Eigen::VectorXd& x, const Vec2& u, const EnergyParams& params);

double charge_step(double s, const EnergyParams& params);

/// SOC drained by executing the plan: sum over its steps of mu*xi + gamma.
double plan_energy(const Trajectory& t, const EnergyParams& params);

/// Fires when s - plan.energy_required <= guard_margin. Throws StalePlan if
/// the plan was made for a state farther than stale_threshold from x.
bool guard_1_to_2(double s, const Eigen::VectorXd& x, const ReturnPlan& plan, const EnergyParams& params);

/// Closed base disk.
bool guard_2_to_3(const Eigen::VectorXd& x, const EnergyParams& params);

bool guard_3_to_1(double s, const EnergyParams& params);

struct EnergyState {
  double soc = 1.0;
  Mode mode = Mode::Coverage;
  std::optional<ReturnPlan> plan;  // present iff mode == ReturnToBase
  int plan_offset = 0;             // next input of the plan to apply
};

struct Transition {
  Mode from = Mode::Coverage;
  Mode to = Mode::Coverage;
  double soc = 0.0;
  int tau_star = 0;  // plan length on 1 -> 2, else 0
};

/// Returns the current return plan, or nothing if the caller knows the
/// guard cannot fire yet.
using PlannerHandle = std::function<std::optional<ReturnPlan>(const Eigen::VectorXd& x)>;

struct GuardOutcome {
  EnergyState state;
  std::optional<Transition> transition;
  bool pin_to_base = false;  // set on 2 -> 3
};

/// Evaluates the one guard legal in the current mode and switches mode if
/// it fires. Does not touch the SOC.
GuardOutcome evaluate_guard(const EnergyState& state, const Eigen::VectorXd& x, const PlannerHandle& planner,
                            const EnergyParams& params);

/// Discharge in modes 1 and 2 (advancing the plan offset in mode 2),
/// charge in mode 3.
EnergyState apply_energy(const EnergyState& state, const Eigen::VectorXd& x, const Vec2& u,
                         const EnergyParams& params);

/// evaluate_guard followed by apply_energy with input u.
GuardOutcome automaton_step(const EnergyState& state, const Eigen::VectorXd& x, const Vec2& u,
                            const PlannerHandle& planner, const EnergyParams& params);

}  // namespace rcov
