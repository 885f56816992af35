#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcov/energy.hpp"
#include "rcov/model.hpp"

namespace rcov {

/// Another robot frozen at its current position; plans keep at least
/// `radius` away from `center`.
struct Obstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

struct PlannerOptions {
  int t_max = 0;  // 0: default_t_max(model)
  double solver_tol = 1e-6;
  int max_linearizations = 8;
};

/// min(2000, ceil(4 * box diagonal / mean speed / dt)); the mean speed is
/// that of a rest-to-rest crossing of the diagonal, capped by v_max.
int default_t_max(const RobotModel& model);

/// Continuous-time minimum time (seconds) to bring the state to rest at
/// `base`, ignoring position bounds and obstacles. A lower bound on
/// tau_star * dt.
double min_time_lower_bound(const Eigen::VectorXd& x0, const Vec2& base, const RobotModel& model);

/// Least-effort trajectory of exactly T steps ending at rest at `base`,
/// within the model bounds and clear of obstacles, or nothing if none is
/// found. Obstacles that already contain x0 or are not strictly positive in
/// radius are ignored.
std::optional<Trajectory> feasibility_probe(int T, const Eigen::VectorXd& x0, const Vec2& base,
                                            const RobotModel& model, std::span<const Obstacle> obstacles,
                                            const PlannerOptions& options = {});

/// Smallest feasible T (exponential then binary search) and its plan.
/// Throws Unreachable if an obstacle covers the base or no T <= t_max works.
ReturnPlan min_time_return(const Eigen::VectorXd& x0, const Vec2& base, const RobotModel& model,
                           std::span<const Obstacle> obstacles, const EnergyParams& params,
                           const PlannerOptions& options = {});

/// Input k_offset of the plan; PlanExhausted past the end.
Vec2 follow_plan(const ReturnPlan& plan, int k_offset);

/// Empty when the plan is dynamics consistent, inside the bounds, ends in
/// the base disk at rest and keeps clear of the obstacles.
std::vector<std::string> plan_violations(const ReturnPlan& plan, const Eigen::VectorXd& x0, const Vec2& base,
                                         double base_radius, const RobotModel& model,
                                         std::span<const Obstacle> obstacles, double tol = 1e-6);

}  // namespace rcov
