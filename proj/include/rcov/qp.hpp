#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rcov {

/// Strictly convex QP:
///   minimize   0.5 z'Hz + g'z
///   subject to A_eq z  = b_eq
///              A_in z <= b_in
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  int variables() const { return static_cast<int>(g.size()); }
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

struct QpOptions {
  int max_iter = 2000;
  // Absolute violation accepted on the normalized inequality rows.
  double feasibility_tol = 1e-9;
  // Inequality rows tried first when violated (warm start).
  std::span<const int> active_hint;
};

/// Multipliers satisfy  Hz + g + A_eq' y_eq + A_in' y_in = 0,  y_in >= 0.
struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd z;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_in;
  std::vector<int> active;  // inequality rows active at the solution
  int iterations = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
};

/// Goldfarb–Idnani dual active-set method. H must be positive definite
/// (SolverFailure otherwise). Deterministic for identical inputs.
QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

/// Max of stationarity, primal violation, dual sign and complementarity
/// residuals.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& z, const Eigen::VectorXd& y_eq,
                    const Eigen::VectorXd& y_in);

}  // namespace rcov
