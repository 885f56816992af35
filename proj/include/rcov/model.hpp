#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rcov/rigidity.hpp"

namespace rcov {

enum class ModelKind { SingleIntegrator, DoubleIntegrator };

/// Planar robot with identical, decoupled axes. State layout is
/// [px, py] for the single integrator and [px, py, vx, vy] for the double
/// integrator; the input is a velocity or an acceleration respectively.
/// Bounds are per axis.
struct RobotModel {
  ModelKind kind = ModelKind::DoubleIntegrator;
  double dt = 0.1;
  double u_max = 1.0;
  double v_max = 0.5;  // unused by the single integrator
  Vec2 pos_min = Vec2(0.0, 0.0);
  Vec2 pos_max = Vec2(4.0, 4.0);

  int state_dim() const { return kind == ModelKind::DoubleIntegrator ? 4 : 2; }
  int axis_dim() const { return state_dim() / 2; }

  /// One-axis system matrices (axis_dim x axis_dim and axis_dim x 1).
  Eigen::MatrixXd axis_A() const;
  Eigen::MatrixXd axis_B() const;
  /// Planar matrices: kron(axis matrix, I2).
  Eigen::MatrixXd A() const;
  Eigen::MatrixXd B() const;

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Vec2& u) const;
  Eigen::VectorXd rest_state(const Vec2& p) const;
  static Vec2 position(const Eigen::VectorXd& x) { return x.head<2>(); }
  Vec2 velocity(const Eigen::VectorXd& x) const;

  /// Throws InvalidArgument on non-positive dt/bounds or an empty box.
  void validate() const;
};

/// Stacked prediction x_l = Phi_l x0 + Gamma_l U for l = 0..N, with
/// U = [u_0; ...; u_{N-1}].
struct Prediction {
  int N = 0;
  int nx = 0;
  int nu = 0;
  Eigen::MatrixXd Phi;    // (N+1)nx x nx
  Eigen::MatrixXd Gamma;  // (N+1)nx x N nu

  auto Phi_at(int l) const { return Phi.middleRows(l * nx, nx); }
  auto Gamma_at(int l) const { return Gamma.middleRows(l * nx, nx); }
};

Prediction condense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N);

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // x_0 .. x_T
  std::vector<Vec2> inputs;             // u_0 .. u_{T-1}

  int steps() const { return static_cast<int>(inputs.size()); }
};

/// Minimum-time return to base and the SOC its execution drains.
struct ReturnPlan {
  Trajectory trajectory;
  int tau_star = 0;
  double energy_required = 0.0;

  const Eigen::VectorXd& start() const { return trajectory.states.front(); }
};

}  // namespace rcov
