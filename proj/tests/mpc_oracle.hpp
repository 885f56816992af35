#pragma once
// Test-only MPC reference: rebuilds the cost by forward simulation and solves
// the normal equations directly, without going through build_qp.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rcov/mpc.hpp"

namespace oracle {

using rcov::BearingTargets;
using rcov::MpcConfig;
using rcov::RobotModel;
using rcov::Vec2;
using rcov::orthogonal_projector;

// Independent reconstruction of the MPC cost by forward simulation: the
// weighted residual vector f(z) = f0 + F z and terminal defect h(z) = h0 + C z
// are affine, so columns come from unit perturbations.
struct AffineCost {
  Eigen::VectorXd f0, h0;
  Eigen::MatrixXd F, C;
};

inline AffineCost rollout_cost(const Eigen::VectorXd& x0, const Vec2& r, const BearingTargets& t, const RobotModel& m,
                               const MpcConfig& cfg) {
  const int N = cfg.N, n = 2 * N + 2;
  const Eigen::MatrixXd Lq = Eigen::LLT<Eigen::MatrixXd>(cfg.stage_weight(m)).matrixU();
  const Eigen::MatrixXd Lr = Eigen::LLT<Eigen::MatrixXd>(cfg.input_weight()).matrixU();
  const Eigen::MatrixXd Lp = Eigen::LLT<Eigen::MatrixXd>(cfg.terminal_weight(m)).matrixU();
  auto residuals = [&](const Eigen::VectorXd& z, Eigen::VectorXd& h) {
    const Vec2 rbar = z.tail<2>();
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(4);
    xbar.head<2>() = rbar;
    std::vector<double> f;
    auto push = [&](const Eigen::VectorXd& v) { f.insert(f.end(), v.data(), v.data() + v.size()); };
    Eigen::VectorXd x = x0;
    for (int l = 0; l < N; ++l) {
      const Vec2 u = z.segment<2>(2 * l);
      push(Lq * (x - xbar));
      push(Lr * u);
      x = m.step(x, u);
    }
    push(Lp * (x - xbar));
    push(std::sqrt(cfg.lambda * cfg.tracking_weight) * (r - rbar));
    for (std::size_t j = 0; j < t.size(); ++j)
      push(std::sqrt(1.0 - cfg.lambda) * (orthogonal_projector(t.bearings[j]) * (t.anchors[j] - rbar)));
    h = x - xbar;
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
  };
  AffineCost a;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  a.f0 = residuals(zero, a.h0);
  a.F.resize(a.f0.size(), n);
  a.C.resize(a.h0.size(), n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd h;
    a.F.col(k) = residuals(Eigen::VectorXd::Unit(n, k), h) - a.f0;
    a.C.col(k) = h - a.h0;
  }
  return a;
}

// Normal equations with the terminal equality via Lagrange multipliers.
inline Eigen::VectorXd normal_equations_solution(const AffineCost& a) {
  const int n = static_cast<int>(a.F.cols()), m = static_cast<int>(a.C.rows());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = 2.0 * a.F.transpose() * a.F;
  K.topRightCorner(n, m) = a.C.transpose();
  K.bottomLeftCorner(m, n) = a.C;
  Eigen::VectorXd rhs(n + m);
  rhs << -2.0 * a.F.transpose() * a.f0, -a.h0;
  return K.fullPivLu().solve(rhs).head(n);
}

}  // namespace oracle
