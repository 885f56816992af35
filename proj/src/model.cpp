#include "rcov/model.hpp"

#include <cmath>

#include "rcov/error.hpp"

namespace rcov {

Eigen::MatrixXd RobotModel::axis_A() const {
  if (kind == ModelKind::SingleIntegrator) return Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd a(2, 2);
  a << 1.0, dt, 0.0, 1.0;
  return a;
}

Eigen::MatrixXd RobotModel::axis_B() const {
  if (kind == ModelKind::SingleIntegrator) return Eigen::MatrixXd::Constant(1, 1, dt);
  Eigen::MatrixXd b(2, 1);
  b << 0.5 * dt * dt, dt;
  return b;
}

namespace {

Eigen::MatrixXd kron_i2(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * m.rows(), 2 * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.block<2, 2>(2 * r, 2 * c) = m(r, c) * Eigen::Matrix2d::Identity();
  return out;
}

}  // namespace

Eigen::MatrixXd RobotModel::A() const { return kron_i2(axis_A()); }
Eigen::MatrixXd RobotModel::B() const { return kron_i2(axis_B()); }

Eigen::VectorXd RobotModel::step(const Eigen::VectorXd& x, const Vec2& u) const {
  if (x.size() != state_dim()) throw Error(ErrorKind::InvalidArgument, "state dimension mismatch");
  Eigen::VectorXd next(x.size());
  if (kind == ModelKind::SingleIntegrator) {
    next = x + dt * u;
  } else {
    next.head<2>() = x.head<2>() + dt * x.tail<2>() + 0.5 * dt * dt * u;
    next.tail<2>() = x.tail<2>() + dt * u;
  }
  return next;
}

Eigen::VectorXd RobotModel::rest_state(const Vec2& p) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(state_dim());
  x.head<2>() = p;
  return x;
}

Vec2 RobotModel::velocity(const Eigen::VectorXd& x) const {
  return kind == ModelKind::DoubleIntegrator ? Vec2(x.tail<2>()) : Vec2::Zero();
}

void RobotModel::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (!(u_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "u_max must be positive");
  if (kind == ModelKind::DoubleIntegrator && !(v_max > 0.0))
    throw Error(ErrorKind::InvalidArgument, "v_max must be positive");
  if (!(pos_min.array() < pos_max.array()).all())
    throw Error(ErrorKind::InvalidArgument, "position bounds are empty");
}

Prediction condense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N) {
  if (N < 0) throw Error(ErrorKind::InvalidArgument, "negative horizon");
  Prediction p;
  p.N = N;
  p.nx = static_cast<int>(A.rows());
  p.nu = static_cast<int>(B.cols());
  p.Phi.resize((N + 1) * p.nx, p.nx);
  p.Gamma = Eigen::MatrixXd::Zero((N + 1) * p.nx, N * p.nu);
  p.Phi.topRows(p.nx).setIdentity();
  for (int l = 1; l <= N; ++l) {
    p.Phi.middleRows(l * p.nx, p.nx) = A * p.Phi.middleRows((l - 1) * p.nx, p.nx);
    if (l > 1)
      p.Gamma.block(l * p.nx, 0, p.nx, (l - 1) * p.nu) =
          A * p.Gamma.block((l - 1) * p.nx, 0, p.nx, (l - 1) * p.nu);
    p.Gamma.block(l * p.nx, (l - 1) * p.nu, p.nx, p.nu) = B;
  }
  return p;
}

}  // namespace rcov
