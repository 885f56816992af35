#include "rcov/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcov/error.hpp"

namespace rcov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Factorization state of the dual method: J = L^{-T} Q and J'N = [R; 0]
// for the matrix N of active constraint normals.
class ActiveSetState {
 public:
  ActiveSetState(const Eigen::MatrixXd& H) : n_(static_cast<int>(H.rows())) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "Hessian is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_, n_));
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    llt_ = std::move(llt);
  }

  Eigen::VectorXd unconstrained_minimizer(const Eigen::VectorXd& g) const { return llt_.solve(-g); }

  int size() const { return iq_; }

  // Computes d = J'np, the primal direction z and the dual direction r.
  void directions(const Eigen::VectorXd& np) {
    d_ = J_.transpose() * np;
    z_ = J_.rightCols(n_ - iq_) * d_.tail(n_ - iq_);
    r_ = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d_.head(iq_));
  }

  // True if np is numerically in the span of the active normals.
  bool dependent() const {
    const double full = d_.norm();
    return full == 0.0 || d_.tail(n_ - iq_).norm() <= 1e-10 * full;
  }

  const Eigen::VectorXd& z() const { return z_; }
  const Eigen::VectorXd& r() const { return r_; }

  bool add() {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      const double h = std::hypot(d_(j - 1), d_(j));
      if (h == 0.0) continue;
      const double c = d_(j - 1) / h;
      const double s = d_(j) / h;
      d_(j - 1) = h;
      d_(j) = 0.0;
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j - 1);
        const double b = J_(k, j);
        J_(k, j - 1) = c * a + s * b;
        J_(k, j) = -s * a + c * b;
      }
    }
    if (std::abs(d_(iq_)) <= std::numeric_limits<double>::epsilon() * R_norm_) return false;
    R_.col(iq_).head(iq_ + 1) = d_.head(iq_ + 1);
    R_norm_ = std::max(R_norm_, std::abs(d_(iq_)));
    ++iq_;
    return true;
  }

  void remove(int l) {
    for (int c = l; c < iq_ - 1; ++c) R_.col(c) = R_.col(c + 1);
    R_.col(iq_ - 1).setZero();
    --iq_;
    for (int j = l; j < iq_; ++j) {
      const double h = std::hypot(R_(j, j), R_(j + 1, j));
      if (h == 0.0) continue;
      const double c = R_(j, j) / h;
      const double s = R_(j + 1, j) / h;
      R_(j, j) = h;
      R_(j + 1, j) = 0.0;
      for (int k = j + 1; k < iq_; ++k) {
        const double a = R_(j, k);
        const double b = R_(j + 1, k);
        R_(j, k) = c * a + s * b;
        R_(j + 1, k) = -s * a + c * b;
      }
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j);
        const double b = J_(k, j + 1);
        J_(k, j) = c * a + s * b;
        J_(k, j + 1) = -s * a + c * b;
      }
    }
  }

 private:
  int n_;
  int iq_ = 0;
  double R_norm_ = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd d_, z_, r_;
};

void check_dimensions(const QpProblem& p) {
  const Eigen::Index n = p.g.size();
  auto bad = [](const char* what) { throw Error(ErrorKind::InvalidArgument, std::string("QP dimension mismatch: ") + what); };
  if (p.H.rows() != n || p.H.cols() != n) bad("H");
  if (p.A_eq.rows() != p.b_eq.size() || (p.A_eq.rows() > 0 && p.A_eq.cols() != n)) bad("A_eq");
  if (p.A_in.rows() != p.b_in.size() || (p.A_in.rows() > 0 && p.A_in.cols() != n)) bad("A_in");
}

}  // namespace

double kkt_residual(const QpProblem& p, const Eigen::VectorXd& z, const Eigen::VectorXd& y_eq,
                    const Eigen::VectorXd& y_in) {
  Eigen::VectorXd stationarity = p.H * z + p.g;
  if (p.A_eq.rows() > 0) stationarity += p.A_eq.transpose() * y_eq;
  if (p.A_in.rows() > 0) stationarity += p.A_in.transpose() * y_in;
  double res = stationarity.lpNorm<Eigen::Infinity>();
  if (p.A_eq.rows() > 0) res = std::max(res, (p.A_eq * z - p.b_eq).lpNorm<Eigen::Infinity>());
  if (p.A_in.rows() > 0) {
    const Eigen::VectorXd slack = p.A_in * z - p.b_in;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      res = std::max(res, slack(i));
      res = std::max(res, -y_in(i));
      res = std::max(res, std::abs(y_in(i) * slack(i)));
    }
  }
  return res;
}

QpResult solve_qp(const QpProblem& p, const QpOptions& options) {
  check_dimensions(p);
  const int n = p.variables();
  const int me = static_cast<int>(p.A_eq.rows());
  const int mi = static_cast<int>(p.A_in.rows());

  // Inequalities in normalized ">= 0" form: C x + c0 >= 0.
  Eigen::MatrixXd C(mi, n);
  Eigen::VectorXd c0(mi);
  Eigen::VectorXd row_norm(mi);
  for (int i = 0; i < mi; ++i) {
    row_norm(i) = p.A_in.row(i).norm();
    if (row_norm(i) == 0.0) {
      C.row(i).setZero();
      c0(i) = p.b_in(i);
      row_norm(i) = 1.0;
      continue;
    }
    C.row(i) = -p.A_in.row(i) / row_norm(i);
    c0(i) = p.b_in(i) / row_norm(i);
  }

  ActiveSetState state(p.H);
  QpResult result;
  Eigen::VectorXd x = state.unconstrained_minimizer(p.g);
  // Active entries: equality e encoded as -(e + 1), inequality i as i.
  std::vector<int> active;
  std::vector<double> u;

  auto finish = [&](QpStatus status) {
    result.status = status;
    result.z = x;
    result.y_eq = Eigen::VectorXd::Zero(me);
    result.y_in = Eigen::VectorXd::Zero(mi);
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (active[k] < 0) {
        result.y_eq(-active[k] - 1) = -u[k];
      } else {
        result.y_in(active[k]) = u[k] / row_norm(active[k]);
        result.active.push_back(active[k]);
      }
    }
    std::sort(result.active.begin(), result.active.end());
    result.objective = 0.5 * x.dot(p.H * x) + p.g.dot(x);
    result.kkt_residual = kkt_residual(p, x, result.y_eq, result.y_in);
    return result;
  };

  for (int e = 0; e < me; ++e) {
    const Eigen::VectorXd np = p.A_eq.row(e).transpose();
    state.directions(np);
    const double violation = np.dot(x) - p.b_eq(e);
    if (state.dependent()) {
      if (std::abs(violation) > options.feasibility_tol * (1.0 + std::abs(p.b_eq(e)))) return finish(QpStatus::Infeasible);
      continue;
    }
    const double t = -violation / state.z().dot(np);
    x += t * state.z();
    for (int k = 0; k < state.size(); ++k) u[static_cast<std::size_t>(k)] -= t * state.r()(k);
    if (!state.add()) continue;
    active.push_back(-(e + 1));
    u.push_back(t);
  }

  std::vector<char> is_active(static_cast<std::size_t>(mi), 0);
  std::vector<char> excluded(static_cast<std::size_t>(mi), 0);
  const double tol = options.feasibility_tol;
  int iterations = 0;

  while (true) {
    if (++iterations > options.max_iter) {
      result.iterations = iterations;
      return finish(QpStatus::MaxIterations);
    }
    const Eigen::VectorXd slack = C * x + c0;
    int pick = -1;
    double worst = -tol;
    for (int i : options.active_hint) {
      if (i < 0 || i >= mi || is_active[static_cast<std::size_t>(i)] || excluded[static_cast<std::size_t>(i)]) continue;
      if (slack(i) < worst) {
        worst = slack(i);
        pick = i;
      }
    }
    if (pick < 0) {
      for (int i = 0; i < mi; ++i) {
        if (is_active[static_cast<std::size_t>(i)] || excluded[static_cast<std::size_t>(i)]) continue;
        if (slack(i) < worst) {
          worst = slack(i);
          pick = i;
        }
      }
    }
    if (pick < 0) break;

    const Eigen::VectorXd np = C.row(pick).transpose();
    double slack_p = slack(pick);
    double u_plus = 0.0;
    while (true) {
      if (++iterations > options.max_iter) {
        result.iterations = iterations;
        return finish(QpStatus::MaxIterations);
      }
      state.directions(np);
      double t1 = kInf;
      int block = -1;
      for (int k = 0; k < state.size(); ++k) {
        if (active[static_cast<std::size_t>(k)] < 0) continue;
        const double rk = state.r()(k);
        if (rk > 0.0) {
          const double ratio = u[static_cast<std::size_t>(k)] / rk;
          if (ratio < t1) {
            t1 = ratio;
            block = k;
          }
        }
      }
      const double t2 = state.dependent() ? kInf : -slack_p / state.z().dot(np);
      const double t = std::min(t1, t2);
      if (t == kInf) {
        result.iterations = iterations;
        return finish(QpStatus::Infeasible);
      }
      for (int k = 0; k < state.size(); ++k) u[static_cast<std::size_t>(k)] -= t * state.r()(k);
      u_plus += t;
      if (t2 == kInf) {
        // Dual step only: drop the blocking constraint and retry.
        is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(block)])] = 0;
        active.erase(active.begin() + block);
        u.erase(u.begin() + block);
        state.remove(block);
        continue;
      }
      x += t * state.z();
      if (t == t2) {
        if (!state.add()) {
          excluded[static_cast<std::size_t>(pick)] = 1;
          break;
        }
        active.push_back(pick);
        u.push_back(u_plus);
        is_active[static_cast<std::size_t>(pick)] = 1;
        break;
      }
      is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(block)])] = 0;
      active.erase(active.begin() + block);
      u.erase(u.begin() + block);
      state.remove(block);
      slack_p = np.dot(x) + c0(pick);
    }
  }

  result.iterations = iterations;
  // Rows excluded as numerically dependent must still hold.
  const Eigen::VectorXd slack = C * x + c0;
  for (int i = 0; i < mi; ++i)
    if (slack(i) < -1e3 * tol) return finish(QpStatus::Infeasible);
  return finish(QpStatus::Optimal);
}

}  // namespace rcov
