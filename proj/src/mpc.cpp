#include "rcov/mpc.hpp"

#include <cmath>
#include <map>

#include "rcov/error.hpp"

namespace rcov {

namespace {

bool positive_definite(const Eigen::MatrixXd& m, int dim) {
  if (m.rows() != dim || m.cols() != dim) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

// Accumulates (c + M z)' W (c + M z) into 0.5 z'Hz + g'z + constant.
void add_square(QpProblem& qp, double& constant, const Eigen::MatrixXd& M, const Eigen::VectorXd& c,
                const Eigen::MatrixXd& W) {
  const Eigen::MatrixXd WM = W * M;
  qp.H.noalias() += 2.0 * M.transpose() * WM;
  qp.g.noalias() += 2.0 * WM.transpose() * c;
  constant += c.dot(W * c);
}

// Selects variables [offset, offset + 2) of z.
Eigen::MatrixXd selector(int n, int offset) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2, n);
  E(0, offset) = 1.0;
  E(1, offset + 1) = 1.0;
  return E;
}

struct RowBuilder {
  int n;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<std::pair<int, int>> tags;

  void add(const Eigen::RowVectorXd& row, double b, int step, int local) {
    rows.push_back(row);
    rhs.push_back(b);
    tags.emplace_back(step, local);
  }

  // lo <= row z + shift <= hi as two rows.
  void add_box(const Eigen::RowVectorXd& row, double shift, double lo, double hi, int step, int local) {
    add(row, hi - shift, step, local);
    add(-row, shift - lo, step, local + 1);
  }
};

}  // namespace

Eigen::MatrixXd MpcConfig::stage_weight(const RobotModel& model) const {
  if (Q.size() > 0) return Q;
  const int nx = model.state_dim();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nx, nx);
  w.topLeftCorner(2, 2) = q_position * Eigen::Matrix2d::Identity();
  if (nx == 4) w.bottomRightCorner(2, 2) = q_velocity * Eigen::Matrix2d::Identity();
  return w;
}

Eigen::MatrixXd MpcConfig::input_weight() const {
  if (R.size() > 0) return R;
  return r_input * Eigen::MatrixXd::Identity(2, 2);
}

Eigen::MatrixXd MpcConfig::terminal_weight(const RobotModel& model) const {
  if (P.size() > 0) return P;
  return p_scale * stage_weight(model);
}

void MpcConfig::validate(const RobotModel& model) const {
  if (N < 2) throw Error(ErrorKind::InvalidArgument, "MPC horizon must be at least 2");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorKind::InvalidArgument, "lambda must lie in (0, 1]");
  if (!(tracking_weight > 0.0)) throw Error(ErrorKind::InvalidArgument, "tracking weight must be positive");
  if (!(tol > 0.0) || max_iter < 1) throw Error(ErrorKind::InvalidArgument, "bad solver settings");
  const int nx = model.state_dim();
  if (!positive_definite(stage_weight(model), nx)) throw Error(ErrorKind::InvalidArgument, "Q must be positive definite");
  if (!positive_definite(input_weight(), 2)) throw Error(ErrorKind::InvalidArgument, "R must be positive definite");
  if (!positive_definite(terminal_weight(model), nx))
    throw Error(ErrorKind::InvalidArgument, "P must be positive definite");
}

BearingTargets desired_bearings(std::span<const Vec2> centroids, const Graph& graph, int i) {
  if (i < 0 || i >= graph.vertex_count() || graph.vertex_count() != static_cast<int>(centroids.size()))
    throw Error(ErrorKind::InvalidArgument, "robot index or centroid count does not match the graph");
  BearingTargets t;
  const Vec2& ri = centroids[static_cast<std::size_t>(i)];
  for (int j : graph.neighbors(i)) {
    const Vec2& rj = centroids[static_cast<std::size_t>(j)];
    t.neighbors.push_back(j);
    t.bearings.push_back(bearing_of(ri, rj));
    t.anchors.push_back(rj);
  }
  return t;
}

double bearing_residual(const Vec2& p_i, const Vec2& p_j, const Vec2& g) {
  const Vec2 d = p_j - p_i;
  return (orthogonal_projector(g) * d).norm() / d.norm();
}

MpcProblem build_qp(const Eigen::VectorXd& x0, const Vec2& reference, const BearingTargets& targets,
                    const RobotModel& model, const MpcConfig& cfg) {
  if (model.kind != ModelKind::DoubleIntegrator && model.kind != ModelKind::SingleIntegrator)
    throw Error(ErrorKind::ModelUnsupported, "MPC needs a linear model");
  model.validate();
  cfg.validate(model);
  const int nx = model.state_dim();
  if (x0.size() != nx || !x0.allFinite()) throw Error(ErrorKind::InvalidArgument, "state dimension mismatch");
  if (!reference.allFinite()) throw Error(ErrorKind::InvalidArgument, "reference must be finite");
  if (targets.anchors.size() != targets.bearings.size())
    throw Error(ErrorKind::InvalidArgument, "one anchor per bearing");

  const int N = cfg.N;
  const int n = 2 * N + 2;
  MpcProblem p;
  p.N = N;
  p.x0 = x0;
  p.reference = reference;
  p.pinned = std::isinf(cfg.tracking_weight);
  p.prediction = condense(model.A(), model.B(), N);
  p.steady_map = Eigen::MatrixXd::Zero(nx, 2);
  p.steady_map.topRows(2) = Eigen::Matrix2d::Identity();
  p.qp.H = Eigen::MatrixXd::Zero(n, n);
  p.qp.g = Eigen::VectorXd::Zero(n);

  const Prediction& pred = p.prediction;
  const Eigen::MatrixXd Er = selector(n, p.reference_offset());
  auto deviation = [&](int l) {
    // x_l - x_bar = Phi_l x0 + [Gamma_l, -S] z
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nx, n);
    M.leftCols(2 * N) = pred.Gamma_at(l);
    M.rightCols(2) = -p.steady_map;
    return std::pair<Eigen::MatrixXd, Eigen::VectorXd>(M, pred.Phi_at(l) * x0);
  };

  const Eigen::MatrixXd Qw = cfg.stage_weight(model), Rw = cfg.input_weight(), Pw = cfg.terminal_weight(model);
  for (int l = 0; l < N; ++l) {
    const auto [M, c] = deviation(l);
    add_square(p.qp, p.constant, M, c, Qw);
    add_square(p.qp, p.constant, selector(n, p.input_offset(l)), Eigen::Vector2d::Zero(), Rw);
  }
  {
    const auto [M, c] = deviation(N);
    add_square(p.qp, p.constant, M, c, Pw);
  }
  if (!p.pinned)
    add_square(p.qp, p.constant, -Er, reference, cfg.lambda * cfg.tracking_weight * Eigen::MatrixXd::Identity(2, 2));
  if (cfg.lambda < 1.0) {
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const Eigen::Matrix2d proj = orthogonal_projector(targets.bearings[j]);
      add_square(p.qp, p.constant, -Er, targets.anchors[j], (1.0 - cfg.lambda) * Eigen::MatrixXd(proj));
    }
  }

  // Terminal equality x_N = x_bar, plus r_bar = r when pinned.
  const auto [MN, cN] = deviation(N);
  const int me = nx + (p.pinned ? 2 : 0);
  p.qp.A_eq = Eigen::MatrixXd::Zero(me, n);
  p.qp.b_eq = Eigen::VectorXd::Zero(me);
  p.qp.A_eq.topRows(nx) = MN;
  p.qp.b_eq.head(nx) = -cN;
  if (p.pinned) {
    p.qp.A_eq.bottomRows(2) = Er;
    p.qp.b_eq.tail(2) = reference;
  }

  RowBuilder rb{n, {}, {}, {}};
  for (int l = 0; l < N; ++l)
    for (int a = 0; a < 2; ++a)
      rb.add_box(Eigen::RowVectorXd::Unit(n, p.input_offset(l) + a), 0.0, -model.u_max, model.u_max, l, 2 * a);
  for (int l = 1; l < N; ++l) {
    const auto Gl = pred.Gamma_at(l);
    const Eigen::VectorXd free = pred.Phi_at(l) * x0;
    for (int s = 0; s < nx; ++s) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
      row.head(2 * N) = Gl.row(s);
      const bool is_position = s < 2;
      const double lo = is_position ? model.pos_min(s) : -model.v_max;
      const double hi = is_position ? model.pos_max(s) : model.v_max;
      rb.add_box(row, free(s), lo, hi, l, 4 + 2 * s);
    }
  }
  for (int a = 0; a < 2; ++a)
    rb.add_box(Eigen::RowVectorXd::Unit(n, p.reference_offset() + a), 0.0, model.pos_min(a), model.pos_max(a), -1,
               2 * a);

  const int mi = static_cast<int>(rb.rows.size());
  p.qp.A_in.resize(mi, n);
  p.qp.b_in.resize(mi);
  for (int r = 0; r < mi; ++r) {
    p.qp.A_in.row(r) = rb.rows[static_cast<std::size_t>(r)];
    p.qp.b_in(r) = rb.rhs[static_cast<std::size_t>(r)];
  }
  p.row_tags = std::move(rb.tags);
  return p;
}

MpcSolution solve_mpc(const MpcProblem& problem, const MpcConfig& cfg, const MpcSolveOptions& options) {
  QpOptions qo;
  qo.max_iter = cfg.max_iter;
  qo.active_hint = options.warm_active;
  const QpResult r = solve_qp(problem.qp, qo);
  if (r.status == QpStatus::Infeasible) throw Error(ErrorKind::Infeasible, "MPC constraints are inconsistent");
  if (r.status == QpStatus::MaxIterations && !options.allow_partial)
    throw Error(ErrorKind::MaxIterations, "MPC solver hit the iteration cap");
  if (r.status == QpStatus::Optimal && r.kkt_residual > std::max(cfg.tol, 1e-6 * (1.0 + r.z.lpNorm<Eigen::Infinity>())))
    throw Error(ErrorKind::SolverFailure, "MPC KKT residual above tolerance");

  MpcSolution s;
  const int N = problem.N;
  s.inputs.reserve(static_cast<std::size_t>(N));
  for (int l = 0; l < N; ++l) s.inputs.emplace_back(r.z.segment<2>(problem.input_offset(l)));
  const Eigen::VectorXd X = problem.prediction.Phi * problem.x0 + problem.prediction.Gamma * r.z.head(2 * N);
  const int nx = problem.prediction.nx;
  for (int l = 0; l <= N; ++l) s.states.emplace_back(X.segment(l * nx, nx));
  s.reference = r.z.tail<2>();
  s.steady_state = problem.steady_map * s.reference;
  s.objective = r.objective + problem.constant;
  s.kkt_residual = r.kkt_residual;
  s.iterations = r.iterations;
  s.converged = r.status == QpStatus::Optimal;
  s.active = r.active;
  return s;
}

std::vector<int> shifted_active_set(const MpcProblem& previous, std::span<const int> active, const MpcProblem& next) {
  std::map<std::pair<int, int>, int> index;
  for (std::size_t r = 0; r < next.row_tags.size(); ++r) index.emplace(next.row_tags[r], static_cast<int>(r));
  std::vector<int> out;
  for (int a : active) {
    if (a < 0 || a >= static_cast<int>(previous.row_tags.size())) continue;
    auto [step, local] = previous.row_tags[static_cast<std::size_t>(a)];
    if (step >= 0) --step;
    const auto it = index.find({step, local});
    if (it != index.end()) out.push_back(it->second);
  }
  return out;
}

namespace {

MpcControl control_from(const MpcProblem& problem, const RobotModel& model, const MpcConfig& cfg,
                        std::span<const int> warm) {
  MpcSolveOptions o;
  o.warm_active = warm;
  o.allow_partial = true;
  MpcControl c;
  c.solution = solve_mpc(problem, cfg, o);
  c.warning = !c.solution.converged;
  c.u = c.solution.inputs.front().cwiseMax(-model.u_max).cwiseMin(model.u_max);
  return c;
}

}  // namespace

MpcControl mpc_control(const Eigen::VectorXd& x0, const Vec2& reference, const BearingTargets& targets,
                       const RobotModel& model, const MpcConfig& cfg) {
  return control_from(build_qp(x0, reference, targets, model, cfg), model, cfg, {});
}

TrackingController::TrackingController(RobotModel model, MpcConfig cfg) : model_(model), cfg_(std::move(cfg)) {
  model_.validate();
  cfg_.validate(model_);
}

MpcControl TrackingController::step(const Eigen::VectorXd& x0, const Vec2& reference, const BearingTargets& targets) {
  MpcProblem problem = build_qp(x0, reference, targets, model_, cfg_);
  std::vector<int> warm;
  if (last_problem_) warm = shifted_active_set(*last_problem_, last_active_, problem);
  MpcControl c = control_from(problem, model_, cfg_, warm);
  last_active_ = c.solution.active;
  last_problem_ = std::move(problem);
  return c;
}

void TrackingController::reset() {
  last_problem_.reset();
  last_active_.clear();
}

}  // namespace rcov
