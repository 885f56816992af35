#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rcov/model.hpp"
#include "rcov/qp.hpp"
#include "rcov/rigidity.hpp"

namespace rcov {

/// Tracking MPC weights. Empty Q/R/P matrices are filled from the scalar
/// defaults: Q = diag(q_position I2, q_velocity I2), R = r_input I2,
/// P = p_scale Q.
struct MpcConfig {
  int N = 15;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd P;
  double q_position = 10.0;
  double q_velocity = 1.0;
  double r_input = 0.1;
  double p_scale = 1.0;
  // Weight on ||r - r_bar||^2; +inf pins r_bar to r.
  double tracking_weight = 100.0;
  // Blend between tracking (1) and bearing maintenance (0); in (0, 1].
  double lambda = 1.0;
  double tol = 1e-8;
  int max_iter = 2000;

  Eigen::MatrixXd stage_weight(const RobotModel& model) const;
  Eigen::MatrixXd input_weight() const;
  Eigen::MatrixXd terminal_weight(const RobotModel& model) const;
  /// Throws InvalidArgument on N < 2, lambda outside (0, 1], non-positive
  /// tracking weight or weights that are not positive definite.
  void validate(const RobotModel& model) const;
};

/// Desired unit bearings toward each neighbor and the neighbor anchors.
struct BearingTargets {
  std::vector<int> neighbors;
  std::vector<Vec2> bearings;
  std::vector<Vec2> anchors;

  std::size_t size() const { return bearings.size(); }
};

/// Bearings from robot i's centroid to each graph neighbor's centroid.
/// Throws CoincidentPoints when a neighbor centroid coincides with i's.
BearingTargets desired_bearings(std::span<const Vec2> centroids, const Graph& graph, int i);

/// ||P_g (p_j - p_i)|| / ||p_j - p_i||.
double bearing_residual(const Vec2& p_i, const Vec2& p_j, const Vec2& g);

/// Condensed problem over z = [u_0; ...; u_{N-1}; r_bar]. The MPC cost is
/// J(z) = 0.5 z'Hz + g'z + constant. The steady pair is x_bar = S r_bar,
/// u_bar = 0.
struct MpcProblem {
  QpProblem qp;
  double constant = 0.0;
  int N = 0;
  Eigen::VectorXd x0;
  Vec2 reference = Vec2::Zero();
  bool pinned = false;          // r_bar = r imposed as an equality
  Prediction prediction;
  Eigen::MatrixXd steady_map;   // S: nx x 2
  // Per inequality row: (prediction step, index within that step).
  std::vector<std::pair<int, int>> row_tags;

  int input_offset(int l) const { return 2 * l; }
  int reference_offset() const { return 2 * N; }
};

/// Throws ModelUnsupported for models without a linear condensed form and
/// InvalidArgument on a bad configuration or state.
MpcProblem build_qp(const Eigen::VectorXd& x0, const Vec2& reference, const BearingTargets& targets,
                    const RobotModel& model, const MpcConfig& cfg);

struct MpcSolution {
  std::vector<Vec2> inputs;
  std::vector<Eigen::VectorXd> states;  // x_0 .. x_N
  Vec2 reference = Vec2::Zero();        // artificial reference r_bar
  Eigen::VectorXd steady_state;
  Vec2 steady_input = Vec2::Zero();
  double objective = 0.0;               // J at the returned iterate
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = true;                // false only with allow_partial
  std::vector<int> active;
};

struct MpcSolveOptions {
  std::span<const int> warm_active;
  // Return the last iterate on MaxIterations instead of throwing.
  bool allow_partial = false;
};

/// Throws Infeasible on inconsistent constraints and MaxIterations when
/// the iteration cap is hit (unless allow_partial).
MpcSolution solve_mpc(const MpcProblem& problem, const MpcConfig& cfg, const MpcSolveOptions& options = {});

/// Inequality rows of `next` matching the active rows of `previous`
/// shifted one step earlier.
std::vector<int> shifted_active_set(const MpcProblem& previous, std::span<const int> active, const MpcProblem& next);

struct MpcControl {
  Vec2 u = Vec2::Zero();
  bool warning = false;  // iteration cap hit; u is the clipped last iterate
  MpcSolution solution;
};

/// First input of the optimal sequence.
MpcControl mpc_control(const Eigen::VectorXd& x0, const Vec2& reference, const BearingTargets& targets,
                       const RobotModel& model, const MpcConfig& cfg);

/// Receding-horizon controller for one robot, warm-started from the
/// shifted active set of its previous solve.
class TrackingController {
 public:
  TrackingController(RobotModel model, MpcConfig cfg);

  MpcControl step(const Eigen::VectorXd& x0, const Vec2& reference, const BearingTargets& targets);
  void reset();

  const RobotModel& model() const { return model_; }
  const MpcConfig& config() const { return cfg_; }

 private:
  RobotModel model_;
  MpcConfig cfg_;
  std::optional<MpcProblem> last_problem_;
  std::vector<int> last_active_;
};

}  // namespace rcov
