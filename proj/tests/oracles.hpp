#pragma once
// Test-only reference computations. Nothing here calls into the code path it
// is used to check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rcov/rigidity.hpp"

namespace oracle {

using rcov::Vec2;

// Central-difference Jacobian of the stacked bearing vector with respect to
// the stacked positions; computed from raw coordinates only.
inline Eigen::MatrixXd bearing_jacobian_fd(const std::vector<std::pair<int, int>>& edges,
                                           const std::vector<Vec2>& pts, double h = 1e-6) {
  const int n = static_cast<int>(pts.size());
  const int m = static_cast<int>(edges.size());
  auto stacked_bearings = [&](const std::vector<Vec2>& p) {
    Eigen::VectorXd out(2 * m);
    for (int e = 0; e < m; ++e) {
      const auto [i, j] = edges[static_cast<std::size_t>(e)];
      const double dx = p[static_cast<std::size_t>(j)].x() - p[static_cast<std::size_t>(i)].x();
      const double dy = p[static_cast<std::size_t>(j)].y() - p[static_cast<std::size_t>(i)].y();
      const double len = std::sqrt(dx * dx + dy * dy);
      out(2 * e) = dx / len;
      out(2 * e + 1) = dy / len;
    }
    return out;
  };
  Eigen::MatrixXd jac(2 * m, 2 * n);
  for (int c = 0; c < 2 * n; ++c) {
    std::vector<Vec2> plus = pts, minus = pts;
    plus[static_cast<std::size_t>(c / 2)](c % 2) += h;
    minus[static_cast<std::size_t>(c / 2)](c % 2) -= h;
    jac.col(c) = (stacked_bearings(plus) - stacked_bearings(minus)) / (2 * h);
  }
  return jac;
}

// Rank by full-pivot LU (a different factorization from the library's SVD).
inline int lu_rank(const Eigen::MatrixXd& m, double threshold = 1e-6) {
  if (m.size() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(threshold);
  return static_cast<int>(lu.rank());
}

inline int fd_bearing_rank(const rcov::Graph& g, const std::vector<Vec2>& pts) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : g.edges()) edges.emplace_back(e.a, e.b);
  return lu_rank(bearing_jacobian_fd(edges, pts));
}

inline std::vector<Vec2> random_points(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(unit(rng), unit(rng));
  return pts;
}

// Random Henneberg graph built directly on edge lists.
inline rcov::Graph random_henneberg(std::mt19937_64& rng, int n, double split_probability = 0.4) {
  rcov::Graph g(2, {{0, 1}});
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  while (g.vertex_count() < n) {
    const int cur = g.vertex_count();
    std::uniform_int_distribution<int> pick(0, cur - 1);
    if (cur >= 3 && coin(rng) < split_probability) {
      std::vector<rcov::Edge> edges(g.edges().begin(), g.edges().end());
      std::uniform_int_distribution<std::size_t> pe(0, edges.size() - 1);
      const rcov::Edge e = edges[pe(rng)];
      int k = pick(rng);
      while (k == e.a || k == e.b) k = pick(rng);
      g = rcov::edge_splitting(g, e, k);
    } else {
      int a = pick(rng), b = pick(rng);
      while (b == a) b = pick(rng);
      g = rcov::vertex_addition(g, a, b);
    }
  }
  return g;
}

// Brute-force QP: enumerate active sets of the inequalities, solve the
// equality-constrained KKT system for each, keep the feasible one with
// nonnegative multipliers and the lowest objective. Tiny problems only.
struct BruteQp {
  bool feasible = false;
  Eigen::VectorXd z;
  double objective = 0.0;
};

inline BruteQp brute_force_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& Aeq,
                              const Eigen::VectorXd& beq, const Eigen::MatrixXd& Ain, const Eigen::VectorXd& bin) {
  const int n = static_cast<int>(g.size());
  const int me = static_cast<int>(Aeq.rows());
  const int mi = static_cast<int>(Ain.rows());
  BruteQp best;
  for (int mask = 0; mask < (1 << mi); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < mi; ++i)
      if (mask & (1 << i)) act.push_back(i);
    const int k = me + static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd A(k, n);
    Eigen::VectorXd b(k);
    if (me > 0) {
      A.topRows(me) = Aeq;
      b.head(me) = beq;
    }
    for (std::size_t t = 0; t < act.size(); ++t) {
      A.row(me + static_cast<int>(t)) = Ain.row(act[t]);
      b(me + static_cast<int>(t)) = bin(act[t]);
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = H;
    K.topRightCorner(n, k) = A.transpose();
    K.bottomLeftCorner(k, n) = A;
    Eigen::VectorXd rhs(n + k);
    rhs.head(n) = -g;
    rhs.tail(k) = b;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    const Eigen::VectorXd lam = sol.tail(k);
    bool ok = true;
    for (std::size_t t = 0; t < act.size(); ++t)
      if (lam(me + static_cast<int>(t)) < -1e-9) ok = false;
    if (mi > 0 && ((Ain * z - bin).array() > 1e-9).any()) ok = false;
    if (!ok) continue;
    const double f = 0.5 * z.dot(H * z) + g.dot(z);
    if (!best.feasible || f < best.objective) best = {true, z, f};
  }
  return best;
}

}  // namespace oracle
