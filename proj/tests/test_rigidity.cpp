#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "rcov/error.hpp"
#include "rcov/rigidity.hpp"

using namespace rcov;

namespace {

Framework make_fw(Graph g, std::vector<Vec2> pts) { return Framework(std::move(g), Configuration(std::move(pts))); }

using testing::error_kind;

}  // namespace

TEST_CASE("bearing_of normalizes the displacement") {
  CHECK((bearing_of({0, 0}, {1, 0}) - Vec2(1, 0)).norm() < 1e-15);
  CHECK((bearing_of({0, 0}, {3, 4}) - Vec2(0.6, 0.8)).norm() < 1e-15);
  CHECK((bearing_of({3, 4}, {0, 0}) + bearing_of({0, 0}, {3, 4})).norm() < 1e-15);
  CHECK(error_kind([] { bearing_of({1, 1}, {1, 1}); }) == ErrorKind::CoincidentPoints);
}

TEST_CASE("bearing_function follows canonical edge order") {
  auto single = bearing_function(make_fw(Graph(2, {{0, 1}}), {{0, 0}, {2, 0}}));
  REQUIRE(single.size() == 1);
  CHECK((single[0] - Vec2(1, 0)).norm() < 1e-15);

  // Edges inserted out of order still come back as 01, 02, 12.
  auto tri = bearing_function(make_fw(Graph(3, {{1, 2}, {0, 2}, {0, 1}}), {{0, 0}, {1, 0}, {0, 1}}));
  REQUIRE(tri.size() == 3);
  const double h = std::sqrt(2.0) / 2.0;
  CHECK((tri[0] - Vec2(1, 0)).norm() < 1e-15);
  CHECK((tri[1] - Vec2(0, 1)).norm() < 1e-15);
  CHECK((tri[2] - Vec2(-h, h)).norm() < 1e-15);

  CHECK(bearing_function(make_fw(Graph(2), {{0, 0}, {1, 0}})).empty());
}

TEST_CASE("rigidity matrix of a single edge") {
  const Eigen::MatrixXd m = bearing_rigidity_matrix(make_fw(Graph(2, {{0, 1}}), {{0, 0}, {1, 0}}));
  Eigen::MatrixXd expected(2, 4);
  expected << 0, 0, 0, 0,  //
      0, -1, 0, 1;
  CHECK((m - expected).norm() < 1e-15);
}

TEST_CASE("rigidity matrix annihilates translation and scaling, and matches the FD Jacobian") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6;
    Graph g = oracle::random_henneberg(rng, n);
    auto pts = oracle::random_points(rng, n);
    Framework fw(g, Configuration(pts));
    const Eigen::MatrixXd m = bearing_rigidity_matrix(fw);

    Eigen::VectorXd shift(2 * n), centred(2 * n);
    Vec2 c = Vec2::Zero();
    for (const auto& p : pts) c += p;
    c /= n;
    for (int i = 0; i < n; ++i) {
      shift.segment<2>(2 * i) = Vec2(0.3, -1.7);
      centred.segment<2>(2 * i) = pts[static_cast<std::size_t>(i)] - c;
    }
    CHECK((m * shift).norm() < 1e-12);
    CHECK((m * centred).norm() < 1e-10);

    std::vector<std::pair<int, int>> edges;
    for (const auto& e : g.edges()) edges.emplace_back(e.a, e.b);
    CHECK((m - oracle::bearing_jacobian_fd(edges, pts)).norm() < 1e-6);
  }
}

TEST_CASE("trivial motion basis") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}};
  const Eigen::MatrixXd b = trivial_motion_basis(pts);
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXd expected(4, 3);
  expected << r, 0, -r,  //
      0, r, 0,           //
      r, 0, r,           //
      0, r, 0;
  CHECK((b - expected).norm() < 1e-15);

  std::mt19937_64 rng(3);
  auto many = oracle::random_points(rng, 9);
  const Eigen::MatrixXd basis = trivial_motion_basis(many);
  CHECK((basis.transpose() * basis - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);

  // Translating the configuration leaves the span unchanged.
  auto moved = many;
  for (auto& p : moved) p += Vec2(5, -2);
  const Eigen::MatrixXd other = trivial_motion_basis(moved);
  const Eigen::MatrixXd proj = basis * basis.transpose();
  CHECK((proj * other - other).norm() < 1e-12);

  const std::vector<Vec2> same{{1, 1}, {1, 1}, {1, 1}};
  CHECK(error_kind([&] { trivial_motion_basis(same); }) == ErrorKind::DegenerateConfiguration);
}

TEST_CASE("is_ibr examples agree with the FD-Jacobian rank oracle") {
  const std::vector<Vec2> tri_pts{{0.1, 0.2}, {0.9, 0.35}, {0.4, 0.8}};
  Graph tri(3, {{0, 1}, {0, 2}, {1, 2}});
  const IbrReport t = is_ibr(Framework(tri, Configuration(tri_pts)));
  CHECK(t.rigid);
  CHECK(t.rank == 3);
  CHECK(t.nullity == 3);
  CHECK(oracle::fd_bearing_rank(tri, tri_pts) == 3);

  const std::vector<Vec2> line{{0, 0}, {1, 0}, {2, 0}};
  Graph path(3, {{0, 1}, {1, 2}});
  const IbrReport p = is_ibr(Framework(path, Configuration(line)));
  CHECK_FALSE(p.rigid);
  CHECK(oracle::fd_bearing_rank(path, line) < 3);
  CHECK(p.rank == oracle::fd_bearing_rank(path, line));

  const IbrReport k2 = is_ibr(make_fw(Graph(2, {{0, 1}}), {{0, 0}, {1, 0}}));
  CHECK(k2.rigid);
  CHECK(k2.rank == 1);
}

TEST_CASE("Henneberg primitives") {
  Graph k2(2, {{0, 1}});
  Graph tri = vertex_addition(k2, 0, 1);
  CHECK(tri == Graph(3, {{0, 1}, {0, 2}, {1, 2}}));

  Graph four = vertex_addition(tri, 0, 2);
  CHECK(four.vertex_count() == 4);
  CHECK(four.edge_count() == 5);
  CHECK(error_kind([&] { vertex_addition(tri, 0, 0); }) == ErrorKind::InvalidAnchor);

  Graph split = edge_splitting(tri, Edge{0, 1}, 2);
  CHECK(split.vertex_count() == 4);
  CHECK(split.edge_count() == 5);
  CHECK_FALSE(split.has_edge(0, 1));
  const std::vector<Vec2> pts{{0.05, 0.1}, {0.93, 0.2}, {0.4, 0.9}, {0.55, 0.45}};
  CHECK(is_ibr(Framework(split, Configuration(pts))).rigid);
  CHECK(oracle::fd_bearing_rank(split, pts) == 5);

  Graph path(3, {{0, 1}, {1, 2}});
  CHECK(error_kind([&] { edge_splitting(path, Edge{0, 2}, 1); }) == ErrorKind::MissingEdge);
  CHECK(error_kind([&] { edge_splitting(tri, Edge{0, 1}, 1); }) == ErrorKind::InvalidAnchor);
}

TEST_CASE("property: Henneberg graphs are minimally and infinitesimally bearing rigid") {
  std::mt19937_64 rng(2024);
  int rigid = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 9;
    Graph g = oracle::random_henneberg(rng, n);
    CHECK(g.edge_count() == 2 * n - 3);
    const auto pts = oracle::random_points(rng, n);
    const IbrReport r = is_ibr(Framework(g, Configuration(pts)));
    if (r.rigid && r.nullity == 3) ++rigid;
  }
  CHECK(rigid >= 199);
}

TEST_CASE("property: trivial motions lie in the kernel; bearings are similarity invariant") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 8;
    Graph g = oracle::random_henneberg(rng, n);
    const auto pts = oracle::random_points(rng, n);
    Framework fw(g, Configuration(pts));
    const Eigen::MatrixXd m = bearing_rigidity_matrix(fw);
    const Eigen::MatrixXd basis = trivial_motion_basis(pts);
    for (int c = 0; c < 3; ++c) CHECK((m * basis.col(c)).norm() <= 1e-8 * std::max(1.0, m.norm()));

    auto moved = pts;
    const Vec2 pivot(0.3, -4.0);
    for (auto& p : moved) p = pivot + 2.5 * (p - pivot) + Vec2(1.0, 2.0);
    const auto b0 = bearing_function(fw);
    const auto b1 = bearing_function(Framework(g, Configuration(moved)));
    for (std::size_t e = 0; e < b0.size(); ++e) CHECK((b0[e] - b1[e]).norm() < 1e-12);
  }
}

TEST_CASE("property: deleting any edge of a minimally rigid framework breaks rigidity") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 6;
    Graph g = oracle::random_henneberg(rng, n);
    const auto pts = oracle::random_points(rng, n);
    REQUIRE(is_ibr(Framework(g, Configuration(pts))).rigid);
    for (const Edge& e : g.edges()) {
      Graph cut = g;
      cut.remove_edge(e.a, e.b);
      CHECK_FALSE(is_ibr(Framework(cut, Configuration(pts))).rigid);
    }
  }
}

TEST_CASE("graph and configuration invariants are enforced") {
  Graph g(3);
  CHECK(error_kind([&] { g.add_edge(1, 1); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([&] { g.add_edge(0, 3); }) == ErrorKind::InvalidArgument);
  g.add_edge(0, 1);
  CHECK(error_kind([&] { g.add_edge(1, 0); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { Configuration({{0, 0}, {0, 1e-12}}); }) == ErrorKind::CoincidentPoints);
  CHECK(error_kind([] { Framework(Graph(2), Configuration({{0, 0}})); }) == ErrorKind::InvalidArgument);
}
