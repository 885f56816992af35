#pragma once

#include <compare>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rcov {

using Vec2 = Eigen::Vector2d;

// Minimum separation for a bearing between two points to be defined.
inline constexpr double kCoincidenceThreshold = 1e-9;
// Relative singular-value threshold used for every numerical rank test.
inline constexpr double kDefaultRankTolerance = 1e-8;

/// Undirected edge stored with a < b; the defaulted ordering is the canonical
/// lexicographic edge order used by bearing vectors and serialized files.
struct Edge {
  int a = 0;
  int b = 0;
  auto operator<=>(const Edge&) const = default;
};

Edge make_edge(int i, int j);

class Graph {
 public:
  Graph() = default;
  explicit Graph(int vertex_count);
  Graph(int vertex_count, std::initializer_list<std::pair<int, int>> edges);

  int vertex_count() const { return static_cast<int>(adjacency_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  /// Appends an isolated vertex and returns its index.
  int add_vertex();
  /// Throws InvalidArgument on self-loops, out-of-range indices, or duplicates.
  void add_edge(int i, int j);
  /// Returns false when the edge was not present.
  bool remove_edge(int i, int j);
  bool has_edge(int i, int j) const;

  const std::set<Edge>& edges() const { return edges_; }
  const std::set<int>& neighbors(int v) const;
  int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

  /// Copy with `v` deleted; vertices above `v` shift down by one.
  Graph without_vertex(int v) const;

  bool operator==(const Graph& other) const { return edges_ == other.edges_ && vertex_count() == other.vertex_count(); }

 private:
  void check_vertex(int v) const;

  std::vector<std::set<int>> adjacency_;
  std::set<Edge> edges_;
};

/// Planar robot positions. Finite coordinates and pairwise separation above
/// kCoincidenceThreshold are enforced on construction.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<Vec2> points);

  int size() const { return static_cast<int>(points_.size()); }
  const Vec2& operator[](int i) const { return points_[static_cast<std::size_t>(i)]; }
  std::span<const Vec2> points() const { return points_; }
  Configuration without_point(int i) const;
  Configuration with_point(const Vec2& p) const;

  /// Stacked [x0, y0, x1, y1, ...].
  Eigen::VectorXd stacked() const;

 private:
  std::vector<Vec2> points_;
};

struct Framework {
  Framework() = default;
  Framework(Graph g, Configuration c);

  int vertex_count() const { return graph.vertex_count(); }

  Graph graph;
  Configuration config;
};

Vec2 bearing_of(const Vec2& from, const Vec2& to);

/// Unit bearings, one per edge, in canonical edge order.
std::vector<Vec2> bearing_function(const Framework& fw);

/// Orthogonal projector onto the complement of a unit vector g.
Eigen::Matrix2d orthogonal_projector(const Vec2& g);

/// 2m x 2n bearing rigidity matrix; its kernel holds exactly the
/// bearing-preserving infinitesimal motions.
Eigen::MatrixXd bearing_rigidity_matrix(const Framework& fw);

/// Orthonormal basis (2n x 3) of {x-translation, y-translation, scaling}.
Eigen::MatrixXd trivial_motion_basis(std::span<const Vec2> positions);

int numerical_rank(const Eigen::MatrixXd& m, double tol = kDefaultRankTolerance);

struct IbrReport {
  bool rigid = false;
  int rank = 0;
  int nullity = 0;
};

/// Infinitesimal bearing rigidity via SVD rank: rigid iff rank == 2n - 3.
IbrReport is_ibr(const Framework& fw, double tol = kDefaultRankTolerance);

// Henneberg primitives. The new vertex always receives index g.vertex_count().
Graph vertex_addition(const Graph& g, int i, int j);
Graph edge_splitting(const Graph& g, Edge split, int third);

}  // namespace rcov
