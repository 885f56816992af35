#include "rcov/rigidity.hpp"

#include <cmath>
#include <string>

#include "rcov/error.hpp"

namespace rcov {

Edge make_edge(int i, int j) {
  if (i == j) throw Error(ErrorKind::InvalidArgument, "self-loop at vertex " + std::to_string(i));
  return i < j ? Edge{i, j} : Edge{j, i};
}

Graph::Graph(int vertex_count) {
  if (vertex_count < 0) throw Error(ErrorKind::InvalidArgument, "negative vertex count");
  adjacency_.resize(static_cast<std::size_t>(vertex_count));
}

Graph::Graph(int vertex_count, std::initializer_list<std::pair<int, int>> edges) : Graph(vertex_count) {
  for (const auto& [i, j] : edges) add_edge(i, j);
}

int Graph::add_vertex() {
  adjacency_.emplace_back();
  return vertex_count() - 1;
}

void Graph::check_vertex(int v) const {
  if (v < 0 || v >= vertex_count())
    throw Error(ErrorKind::InvalidArgument, "vertex " + std::to_string(v) + " out of range");
}

void Graph::add_edge(int i, int j) {
  check_vertex(i);
  check_vertex(j);
  const Edge e = make_edge(i, j);
  if (!edges_.insert(e).second)
    throw Error(ErrorKind::InvalidArgument,
                "duplicate edge (" + std::to_string(e.a) + "," + std::to_string(e.b) + ")");
  adjacency_[static_cast<std::size_t>(i)].insert(j);
  adjacency_[static_cast<std::size_t>(j)].insert(i);
}

bool Graph::remove_edge(int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= vertex_count() || j >= vertex_count()) return false;
  if (edges_.erase(make_edge(i, j)) == 0) return false;
  adjacency_[static_cast<std::size_t>(i)].erase(j);
  adjacency_[static_cast<std::size_t>(j)].erase(i);
  return true;
}

bool Graph::has_edge(int i, int j) const {
  if (i == j || i < 0 || j < 0 || i >= vertex_count() || j >= vertex_count()) return false;
  return edges_.count(make_edge(i, j)) > 0;
}

const std::set<int>& Graph::neighbors(int v) const {
  check_vertex(v);
  return adjacency_[static_cast<std::size_t>(v)];
}

Graph Graph::without_vertex(int v) const {
  check_vertex(v);
  Graph out(vertex_count() - 1);
  auto shift = [v](int u) { return u > v ? u - 1 : u; };
  for (const Edge& e : edges_) {
    if (e.a == v || e.b == v) continue;
    out.add_edge(shift(e.a), shift(e.b));
  }
  return out;
}

Configuration::Configuration(std::vector<Vec2> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite())
      throw Error(ErrorKind::InvalidArgument, "non-finite position at " + std::to_string(i));
    for (std::size_t j = 0; j < i; ++j) {
      if ((points_[i] - points_[j]).norm() <= kCoincidenceThreshold)
        throw Error(ErrorKind::CoincidentPoints,
                    "positions " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
    }
  }
}

Configuration Configuration::without_point(int i) const {
  std::vector<Vec2> pts = points_;
  pts.erase(pts.begin() + i);
  return Configuration(std::move(pts));
}

Configuration Configuration::with_point(const Vec2& p) const {
  std::vector<Vec2> pts = points_;
  pts.push_back(p);
  return Configuration(std::move(pts));
}

Eigen::VectorXd Configuration::stacked() const {
  Eigen::VectorXd out(2 * size());
  for (int i = 0; i < size(); ++i) out.segment<2>(2 * i) = points_[static_cast<std::size_t>(i)];
  return out;
}

Framework::Framework(Graph g, Configuration c) : graph(std::move(g)), config(std::move(c)) {
  if (graph.vertex_count() != config.size())
    throw Error(ErrorKind::InvalidArgument, "graph has " + std::to_string(graph.vertex_count()) +
                                                " vertices but configuration has " +
                                                std::to_string(config.size()) + " points");
}

Vec2 bearing_of(const Vec2& from, const Vec2& to) {
  const Vec2 d = to - from;
  const double len = d.norm();
  if (!(len > kCoincidenceThreshold)) throw Error(ErrorKind::CoincidentPoints, "bearing between coincident points");
  return d / len;
}

std::vector<Vec2> bearing_function(const Framework& fw) {
  std::vector<Vec2> out;
  out.reserve(fw.graph.edges().size());
  for (const Edge& e : fw.graph.edges()) out.push_back(bearing_of(fw.config[e.a], fw.config[e.b]));
  return out;
}

Eigen::Matrix2d orthogonal_projector(const Vec2& g) {
  return Eigen::Matrix2d::Identity() - g * g.transpose();
}

Eigen::MatrixXd bearing_rigidity_matrix(const Framework& fw) {
  const int n = fw.vertex_count();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * fw.graph.edge_count(), 2 * n);
  int row = 0;
  for (const Edge& e : fw.graph.edges()) {
    const Vec2 d = fw.config[e.b] - fw.config[e.a];
    const double len = d.norm();
    if (!(len > kCoincidenceThreshold)) throw Error(ErrorKind::CoincidentPoints, "edge endpoints coincide");
    const Eigen::Matrix2d block = orthogonal_projector(d / len) / len;
    m.block<2, 2>(row, 2 * e.a) = -block;
    m.block<2, 2>(row, 2 * e.b) = block;
    row += 2;
  }
  return m;
}

Eigen::MatrixXd trivial_motion_basis(std::span<const Vec2> positions) {
  const int n = static_cast<int>(positions.size());
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "trivial motion basis needs n >= 2");
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& p : positions) centroid += p;
  centroid /= n;

  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(2 * n, 3);
  for (int i = 0; i < n; ++i) {
    basis(2 * i, 0) = 1.0;
    basis(2 * i + 1, 1) = 1.0;
    basis.block<2, 1>(2 * i, 2) = positions[static_cast<std::size_t>(i)] - centroid;
  }
  const double spread = basis.col(2).norm();
  double scale = 0.0;
  for (const Vec2& p : positions) scale = std::max(scale, p.norm());
  if (spread <= kCoincidenceThreshold * std::max(1.0, scale))
    throw Error(ErrorKind::DegenerateConfiguration, "all points coincide");
  // The centred scaling direction is already orthogonal to both translations.
  basis.col(0) /= std::sqrt(static_cast<double>(n));
  basis.col(1) /= std::sqrt(static_cast<double>(n));
  basis.col(2) /= spread;
  return basis;
}

int numerical_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double threshold = tol * sv(0);
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > threshold) ++rank;
  return rank;
}

IbrReport is_ibr(const Framework& fw, double tol) {
  const int n = fw.vertex_count();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "IBR test needs n >= 2");
  IbrReport report;
  report.rank = fw.graph.edge_count() == 0 ? 0 : numerical_rank(bearing_rigidity_matrix(fw), tol);
  report.nullity = 2 * n - report.rank;
  report.rigid = report.rank == 2 * n - 3;
  return report;
}

Graph vertex_addition(const Graph& g, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= g.vertex_count() || j >= g.vertex_count())
    throw Error(ErrorKind::InvalidAnchor,
                "vertex addition anchors (" + std::to_string(i) + "," + std::to_string(j) + ")");
  Graph out = g;
  const int v = out.add_vertex();
  out.add_edge(v, i);
  out.add_edge(v, j);
  return out;
}

Graph edge_splitting(const Graph& g, Edge split, int third) {
  if (!g.has_edge(split.a, split.b))
    throw Error(ErrorKind::MissingEdge,
                "cannot split absent edge (" + std::to_string(split.a) + "," + std::to_string(split.b) + ")");
  if (third < 0 || third >= g.vertex_count() || third == split.a || third == split.b)
    throw Error(ErrorKind::InvalidAnchor, "edge splitting third vertex " + std::to_string(third));
  Graph out = g;
  out.remove_edge(split.a, split.b);
  const int v = out.add_vertex();
  out.add_edge(v, split.a);
  out.add_edge(v, split.b);
  out.add_edge(v, third);
  return out;
}

}  // namespace rcov
