#pragma once

#include <span>
#include <vector>

#include "rcov/rigidity.hpp"

namespace rcov {

enum class Density { Uniform };

using Polygon = std::vector<Vec2>;

/// Signed area (positive for counter-clockwise order).
double polygon_area(std::span<const Vec2> poly);

/// Area centroid; throws ZeroArea for a degenerate polygon.
Vec2 polygon_centroid(std::span<const Vec2> poly);

/// Keeps the part of a convex polygon with normal . q <= offset.
Polygon clip_halfplane(std::span<const Vec2> poly, const Vec2& normal, double offset);

/// Convex mission space, vertices counter-clockwise.
class MissionSpace {
 public:
  /// Throws DegeneratePolygon unless the polygon has at least 3 vertices, is
  /// strictly convex, counter-clockwise and of positive area.
  explicit MissionSpace(Polygon vertices, Density density = Density::Uniform);

  static MissionSpace rectangle(const Vec2& lo, const Vec2& hi);

  const Polygon& vertices() const { return vertices_; }
  Density density() const { return density_; }
  double area() const { return polygon_area(vertices_); }
  Vec2 lower() const;
  Vec2 upper() const;
  bool contains(const Vec2& q, double tol = 1e-12) const;

 private:
  Polygon vertices_;
  Density density_;
};

struct VoronoiCell {
  int owner = -1;  // robot id
  Polygon polygon;
  Vec2 centroid = Vec2::Zero();
  double mass = 0.0;  // area under uniform density
};

struct VoronoiPartition {
  std::vector<VoronoiCell> cells;  // one per generator, in input order
  std::vector<int> jittered;       // generators moved by 1e-9 to break ties
};

/// Cells by clipping the space against perpendicular-bisector half-planes.
/// `owners` labels the cells (default: generator index). An empty cell
/// (generator outside the space) has zero mass and its generator as centroid.
VoronoiPartition voronoi_partition(std::span<const Vec2> generators, const MissionSpace& space,
                                   std::span<const int> owners = {});

/// Throws ZeroArea on a degenerate cell.
Vec2 cell_centroid(const VoronoiCell& cell, Density density = Density::Uniform);

/// Sum over i of the integral of ||q - positions[i]||^2 over cells[i], exact
/// per triangle.
double coverage_cost(std::span<const Vec2> positions, std::span<const VoronoiCell> cells,
                     Density density = Density::Uniform);

/// Integral of ||q - p||^2 over one convex polygon.
double polar_moment(std::span<const Vec2> poly, const Vec2& p);

}  // namespace rcov
