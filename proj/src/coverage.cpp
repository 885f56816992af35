#include "rcov/coverage.hpp"

#include <algorithm>
#include <cmath>

#include "rcov/error.hpp"

namespace rcov {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

constexpr double kTie = 1e-9;
constexpr double kTinyArea = 1e-18;

}  // namespace

double polygon_area(std::span<const Vec2> poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * twice;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
  if (poly.size() < 3) throw Error(ErrorKind::ZeroArea, "polygon has fewer than 3 vertices");
  // Shift to the first vertex for accuracy.
  const Vec2 o = poly[0];
  double twice = 0.0;
  Vec2 acc = Vec2::Zero();
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const Vec2 a = poly[i] - o, b = poly[i + 1] - o;
    const double c = cross(a, b);
    twice += c;
    acc += c * (a + b);
  }
  if (std::abs(twice) <= kTinyArea) throw Error(ErrorKind::ZeroArea, "polygon has zero area");
  return o + acc / (3.0 * twice);
}

Polygon clip_halfplane(std::span<const Vec2> poly, const Vec2& normal, double offset) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % n];
    const double dc = normal.dot(cur) - offset;
    const double dn = normal.dot(nxt) - offset;
    if (dc <= 0.0) out.push_back(cur);
    if ((dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0)) {
      const double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  // Drop repeated vertices produced by clipping through a vertex.
  Polygon clean;
  for (const Vec2& v : out)
    if (clean.empty() || (v - clean.back()).norm() > 1e-15) clean.push_back(v);
  while (clean.size() > 1 && (clean.front() - clean.back()).norm() <= 1e-15) clean.pop_back();
  return clean;
}

MissionSpace::MissionSpace(Polygon vertices, Density density) : vertices_(std::move(vertices)), density_(density) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw Error(ErrorKind::DegeneratePolygon, "mission space needs at least 3 vertices");
  for (const Vec2& v : vertices_)
    if (!v.allFinite()) throw Error(ErrorKind::DegeneratePolygon, "non-finite mission space vertex");
  double scale = 0.0;
  for (const Vec2& v : vertices_) scale = std::max(scale, (v - vertices_[0]).norm());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e1 = vertices_[(i + 1) % n] - vertices_[i];
    const Vec2 e2 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
    if (cross(e1, e2) <= 1e-9 * scale * scale)
      throw Error(ErrorKind::DegeneratePolygon, "mission space must be strictly convex and counter-clockwise");
  }
  if (!(polygon_area(vertices_) > 0.0)) throw Error(ErrorKind::DegeneratePolygon, "mission space has no area");
}

MissionSpace MissionSpace::rectangle(const Vec2& lo, const Vec2& hi) {
  return MissionSpace({lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())});
}

Vec2 MissionSpace::lower() const {
  Vec2 lo = vertices_[0];
  for (const Vec2& v : vertices_) lo = lo.cwiseMin(v);
  return lo;
}

Vec2 MissionSpace::upper() const {
  Vec2 hi = vertices_[0];
  for (const Vec2& v : vertices_) hi = hi.cwiseMax(v);
  return hi;
}

bool MissionSpace::contains(const Vec2& q, double tol) const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = vertices_[(i + 1) % n] - vertices_[i];
    if (cross(e, q - vertices_[i]) < -tol * e.norm()) return false;
  }
  return true;
}

VoronoiPartition voronoi_partition(std::span<const Vec2> generators, const MissionSpace& space,
                                   std::span<const int> owners) {
  if (generators.empty()) throw Error(ErrorKind::InvalidArgument, "partition needs at least one generator");
  if (!owners.empty() && owners.size() != generators.size())
    throw Error(ErrorKind::InvalidArgument, "one owner per generator");
  VoronoiPartition out;
  std::vector<Vec2> gen(generators.begin(), generators.end());
  for (std::size_t j = 1; j < gen.size(); ++j) {
    bool moved = false;
    for (bool tie = true; tie;) {
      tie = false;
      for (std::size_t i = 0; i < j; ++i) {
        if ((gen[j] - gen[i]).norm() <= kTie) {
          gen[j] += Vec2(kTie, kTie);
          tie = moved = true;
        }
      }
    }
    if (moved) out.jittered.push_back(static_cast<int>(j));
  }

  for (std::size_t i = 0; i < gen.size(); ++i) {
    Polygon cell = space.vertices();
    for (std::size_t j = 0; j < gen.size() && cell.size() >= 3; ++j) {
      if (j == i) continue;
      const Vec2 n = gen[j] - gen[i];
      cell = clip_halfplane(cell, n, n.dot(0.5 * (gen[i] + gen[j])));
    }
    VoronoiCell c;
    c.owner = owners.empty() ? static_cast<int>(i) : owners[i];
    if (cell.size() >= 3 && polygon_area(cell) > kTinyArea) {
      c.polygon = std::move(cell);
      c.mass = polygon_area(c.polygon);
      c.centroid = polygon_centroid(c.polygon);
    } else {
      c.centroid = generators[i];
    }
    out.cells.push_back(std::move(c));
  }
  return out;
}

Vec2 cell_centroid(const VoronoiCell& cell, Density /*density*/) { return polygon_centroid(cell.polygon); }

double polar_moment(std::span<const Vec2> poly, const Vec2& p) {
  double total = 0.0;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    const Vec2 a = poly[0] - p, b = poly[k] - p, c = poly[k + 1] - p;
    const double area = 0.5 * cross(b - a, c - a);
    total += area / 6.0 * (a.squaredNorm() + b.squaredNorm() + c.squaredNorm() + a.dot(b) + a.dot(c) + b.dot(c));
  }
  return total;
}

double coverage_cost(std::span<const Vec2> positions, std::span<const VoronoiCell> cells, Density /*density*/) {
  if (positions.size() != cells.size()) throw Error(ErrorKind::InvalidArgument, "one cell per position");
  double h = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) h += polar_moment(cells[i].polygon, positions[i]);
  return h;
}

}  // namespace rcov
