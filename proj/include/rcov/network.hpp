#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcov/rigidity.hpp"

namespace rcov {

// Level 1 holds the most charged robots: [0.75, 1] -> 1, [0.5, 0.75) -> 2,
// [0.25, 0.5) -> 3, [0, 0.25) -> 4. Bracket boundaries belong to the
// higher-energy level.
enum class EnergyLevel : int { One = 1, Two = 2, Three = 3, Four = 4 };

constexpr int level_number(EnergyLevel l) { return static_cast<int>(l); }

EnergyLevel energy_level(double soc);

struct HennebergStep {
  enum class Kind { VertexAddition, EdgeSplitting };

  Kind kind = Kind::VertexAddition;
  int v = -1;  // vertex introduced by this step
  int i = -1;  // vertex addition: first anchor; edge splitting: endpoint of the split edge
  int j = -1;  // vertex addition: second anchor; edge splitting: other endpoint
  int k = -1;  // edge splitting only: third vertex
  bool relaxed = false;  // level constraints could not be met and were relaxed

  Edge removed_edge() const { return make_edge(i, j); }
  bool operator==(const HennebergStep&) const = default;
};

/// Construction log. Vertex ids refer to framework indices; each step
/// introduces a vertex absent from the graph built so far.
struct HennebergRecord {
  int v1 = -1;
  int v2 = -1;
  std::vector<HennebergStep> steps;

  /// Rebuilds the graph on `vertex_count` vertices by applying the steps.
  Graph replay(int vertex_count) const;
  bool operator==(const HennebergRecord&) const = default;
};

struct AnchorCandidate {
  int vertex = -1;
  EnergyLevel level = EnergyLevel::One;
  Vec2 position = Vec2::Zero();
};

/// `lower` satisfies level(lower) <= new level, `upper` satisfies
/// level(upper) >= new level, unless `relaxed` is set.
struct AnchorChoice {
  int lower = -1;
  int upper = -1;
  bool relaxed = false;
};

/// All anchor pairs in preference order: sandwich-feasible pairs first,
/// then (with relaxed set) the least-violating ones. Within a group the
/// one-level-apart levels win, then Euclidean distance to the new robot,
/// then the lowest index.
std::vector<AnchorChoice> ranked_anchor_pairs(std::span<const AnchorCandidate> candidates,
                                              EnergyLevel new_level, const Vec2& new_position);

/// Best sandwich-feasible pair; throws NoFeasibleAnchors if none exists.
AnchorChoice choose_anchors(std::span<const AnchorCandidate> candidates, EnergyLevel new_level,
                            const Vec2& new_position);

struct BuildOptions {
  double edge_split_probability = 0.3;
  // When false, fewer than two level-1 robots is an error instead of a warning.
  bool allow_level_fallback = true;
  int jitter_retries = 3;
  double jitter_scale = 1e-6;
};

struct NetworkBuild {
  Framework framework;
  HennebergRecord record;
  std::vector<std::string> warnings;
  int jitter_attempts = 0;
};

/// Energy-aware hierarchical construction. Robots are processed in
/// descending SOC order; vertex i of the framework is input robot i.
NetworkBuild build_network(const Configuration& positions, std::span<const double> socs,
                           std::uint64_t seed, const BuildOptions& options = {});

struct NetworkUpdate {
  Framework framework;
  HennebergRecord record;
  bool relaxed = false;
};

/// Joins one robot by vertex addition; it receives index fw.vertex_count().
/// `socs` holds the SOC of each existing vertex.
NetworkUpdate insert_robot(const Framework& fw, const HennebergRecord& record, std::span<const double> socs,
                           const Vec2& position, double soc);

/// True if the record replays to exactly this graph.
bool record_matches(const HennebergRecord& record, const Graph& g);

}  // namespace rcov
