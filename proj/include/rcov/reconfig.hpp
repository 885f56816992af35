#pragma once

#include <span>
#include <vector>

#include "rcov/network.hpp"
#include "rcov/rigidity.hpp"

namespace rcov {

std::vector<int> common_neighbors(const Graph& g, int v, int w);

/// Edge-contraction screen: an edge whose endpoints share two or more
/// neighbours cannot be contracted without losing rigidity.
bool is_noncontractible(const Graph& g, Edge e);

/// Merges e.b into e.a (the merged vertex keeps index e.a); duplicate edges
/// collapse and vertices above e.b shift down by one.
Graph contract_edge(const Graph& g, Edge e);

struct Departure {
  int vertex = -1;
  EnergyLevel level = EnergyLevel::Four;
};

/// Robots leaving in one step. Only level-3/4 robots may depart.
struct DepartureBatch {
  std::vector<Departure> departing;

  void validate(int vertex_count) const;
};

/// Edge ids use the indices of the framework passed in.
struct RepairReport {
  std::vector<Edge> removed_edges;
  std::vector<Edge> added_edges;
  bool used_fallback = false;
  // A level-3 departure had no level-1/2 neighbour and was repaired with
  // edges among its former neighbours.
  bool relaxed_levels = false;
  // Max hop distance, in the pre-departure graph, from the departed vertex to
  // the endpoints of the edges added on its behalf. 0 when nothing was added.
  int locality = 0;
};

struct RemovalResult {
  Framework framework;  // compacted: vertices above the removed one shift down
  RepairReport report;
};

/// Reverse Henneberg step for a level-4 departure (degree 2 or 3).
RemovalResult remove_level4(const Framework& fw, const HennebergRecord& record, int v);

/// Inheritance repair for a level-3 departure. `levels` has one entry per
/// vertex of `fw`.
RemovalResult remove_level3(const Framework& fw, int v, std::span<const EnergyLevel> levels);

struct ReconfigResult {
  Framework framework;
  HennebergRecord record;
  RepairReport report;
  std::vector<int> survivors;  // new vertex index -> index in the input framework
};

/// Bottom-up reconfiguration: level-4 departures first (in batch order), then
/// level 3. The result is verified minimally rigid and its record rebuilt.
ReconfigResult reconfigure(const Framework& fw, const HennebergRecord& record, const DepartureBatch& batch,
                           std::span<const EnergyLevel> levels);

/// Adds rank-increasing edges in order of increasing hop distance until the
/// framework is IBR. Returns the input unchanged if it already is.
Framework greedy_rigidity_repair(const Framework& fw);

/// Re-derives a construction order for a minimally rigid graph by peeling
/// degree-2 vertices and valid inverse edge splits.
HennebergRecord derive_record(const Graph& g);

/// Breadth-first hop distances from `source`; unreachable vertices get -1.
std::vector<int> hop_distances(const Graph& g, int source);

}  // namespace rcov
