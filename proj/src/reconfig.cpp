#include "rcov/reconfig.hpp"

#include <algorithm>
#include <deque>
#include <random>

#include "rcov/error.hpp"

namespace rcov {

std::vector<int> common_neighbors(const Graph& g, int v, int w) {
  if (v == w) throw Error(ErrorKind::InvalidArgument, "common neighbours of a vertex with itself");
  std::vector<int> out;
  const auto& nv = g.neighbors(v);
  const auto& nw = g.neighbors(w);
  std::set_intersection(nv.begin(), nv.end(), nw.begin(), nw.end(), std::back_inserter(out));
  return out;
}

bool is_noncontractible(const Graph& g, Edge e) {
  if (!g.has_edge(e.a, e.b))
    throw Error(ErrorKind::MissingEdge, "(" + std::to_string(e.a) + "," + std::to_string(e.b) + ") not in graph");
  return common_neighbors(g, e.a, e.b).size() >= 2;
}

Graph contract_edge(const Graph& g, Edge e) {
  if (!g.has_edge(e.a, e.b))
    throw Error(ErrorKind::MissingEdge, "(" + std::to_string(e.a) + "," + std::to_string(e.b) + ") not in graph");
  Graph merged = g;
  for (int u : g.neighbors(e.b)) {
    if (u == e.a) continue;
    if (!merged.has_edge(e.a, u)) merged.add_edge(e.a, u);
  }
  return merged.without_vertex(e.b);
}

void DepartureBatch::validate(int vertex_count) const {
  if (departing.empty()) throw Error(ErrorKind::InvalidArgument, "empty departure batch");
  std::set<int> seen;
  for (const Departure& d : departing) {
    if (d.vertex < 0 || d.vertex >= vertex_count)
      throw Error(ErrorKind::InvalidArgument, "departing vertex " + std::to_string(d.vertex) + " out of range");
    if (!seen.insert(d.vertex).second)
      throw Error(ErrorKind::InvalidArgument, "vertex " + std::to_string(d.vertex) + " departs twice");
    if (d.level != EnergyLevel::Three && d.level != EnergyLevel::Four)
      throw Error(ErrorKind::InvalidArgument, "only level-3/4 robots depart (vertex " + std::to_string(d.vertex) + ")");
  }
}

std::vector<int> hop_distances(const Graph& g, int source) {
  std::vector<int> dist(static_cast<std::size_t>(g.vertex_count()), -1);
  std::deque<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int w : g.neighbors(u)) {
      if (dist[static_cast<std::size_t>(w)] >= 0) continue;
      dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
      queue.push_back(w);
    }
  }
  return dist;
}

namespace {

// Graph over the original vertex ids; departed vertices stay as isolated,
// dead entries until the final compaction.
struct Workspace {
  Graph graph;
  std::vector<bool> alive;
  const Configuration* config = nullptr;

  int alive_count() const { return static_cast<int>(std::count(alive.begin(), alive.end(), true)); }

  Framework compact(std::vector<int>* survivors = nullptr) const {
    std::vector<int> local(alive.size(), -1);
    std::vector<Vec2> pts;
    std::vector<int> kept;
    for (std::size_t v = 0; v < alive.size(); ++v) {
      if (!alive[v]) continue;
      local[v] = static_cast<int>(pts.size());
      pts.push_back((*config)[static_cast<int>(v)]);
      kept.push_back(static_cast<int>(v));
    }
    Graph g(static_cast<int>(pts.size()));
    for (const Edge& e : graph.edges())
      g.add_edge(local[static_cast<std::size_t>(e.a)], local[static_cast<std::size_t>(e.b)]);
    if (survivors) *survivors = std::move(kept);
    return Framework(std::move(g), Configuration(std::move(pts)));
  }

  int rank() const {
    if (graph.edge_count() == 0) return 0;
    return numerical_rank(bearing_rigidity_matrix(compact()));
  }

  int target_rank() const { return 2 * alive_count() - 3; }

  std::vector<Edge> detach(int v) {
    std::vector<Edge> removed;
    const std::vector<int> nbrs(graph.neighbors(v).begin(), graph.neighbors(v).end());
    for (int u : nbrs) {
      graph.remove_edge(v, u);
      removed.push_back(make_edge(v, u));
    }
    alive[static_cast<std::size_t>(v)] = false;
    return removed;
  }
};

Workspace make_workspace(const Framework& fw) {
  return Workspace{fw.graph, std::vector<bool>(static_cast<std::size_t>(fw.vertex_count()), true), &fw.config};
}

int locality_of(const std::vector<Edge>& added, const std::vector<int>& dist, int unreachable) {
  int worst = 0;
  for (const Edge& e : added) {
    for (int x : {e.a, e.b}) {
      const int d = dist[static_cast<std::size_t>(x)];
      worst = std::max(worst, d < 0 ? unreachable : d);
    }
  }
  return worst;
}

// Adds `e` if it raises the rank; returns whether it was kept.
bool add_if_independent(Workspace& ws, int a, int b, int& rank, std::vector<Edge>& added) {
  if (a == b || ws.graph.has_edge(a, b)) return false;
  ws.graph.add_edge(a, b);
  const int r = ws.rank();
  if (r > rank) {
    rank = r;
    added.push_back(make_edge(a, b));
    return true;
  }
  ws.graph.remove_edge(a, b);
  return false;
}

void level4_step(Workspace& ws, const HennebergRecord& record, int v, RepairReport& report) {
  const int degree = ws.graph.degree(v);
  if (degree != 2 && degree != 3)
    throw Error(ErrorKind::IrreversibleDegree, "vertex " + std::to_string(v) + " has degree " + std::to_string(degree));
  const std::vector<int> nbrs(ws.graph.neighbors(v).begin(), ws.graph.neighbors(v).end());

  Workspace trial = ws;
  std::vector<Edge> removed = trial.detach(v);
  if (degree == 2) {
    if (trial.alive_count() >= 2 && trial.rank() != trial.target_rank())
      throw Error(ErrorKind::RepairFailed, "removing degree-2 vertex left a non-rigid framework");
    ws = std::move(trial);
    report.removed_edges.insert(report.removed_edges.end(), removed.begin(), removed.end());
    return;
  }

  std::vector<Edge> pairs;
  // Prefer restoring the edge this vertex originally split.
  for (const HennebergStep& s : record.steps) {
    if (s.v == v && s.kind == HennebergStep::Kind::EdgeSplitting && ws.graph.has_edge(v, s.i) &&
        ws.graph.has_edge(v, s.j))
      pairs.push_back(s.removed_edge());
  }
  for (std::size_t x = 0; x < nbrs.size(); ++x)
    for (std::size_t y = x + 1; y < nbrs.size(); ++y) pairs.push_back(make_edge(nbrs[x], nbrs[y]));

  for (const Edge& e : pairs) {
    if (trial.graph.has_edge(e.a, e.b)) continue;
    trial.graph.add_edge(e.a, e.b);
    if (trial.rank() == trial.target_rank()) {
      ws = std::move(trial);
      report.removed_edges.insert(report.removed_edges.end(), removed.begin(), removed.end());
      report.added_edges.push_back(e);
      report.locality = std::max(report.locality, 1);
      return;
    }
    trial.graph.remove_edge(e.a, e.b);
  }
  throw Error(ErrorKind::RepairFailed, "no inverse edge split restores rigidity at vertex " + std::to_string(v));
}

void level3_step(Workspace& ws, int v, std::span<const EnergyLevel> levels, bool allow_relaxed,
                 RepairReport& report) {
  const std::vector<int> nbrs(ws.graph.neighbors(v).begin(), ws.graph.neighbors(v).end());
  const Configuration& cfg = *ws.config;
  auto level_of = [&](int u) { return level_number(levels[static_cast<std::size_t>(u)]); };

  // Anchor candidates: level-1 neighbours then level-2, each group ordered
  // by the contraction screen, then distance, then index.
  std::vector<int> anchors;
  for (int tier : {1, 2}) {
    std::vector<int> group;
    for (int u : nbrs)
      if (level_of(u) == tier) group.push_back(u);
    std::sort(group.begin(), group.end(), [&](int a, int b) {
      const bool na = is_noncontractible(ws.graph, make_edge(v, a));
      const bool nb = is_noncontractible(ws.graph, make_edge(v, b));
      return std::make_tuple(na, (cfg[a] - cfg[v]).norm(), a) < std::make_tuple(nb, (cfg[b] - cfg[v]).norm(), b);
    });
    anchors.insert(anchors.end(), group.begin(), group.end());
  }
  bool relaxed = false;
  if (anchors.empty()) {
    if (!allow_relaxed)
      throw Error(ErrorKind::PreconditionViolation,
                  "vertex " + std::to_string(v) + " has no level-1 or level-2 neighbour");
    relaxed = true;
    anchors = nbrs;
    std::sort(anchors.begin(), anchors.end(), [&](int a, int b) {
      return std::make_tuple(level_of(a), (cfg[a] - cfg[v]).norm(), a) <
             std::make_tuple(level_of(b), (cfg[b] - cfg[v]).norm(), b);
    });
  }

  const std::vector<int> dist = hop_distances(ws.graph, v);
  for (int w : anchors) {
    Workspace trial = ws;
    std::vector<Edge> removed = trial.detach(v);
    const int target = trial.target_rank();
    int rank = trial.rank();
    std::vector<Edge> added;
    // Orphaned level-3/4 neighbours inherit w first, then the remaining
    // neighbours (the contraction of (v, w)), then any neighbour pair.
    for (int u : nbrs)
      if (rank < target && u != w && level_of(u) >= 3) add_if_independent(trial, u, w, rank, added);
    for (int u : nbrs)
      if (rank < target && u != w && level_of(u) <= 2) add_if_independent(trial, u, w, rank, added);
    for (std::size_t x = 0; x < nbrs.size() && rank < target; ++x)
      for (std::size_t y = x + 1; y < nbrs.size() && rank < target; ++y)
        add_if_independent(trial, nbrs[x], nbrs[y], rank, added);
    if (rank != target) continue;
    ws = std::move(trial);
    report.removed_edges.insert(report.removed_edges.end(), removed.begin(), removed.end());
    report.added_edges.insert(report.added_edges.end(), added.begin(), added.end());
    report.locality = std::max(report.locality, locality_of(added, dist, ws.graph.vertex_count()));
    report.relaxed_levels = report.relaxed_levels || relaxed;
    return;
  }
  throw Error(ErrorKind::RepairFailed, "inheritance repair failed at vertex " + std::to_string(v));
}

// Greedy completion on the live subgraph. Returns the added edges.
std::vector<Edge> greedy_complete(Workspace& ws) {
  std::vector<Edge> added;
  if (ws.alive_count() < 2) return added;
  int rank = ws.rank();
  const int target = ws.target_rank();
  if (rank >= target) return added;

  const int n = ws.graph.vertex_count();
  struct Candidate {
    int hops;
    Edge e;
  };
  std::vector<Candidate> candidates;
  for (int a = 0; a < n; ++a) {
    if (!ws.alive[static_cast<std::size_t>(a)]) continue;
    const std::vector<int> dist = hop_distances(ws.graph, a);
    for (int b = a + 1; b < n; ++b) {
      if (!ws.alive[static_cast<std::size_t>(b)] || ws.graph.has_edge(a, b)) continue;
      const int d = dist[static_cast<std::size_t>(b)];
      candidates.push_back({d < 0 ? n + 1 : d, Edge{a, b}});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.hops < y.hops; });
  for (const Candidate& c : candidates) {
    if (rank >= target) break;
    add_if_independent(ws, c.e.a, c.e.b, rank, added);
  }
  if (rank < target)
    throw Error(ErrorKind::RepairImpossible,
                "rank plateaued at " + std::to_string(rank) + " below " + std::to_string(target));
  return added;
}

}  // namespace

RemovalResult remove_level4(const Framework& fw, const HennebergRecord& record, int v) {
  if (v < 0 || v >= fw.vertex_count()) throw Error(ErrorKind::InvalidArgument, "vertex out of range");
  Workspace ws = make_workspace(fw);
  RepairReport report;
  level4_step(ws, record, v, report);
  return RemovalResult{ws.compact(), std::move(report)};
}

RemovalResult remove_level3(const Framework& fw, int v, std::span<const EnergyLevel> levels) {
  if (v < 0 || v >= fw.vertex_count()) throw Error(ErrorKind::InvalidArgument, "vertex out of range");
  if (static_cast<int>(levels.size()) != fw.vertex_count())
    throw Error(ErrorKind::InvalidArgument, "one level per vertex required");
  Workspace ws = make_workspace(fw);
  RepairReport report;
  level3_step(ws, v, levels, false, report);
  return RemovalResult{ws.compact(), std::move(report)};
}

Framework greedy_rigidity_repair(const Framework& fw) {
  if (fw.vertex_count() < 2 || is_ibr(fw).rigid) return fw;
  Workspace ws = make_workspace(fw);
  greedy_complete(ws);
  return ws.compact();
}

ReconfigResult reconfigure(const Framework& fw, const HennebergRecord& record, const DepartureBatch& batch,
                           std::span<const EnergyLevel> levels) {
  const int n = fw.vertex_count();
  batch.validate(n);
  if (static_cast<int>(levels.size()) != n) throw Error(ErrorKind::InvalidArgument, "one level per vertex required");
  if (n - static_cast<int>(batch.departing.size()) < 2)
    throw Error(ErrorKind::InvalidArgument, "reconfiguration must leave at least two robots");

  std::vector<Departure> order = batch.departing;
  std::stable_partition(order.begin(), order.end(), [](const Departure& d) { return d.level == EnergyLevel::Four; });

  const Graph before = fw.graph;
  Workspace ws = make_workspace(fw);
  RepairReport report;
  bool needs_fallback = false;

  for (const Departure& d : order) {
    try {
      if (d.level == EnergyLevel::Four) {
        try {
          level4_step(ws, record, d.vertex, report);
          continue;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::IrreversibleDegree && e.kind() != ErrorKind::RepairFailed) throw;
        }
      }
      level3_step(ws, d.vertex, levels, true, report);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RepairFailed) throw;
      auto removed = ws.detach(d.vertex);
      report.removed_edges.insert(report.removed_edges.end(), removed.begin(), removed.end());
      needs_fallback = true;
    }
  }

  if (needs_fallback || ws.rank() != ws.target_rank()) {
    std::vector<Edge> added;
    try {
      added = greedy_complete(ws);
    } catch (const Error& e) {
      throw Error(ErrorKind::RepairFailed, std::string("fallback repair failed: ") + e.what());
    }
    report.used_fallback = true;
    report.added_edges.insert(report.added_edges.end(), added.begin(), added.end());
    for (const Edge& e : added) {
      // Distance to the nearest departed vertex in the pre-departure graph.
      int best = n + 1;
      for (const Departure& dep : order) {
        const std::vector<int> dist = hop_distances(before, dep.vertex);
        int worst = 0;
        for (int x : {e.a, e.b}) {
          const int h = dist[static_cast<std::size_t>(x)];
          worst = std::max(worst, h < 0 ? n + 1 : h);
        }
        best = std::min(best, worst);
      }
      report.locality = std::max(report.locality, best);
    }
  }

  ReconfigResult result;
  result.framework = ws.compact(&result.survivors);
  const IbrReport check = is_ibr(result.framework);
  if (!check.rigid)
    throw Error(ErrorKind::RepairFailed, "post-repair framework has rank " + std::to_string(check.rank));
  result.record = derive_record(result.framework.graph);
  result.report = std::move(report);
  return result;
}

HennebergRecord derive_record(const Graph& g) {
  const int n = g.vertex_count();
  if (n < 2) return HennebergRecord{};
  if (g.edge_count() != 2 * n - 3)
    throw Error(ErrorKind::InvalidArgument, "record derivation needs a minimally rigid graph");

  // Generic positions make rank tests combinatorial.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(unit(rng), unit(rng));
  const Configuration generic(std::move(pts));

  Workspace ws{g, std::vector<bool>(static_cast<std::size_t>(n), true), &generic};
  std::vector<HennebergStep> reversed;
  while (ws.alive_count() > 2) {
    bool peeled = false;
    for (int v = 0; v < n && !peeled; ++v) {
      if (!ws.alive[static_cast<std::size_t>(v)] || ws.graph.degree(v) != 2) continue;
      const std::vector<int> nb(ws.graph.neighbors(v).begin(), ws.graph.neighbors(v).end());
      ws.detach(v);
      HennebergStep s;
      s.kind = HennebergStep::Kind::VertexAddition;
      s.v = v;
      s.i = nb[0];
      s.j = nb[1];
      reversed.push_back(s);
      peeled = true;
    }
    for (int v = 0; v < n && !peeled; ++v) {
      if (!ws.alive[static_cast<std::size_t>(v)] || ws.graph.degree(v) != 3) continue;
      const std::vector<int> nb(ws.graph.neighbors(v).begin(), ws.graph.neighbors(v).end());
      for (int skip = 2; skip >= 0 && !peeled; --skip) {
        int x = -1, y = -1;
        for (int t = 0; t < 3; ++t) {
          if (t == skip) continue;
          (x < 0 ? x : y) = nb[static_cast<std::size_t>(t)];
        }
        if (ws.graph.has_edge(x, y)) continue;
        Workspace trial = ws;
        trial.detach(v);
        trial.graph.add_edge(x, y);
        if (trial.rank() != trial.target_rank()) continue;
        ws = std::move(trial);
        HennebergStep s;
        s.kind = HennebergStep::Kind::EdgeSplitting;
        s.v = v;
        s.i = x;
        s.j = y;
        s.k = nb[static_cast<std::size_t>(skip)];
        reversed.push_back(s);
        peeled = true;
      }
    }
    if (!peeled) throw Error(ErrorKind::RepairFailed, "graph admits no inverse Henneberg step");
  }
  HennebergRecord rec;
  for (int v = 0; v < n; ++v) {
    if (!ws.alive[static_cast<std::size_t>(v)]) continue;
    (rec.v1 < 0 ? rec.v1 : rec.v2) = v;
  }
  if (!ws.graph.has_edge(rec.v1, rec.v2)) throw Error(ErrorKind::RepairFailed, "peeling left a non-adjacent pair");
  rec.steps.assign(reversed.rbegin(), reversed.rend());
  return rec;
}

}  // namespace rcov
