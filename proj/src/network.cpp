#include "rcov/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include "rcov/error.hpp"

namespace rcov {

EnergyLevel energy_level(double soc) {
  if (!(soc >= 0.0 && soc <= 1.0)) throw Error(ErrorKind::OutOfRange, "SOC " + std::to_string(soc) + " outside [0,1]");
  if (soc >= 0.75) return EnergyLevel::One;
  if (soc >= 0.5) return EnergyLevel::Two;
  if (soc >= 0.25) return EnergyLevel::Three;
  return EnergyLevel::Four;
}

Graph HennebergRecord::replay(int vertex_count) const {
  Graph g(vertex_count);
  std::vector<bool> placed(static_cast<std::size_t>(vertex_count), false);
  auto require_placed = [&](int u) {
    if (u < 0 || u >= vertex_count || !placed[static_cast<std::size_t>(u)])
      throw Error(ErrorKind::InvalidArgument, "record references vertex " + std::to_string(u) + " before placing it");
  };
  if (v1 < 0 || v2 < 0 || v1 >= vertex_count || v2 >= vertex_count)
    throw Error(ErrorKind::InvalidArgument, "record initial pair out of range");
  g.add_edge(v1, v2);
  placed[static_cast<std::size_t>(v1)] = placed[static_cast<std::size_t>(v2)] = true;
  for (const HennebergStep& s : steps) {
    if (s.v < 0 || s.v >= vertex_count || placed[static_cast<std::size_t>(s.v)])
      throw Error(ErrorKind::InvalidArgument, "record step reintroduces vertex " + std::to_string(s.v));
    require_placed(s.i);
    require_placed(s.j);
    if (s.kind == HennebergStep::Kind::VertexAddition) {
      g.add_edge(s.v, s.i);
      g.add_edge(s.v, s.j);
    } else {
      require_placed(s.k);
      if (!g.remove_edge(s.i, s.j)) throw Error(ErrorKind::MissingEdge, "record splits an absent edge");
      g.add_edge(s.v, s.i);
      g.add_edge(s.v, s.j);
      g.add_edge(s.v, s.k);
    }
    placed[static_cast<std::size_t>(s.v)] = true;
  }
  return g;
}

bool record_matches(const HennebergRecord& record, const Graph& g) {
  try {
    return record.replay(g.vertex_count()) == g;
  } catch (const Error&) {
    return false;
  }
}

namespace {

using RoleKey = std::tuple<int, int, int, double, int>;

// Preference key for an anchor acting as the lower (more energetic) or upper
// (less energetic) end of the level sandwich around `target`.
RoleKey role_key(const AnchorCandidate& c, int target, bool lower_role, const Vec2& new_position) {
  const int l = level_number(c.level);
  const int violation = lower_role ? std::max(0, l - target) : std::max(0, target - l);
  const int same = l == target ? 1 : 0;
  const int ideal = lower_role ? target - 1 : target + 1;
  return {violation, same, std::abs(ideal - l), (c.position - new_position).norm(), c.vertex};
}

}  // namespace

std::vector<AnchorChoice> ranked_anchor_pairs(std::span<const AnchorCandidate> candidates, EnergyLevel new_level,
                                              const Vec2& new_position) {
  const int target = level_number(new_level);
  struct Ranked {
    int violation;
    RoleKey lower_key;
    RoleKey upper_key;
    AnchorChoice choice;
  };
  std::vector<Ranked> ranked;
  for (const AnchorCandidate& lo : candidates) {
    for (const AnchorCandidate& up : candidates) {
      if (lo.vertex == up.vertex) continue;
      RoleKey lk = role_key(lo, target, true, new_position);
      RoleKey uk = role_key(up, target, false, new_position);
      const int violation = std::get<0>(lk) + std::get<0>(uk);
      ranked.push_back({violation, lk, uk, AnchorChoice{lo.vertex, up.vertex, violation > 0}});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return std::tie(a.violation, a.lower_key, a.upper_key) < std::tie(b.violation, b.lower_key, b.upper_key);
  });
  std::vector<AnchorChoice> out;
  out.reserve(ranked.size());
  for (const Ranked& r : ranked) out.push_back(r.choice);
  return out;
}

AnchorChoice choose_anchors(std::span<const AnchorCandidate> candidates, EnergyLevel new_level,
                            const Vec2& new_position) {
  const auto pairs = ranked_anchor_pairs(candidates, new_level, new_position);
  if (pairs.empty() || pairs.front().relaxed)
    throw Error(ErrorKind::NoFeasibleAnchors,
                "no anchor pair sandwiches level " + std::to_string(level_number(new_level)));
  return pairs.front();
}

namespace {

struct PartialBuild {
  Graph graph;
  std::vector<int> placed;
  HennebergRecord record;
  int relaxed_steps = 0;
};

bool subframework_rigid(const Graph& g, const std::vector<int>& vertices, const Configuration& cfg) {
  std::vector<int> local(static_cast<std::size_t>(g.vertex_count()), -1);
  std::vector<Vec2> pts;
  for (int v : vertices) {
    local[static_cast<std::size_t>(v)] = static_cast<int>(pts.size());
    pts.push_back(cfg[v]);
  }
  Graph sub(static_cast<int>(pts.size()));
  for (const Edge& e : g.edges()) {
    const int a = local[static_cast<std::size_t>(e.a)];
    const int b = local[static_cast<std::size_t>(e.b)];
    if (a >= 0 && b >= 0) sub.add_edge(a, b);
  }
  return is_ibr(Framework(std::move(sub), Configuration(std::move(pts)))).rigid;
}

int strong_neighbor_count(const Graph& g, int x, std::span<const EnergyLevel> levels) {
  int count = 0;
  for (int u : g.neighbors(x))
    if (level_number(levels[static_cast<std::size_t>(u)]) <= 2) ++count;
  return count;
}

// Edge splitting with the Algorithm-1 level rules: the kept endpoint j has
// level <= new, the third vertex l has level >= new. A split is skipped if it
// would strip a level-3/4 endpoint of its last level-1/2 neighbour.
std::optional<HennebergStep> pick_edge_split(const PartialBuild& pb, int v, std::span<const EnergyLevel> levels,
                                             const Configuration& cfg) {
  const int target = level_number(levels[static_cast<std::size_t>(v)]);
  const Vec2& pv = cfg[v];
  auto cand = [&](int u) { return AnchorCandidate{u, levels[static_cast<std::size_t>(u)], cfg[u]}; };

  std::vector<int> lowers, uppers;
  for (int u : pb.placed) {
    const int l = level_number(levels[static_cast<std::size_t>(u)]);
    if (l <= target && pb.graph.degree(u) >= 2) lowers.push_back(u);
    if (l >= target) uppers.push_back(u);
  }
  std::sort(lowers.begin(), lowers.end(),
            [&](int a, int b) { return role_key(cand(a), target, true, pv) < role_key(cand(b), target, true, pv); });
  std::sort(uppers.begin(), uppers.end(),
            [&](int a, int b) { return role_key(cand(a), target, false, pv) < role_key(cand(b), target, false, pv); });

  for (int j : lowers) {
    std::vector<int> ks(pb.graph.neighbors(j).begin(), pb.graph.neighbors(j).end());
    std::sort(ks.begin(), ks.end(), [&](int a, int b) {
      return std::make_pair((cfg[a] - pv).norm(), a) < std::make_pair((cfg[b] - pv).norm(), b);
    });
    for (int k : ks) {
      for (int l : uppers) {
        if (l == j || l == k) continue;
        Graph trial = pb.graph;
        trial.remove_edge(j, k);
        trial.add_edge(v, j);
        trial.add_edge(v, k);
        trial.add_edge(v, l);
        bool protects = true;
        for (int x : {j, k}) {
          if (level_number(levels[static_cast<std::size_t>(x)]) >= 3 &&
              strong_neighbor_count(pb.graph, x, levels) > 0 && strong_neighbor_count(trial, x, levels) == 0)
            protects = false;
        }
        if (!protects) continue;
        std::vector<int> verts = pb.placed;
        verts.push_back(v);
        if (!subframework_rigid(trial, verts, cfg)) continue;
        HennebergStep s;
        s.kind = HennebergStep::Kind::EdgeSplitting;
        s.v = v;
        s.i = j;
        s.j = k;
        s.k = l;
        return s;
      }
    }
  }
  return std::nullopt;
}

PartialBuild construct(const Configuration& cfg, std::span<const EnergyLevel> levels, const std::vector<int>& order,
                       std::uint64_t seed, double split_probability) {
  const int n = cfg.size();
  PartialBuild pb{Graph(n), {}, {}, 0};
  pb.record.v1 = order[0];
  pb.record.v2 = order[1];
  pb.graph.add_edge(order[0], order[1]);
  pb.placed = {order[0], order[1]};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  for (std::size_t idx = 2; idx < order.size(); ++idx) {
    const int v = order[idx];
    const bool try_split = coin(rng) < split_probability;
    std::optional<HennebergStep> step;
    if (try_split) step = pick_edge_split(pb, v, levels, cfg);
    if (!step) {
      std::vector<AnchorCandidate> cands;
      for (int u : pb.placed) cands.push_back({u, levels[static_cast<std::size_t>(u)], cfg[u]});
      const auto pairs = ranked_anchor_pairs(cands, levels[static_cast<std::size_t>(v)], cfg[v]);
      std::vector<int> verts = pb.placed;
      verts.push_back(v);
      AnchorChoice chosen = pairs.front();
      for (const AnchorChoice& c : pairs) {
        Graph trial = pb.graph;
        trial.add_edge(v, c.lower);
        trial.add_edge(v, c.upper);
        if (subframework_rigid(trial, verts, cfg)) {
          chosen = c;
          break;
        }
      }
      HennebergStep s;
      s.kind = HennebergStep::Kind::VertexAddition;
      s.v = v;
      s.i = chosen.lower;
      s.j = chosen.upper;
      s.relaxed = chosen.relaxed;
      step = s;
    }
    if (step->kind == HennebergStep::Kind::VertexAddition) {
      pb.graph.add_edge(v, step->i);
      pb.graph.add_edge(v, step->j);
    } else {
      pb.graph.remove_edge(step->i, step->j);
      pb.graph.add_edge(v, step->i);
      pb.graph.add_edge(v, step->j);
      pb.graph.add_edge(v, step->k);
    }
    if (step->relaxed) ++pb.relaxed_steps;
    pb.record.steps.push_back(*step);
    pb.placed.push_back(v);
  }
  return pb;
}

Configuration jittered(const Configuration& cfg, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Vec2> pts(cfg.points().begin(), cfg.points().end());
  for (Vec2& p : pts) p += Vec2(noise(rng), noise(rng));
  return Configuration(std::move(pts));
}

}  // namespace

NetworkBuild build_network(const Configuration& positions, std::span<const double> socs, std::uint64_t seed,
                           const BuildOptions& options) {
  const int n = positions.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "network needs at least two robots");
  if (static_cast<int>(socs.size()) != n) throw Error(ErrorKind::InvalidArgument, "one SOC per robot required");

  std::vector<EnergyLevel> levels;
  levels.reserve(socs.size());
  for (double s : socs) levels.push_back(energy_level(s));

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return socs[static_cast<std::size_t>(a)] > socs[static_cast<std::size_t>(b)]; });

  NetworkBuild out;
  const auto level_one = std::count(levels.begin(), levels.end(), EnergyLevel::One);
  if (level_one < 2) {
    if (!options.allow_level_fallback)
      throw Error(ErrorKind::InsufficientLevelOne, std::to_string(level_one) + " level-1 robots");
    out.warnings.push_back("InsufficientLevelOne: using the two highest-SOC robots as the initial pair");
  }

  double extent = 0.0;
  for (const Vec2& p : positions.points()) extent = std::max(extent, (p - positions[0]).norm());
  std::mt19937_64 jitter_rng(seed ^ 0x9e3779b97f4a7c15ULL);

  Configuration cfg = positions;
  for (int attempt = 0; attempt <= options.jitter_retries; ++attempt) {
    if (attempt > 0) cfg = jittered(positions, jitter_rng, options.jitter_scale * attempt * std::max(1.0, extent));
    PartialBuild pb = construct(cfg, levels, order, seed, options.edge_split_probability);
    Framework fw(std::move(pb.graph), cfg);
    if (!is_ibr(fw).rigid) continue;
    if (pb.relaxed_steps > 0)
      out.warnings.push_back("NoFeasibleAnchors: relaxed level bounds on " + std::to_string(pb.relaxed_steps) +
                             " step(s)");
    if (attempt > 0) out.warnings.push_back("positions jittered " + std::to_string(attempt) + " time(s)");
    out.framework = std::move(fw);
    out.record = std::move(pb.record);
    out.jitter_attempts = attempt;
    return out;
  }
  throw Error(ErrorKind::RigidityFailure, "framework not IBR after " + std::to_string(options.jitter_retries) +
                                              " jitter retries");
}

NetworkUpdate insert_robot(const Framework& fw, const HennebergRecord& record, std::span<const double> socs,
                           const Vec2& position, double soc) {
  const int n = fw.vertex_count();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "cannot insert into an empty framework");
  if (static_cast<int>(socs.size()) != n) throw Error(ErrorKind::InvalidArgument, "one SOC per vertex required");
  const EnergyLevel level = energy_level(soc);
  Configuration cfg = fw.config.with_point(position);

  if (n == 1) {
    Graph g(2, {{0, 1}});
    return NetworkUpdate{Framework(std::move(g), std::move(cfg)), HennebergRecord{0, 1, {}}, false};
  }

  std::vector<AnchorCandidate> cands;
  for (int u = 0; u < n; ++u) cands.push_back({u, energy_level(socs[static_cast<std::size_t>(u)]), fw.config[u]});
  for (const AnchorChoice& c : ranked_anchor_pairs(cands, level, position)) {
    Framework trial(vertex_addition(fw.graph, c.lower, c.upper), cfg);
    if (!is_ibr(trial).rigid) continue;
    HennebergRecord rec = record;
    HennebergStep s;
    s.kind = HennebergStep::Kind::VertexAddition;
    s.v = n;
    s.i = c.lower;
    s.j = c.upper;
    s.relaxed = c.relaxed;
    rec.steps.push_back(s);
    return NetworkUpdate{std::move(trial), std::move(rec), c.relaxed};
  }
  throw Error(ErrorKind::RigidityFailure, "no anchor pair yields an IBR framework for the joining robot");
}

}  // namespace rcov
