#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "rcov/network.hpp"
#include "rcov/reconfig.hpp"
#include "test_support.hpp"

using namespace rcov;
using testing::error_kind;

namespace {

int lvl(double soc) { return level_number(energy_level(soc)); }

// Checks post-conditions (a)-(f) of the construction from the outside.
void check_build(const NetworkBuild& b, const std::vector<Vec2>& pts, const std::vector<double>& socs) {
  const int n = static_cast<int>(pts.size());
  const Graph& g = b.framework.graph;
  CHECK(g.edge_count() == 2 * n - 3);
  CHECK(is_ibr(b.framework).rigid);
  CHECK(oracle::fd_bearing_rank(g, std::vector<Vec2>(b.framework.config.points().begin(),
                                                       b.framework.config.points().end())) == 2 * n - 3);

  // Initial pair is the two highest-SOC robots, which are level 1 when two exist.
  std::vector<double> sorted = socs;
  std::sort(sorted.rbegin(), sorted.rend());
  CHECK(socs[static_cast<std::size_t>(b.record.v1)] == sorted[0]);
  CHECK(socs[static_cast<std::size_t>(b.record.v2)] == sorted[1]);
  const auto level_one = std::count_if(socs.begin(), socs.end(), [](double s) { return s >= 0.75; });
  if (level_one >= 2) {
    CHECK(lvl(socs[static_cast<std::size_t>(b.record.v1)]) == 1);
    CHECK(lvl(socs[static_cast<std::size_t>(b.record.v2)]) == 1);
  }

  for (const HennebergStep& s : b.record.steps) {
    if (s.relaxed) continue;
    const int lv = lvl(socs[static_cast<std::size_t>(s.v)]);
    if (s.kind == HennebergStep::Kind::VertexAddition) {
      const int a = lvl(socs[static_cast<std::size_t>(s.i)]);
      const int c = lvl(socs[static_cast<std::size_t>(s.j)]);
      CHECK(std::min(a, c) <= lv);
      CHECK(lv <= std::max(a, c));
    } else {
      CHECK(lvl(socs[static_cast<std::size_t>(s.i)]) <= lv);
      CHECK(lv <= lvl(socs[static_cast<std::size_t>(s.k)]));
    }
  }
  CHECK(record_matches(b.record, g));
  CHECK(b.record.replay(n) == g);
}

// Largest clique of mutually adjacent same-level robots (brute force).
int largest_same_level_clique(const Graph& g, const std::vector<double>& socs) {
  const int n = g.vertex_count();
  int best = 1;
  for (int a = 0; a < n; ++a)
    for (int b : g.neighbors(a))
      for (int c : g.neighbors(b))
        for (int d : g.neighbors(c)) {
          if (!(a < b && b < c && c < d)) continue;
          if (!g.has_edge(a, c) || !g.has_edge(a, d) || !g.has_edge(b, d)) continue;
          const int l = lvl(socs[static_cast<std::size_t>(a)]);
          if (lvl(socs[static_cast<std::size_t>(b)]) == l && lvl(socs[static_cast<std::size_t>(c)]) == l &&
              lvl(socs[static_cast<std::size_t>(d)]) == l)
            best = 4;
        }
  return best;
}

}  // namespace

TEST_CASE("energy_level brackets") {
  CHECK(energy_level(1.0) == EnergyLevel::One);
  CHECK(energy_level(0.75) == EnergyLevel::One);
  CHECK(energy_level(0.7499) == EnergyLevel::Two);
  CHECK(energy_level(0.5) == EnergyLevel::Two);
  CHECK(energy_level(0.30) == EnergyLevel::Three);
  CHECK(energy_level(0.25) == EnergyLevel::Three);
  CHECK(energy_level(0.2499) == EnergyLevel::Four);
  CHECK(energy_level(0.0) == EnergyLevel::Four);
  CHECK(error_kind([] { energy_level(1.01); }) == ErrorKind::OutOfRange);
  CHECK(error_kind([] { energy_level(-0.01); }) == ErrorKind::OutOfRange);

  int previous = 1;
  for (int k = 1000; k >= 0; --k) {
    const int l = lvl(k / 1000.0);
    CHECK(l >= previous);
    previous = l;
  }
}

TEST_CASE("choose_anchors examples") {
  const std::vector<AnchorCandidate> all_one{
      {0, EnergyLevel::One, {0, 0}}, {1, EnergyLevel::One, {1, 0}}, {2, EnergyLevel::One, {0, 1}}};
  CHECK(error_kind([&] { choose_anchors(all_one, EnergyLevel::Three, {0.5, 0.5}); }) ==
        ErrorKind::NoFeasibleAnchors);
  const auto relaxed = ranked_anchor_pairs(all_one, EnergyLevel::Three, {0.5, 0.5});
  REQUIRE_FALSE(relaxed.empty());
  CHECK(relaxed.front().relaxed);

  const std::vector<AnchorCandidate> mixed{{0, EnergyLevel::One, {0, 0}}, {1, EnergyLevel::Four, {1, 0}}};
  const AnchorChoice c = choose_anchors(mixed, EnergyLevel::Two, {0.5, 0.5});
  CHECK(c.lower == 0);
  CHECK(c.upper == 1);
  CHECK_FALSE(c.relaxed);

  // Four level-2 robots equidistant from the new one: lowest indices win.
  const std::vector<AnchorCandidate> ring{{3, EnergyLevel::Two, {1, 0}},
                                          {1, EnergyLevel::Two, {0, 1}},
                                          {2, EnergyLevel::Two, {-1, 0}},
                                          {0, EnergyLevel::Two, {0, -1}}};
  const AnchorChoice t = choose_anchors(ring, EnergyLevel::Two, {0, 0});
  CHECK(t.lower == 0);
  CHECK(t.upper == 1);

  // Nearer candidates beat farther ones of the same level.
  const std::vector<AnchorCandidate> near_far{{0, EnergyLevel::One, {5, 5}},
                                              {1, EnergyLevel::One, {0.1, 0}},
                                              {2, EnergyLevel::Three, {4, 4}},
                                              {3, EnergyLevel::Three, {0, 0.2}}};
  const AnchorChoice nf = choose_anchors(near_far, EnergyLevel::Two, {0, 0});
  CHECK(nf.lower == 1);
  CHECK(nf.upper == 3);
}

TEST_CASE("build_network base case and five-robot example") {
  const std::vector<Vec2> two{{0, 0}, {1, 0}};
  const std::vector<double> full{0.9, 0.95};
  const NetworkBuild b2 = build_network(Configuration(two), full, 1);
  CHECK(b2.framework.graph == Graph(2, {{0, 1}}));
  CHECK(b2.record.steps.empty());
  CHECK(b2.warnings.empty());

  const std::vector<Vec2> five{{0.1, 0.2}, {0.8, 0.1}, {0.5, 0.9}, {0.2, 0.7}, {0.9, 0.6}};
  const std::vector<double> socs{0.9, 0.8, 0.6, 0.4, 0.1};
  for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 42ULL}) {
    const NetworkBuild b = build_network(Configuration(five), socs, seed);
    CHECK(b.framework.graph.edge_count() == 7);
    CHECK(b.record.steps.size() == 3);
    check_build(b, five, socs);
  }
}

TEST_CASE("build_network warns when fewer than two level-1 robots exist") {
  const std::vector<Vec2> pts{{0.1, 0.2}, {0.8, 0.1}, {0.5, 0.9}, {0.3, 0.6}};
  const std::vector<double> socs{0.6, 0.3, 0.8, 0.55};
  const NetworkBuild b = build_network(Configuration(pts), socs, 3);
  REQUIRE_FALSE(b.warnings.empty());
  CHECK(b.warnings.front().find("InsufficientLevelOne") != std::string::npos);
  CHECK(b.record.v1 == 2);
  CHECK(b.record.v2 == 0);
  check_build(b, pts, socs);

  BuildOptions strict;
  strict.allow_level_fallback = false;
  CHECK(error_kind([&] { build_network(Configuration(pts), socs, 3, strict); }) == ErrorKind::InsufficientLevelOne);
}

TEST_CASE("build_network jitters degenerate positions and reports failure honestly") {
  // Collinear positions: never IBR for n >= 3 without jitter.
  const std::vector<Vec2> line{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const std::vector<double> socs{0.9, 0.8, 0.6, 0.3};
  const NetworkBuild b = build_network(Configuration(line), socs, 5);
  CHECK(b.jitter_attempts >= 1);
  CHECK(is_ibr(b.framework).rigid);
  for (int i = 0; i < 4; ++i) CHECK((b.framework.config[i] - line[static_cast<std::size_t>(i)]).norm() < 1e-4);

  BuildOptions no_jitter;
  no_jitter.jitter_retries = 0;
  CHECK(error_kind([&] { build_network(Configuration(line), socs, 5, no_jitter); }) == ErrorKind::RigidityFailure);
}

TEST_CASE("property: constructions over random fleets satisfy every post-condition") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> soc(0.0, 1.0);
  int splits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto pts = oracle::random_points(rng, 12);
    std::vector<double> socs;
    for (int i = 0; i < 12; ++i) socs.push_back(soc(rng));
    const NetworkBuild b = build_network(Configuration(pts), socs, seed);
    check_build(b, pts, socs);
    CHECK(largest_same_level_clique(b.framework.graph, socs) <= 3);
    for (const auto& s : b.record.steps)
      if (s.kind == HennebergStep::Kind::EdgeSplitting) ++splits;

    // Replay determinism.
    const NetworkBuild again = build_network(Configuration(pts), socs, seed);
    CHECK(again.framework.graph == b.framework.graph);
    CHECK(again.record == b.record);
  }
  CHECK(splits > 0);
}

TEST_CASE("insert_robot examples") {
  const Framework k2(Graph(2, {{0, 1}}), Configuration({{0, 0}, {1, 0}}));
  const HennebergRecord rk2{0, 1, {}};
  const std::vector<double> s2{0.9, 0.8};
  const NetworkUpdate tri = insert_robot(k2, rk2, s2, {0.5, 0.8}, 0.6);
  CHECK(tri.framework.graph == Graph(3, {{0, 1}, {0, 2}, {1, 2}}));
  REQUIRE(tri.record.steps.size() == 1);
  CHECK(tri.record.steps[0].kind == HennebergStep::Kind::VertexAddition);
  CHECK(tri.record.steps[0].v == 2);
  CHECK(record_matches(tri.record, tri.framework.graph));

  const std::vector<Vec2> five{{0.1, 0.2}, {0.8, 0.1}, {0.5, 0.9}, {0.2, 0.7}, {0.9, 0.6}};
  const std::vector<double> socs{0.9, 0.8, 0.6, 0.4, 0.1};
  const NetworkBuild b = build_network(Configuration(five), socs, 0);
  const NetworkUpdate up = insert_robot(b.framework, b.record, socs, {0.45, 0.45}, 1.0);
  const HennebergStep& s = up.record.steps.back();
  CHECK(s.v == 5);
  CHECK((lvl(socs[static_cast<std::size_t>(s.i)]) == 1 || lvl(socs[static_cast<std::size_t>(s.j)]) == 1));
  CHECK(up.framework.graph.edge_count() == 9);
  CHECK(is_ibr(up.framework).rigid);
  CHECK(record_matches(up.record, up.framework.graph));

  const Framework empty(Graph(0), Configuration(std::vector<Vec2>{}));
  CHECK(error_kind([&] { insert_robot(empty, HennebergRecord{}, {}, {0, 0}, 0.5); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("property: insert then remove restores a minimally rigid framework on the original vertices") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> soc(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int n = 4 + static_cast<int>(seed % 6);
    const auto pts = oracle::random_points(rng, n);
    std::vector<double> socs;
    for (int i = 0; i < n; ++i) socs.push_back(soc(rng));
    socs[0] = 0.95;
    socs[1] = 0.85;
    const NetworkBuild b = build_network(Configuration(pts), socs, seed);
    const double joining_soc = 0.1 + 0.3 * soc(rng);
    const NetworkUpdate up = insert_robot(b.framework, b.record, socs, Vec2(soc(rng), soc(rng)), joining_soc);

    std::vector<EnergyLevel> levels;
    for (double s : socs) levels.push_back(energy_level(s));
    levels.push_back(energy_level(joining_soc));
    DepartureBatch batch{{{n, energy_level(joining_soc)}}};
    const ReconfigResult r = reconfigure(up.framework, up.record, batch, levels);
    CHECK(r.framework.vertex_count() == n);
    CHECK(r.framework.graph.edge_count() == 2 * n - 3);
    CHECK(is_ibr(r.framework).rigid);
    CHECK(r.framework.graph == b.framework.graph);
  }
}
