#include <doctest.h>

#include "fixtures.hpp"
#include "waygraph/envgen.hpp"
#include "waygraph/error.hpp"
#include "waygraph/navgraph.hpp"

using namespace waygraph;

namespace {

NavGraph triangle() {
  NavGraph g;
  const auto a = g.add_node({0, 0}), b = g.add_node({1, 0}), c = g.add_node({0.5, std::sqrt(3.0) / 2});
  g.add_edge(a, b);
  g.add_edge(b, c);
  g.add_edge(c, a);
  return g;
}

/// 3 x 3 lattice with 2 m spacing, 4-neighbour edges, lower-left corner at (x0, y0).
NavGraph lattice(double x0, double y0) {
  NavGraph g;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) g.add_node({x0 + 2.0 * i, y0 + 2.0 * j});
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      if (i < 2) g.add_edge(j * 3 + i, j * 3 + i + 1);
      if (j < 2) g.add_edge(j * 3 + i, (j + 1) * 3 + i);
    }
  return g;
}

}  // namespace

TEST_SUITE("navgraph") {
  TEST_CASE("node and edge bookkeeping") {
    NavGraph g;
    const auto a = g.add_node({0, 0}), b = g.add_node({1, 0}), c = g.add_node({5, 5});
    g.add_edge(b, a);
    CHECK(g.has_edge(a, b));
    CHECK(g.edges.begin()->first == a);
    CHECK(g.neighbors(a) == std::vector<NodeId>{b});
    CHECK_FALSE(g.connected());
    const auto comp = g.components();
    CHECK(comp.at(a) == comp.at(b));
    CHECK(comp.at(c) != comp.at(a));
    g.remove_node(b);
    CHECK(g.edges.empty());
    CHECK(g.add_node({2, 2}) == 3);  // ids never reused
    CHECK_THROWS_AS(g.at(b), Error);
  }

  TEST_CASE("graph_stats examples") {
    const auto s = graph_stats(triangle());
    CHECK(s.mean_degree == doctest::Approx(2.0));
    CHECK(s.mean_edge_length == doctest::Approx(1.0));
    CHECK(s.degree_histogram == std::vector<int>{0, 0, 3});
    NavGraph one;
    one.add_node({1, 1});
    const auto t = graph_stats(one);
    CHECK(t.mean_degree == 0.0);
    CHECK(t.mean_edge_length == 0.0);
    CHECK(t.edge_count == 0);
  }

  TEST_CASE("seed_graph is deterministic and respects the spacing") {
    const auto env = generate_environment(4, Profile::Rooms);
    const auto a = seed_graph(env, 9, 1.5), b = seed_graph(env, 9, 1.5);
    CHECK(a == b);
    CHECK(a != seed_graph(env, 10, 1.5));
    for (auto i = a.nodes.begin(); i != a.nodes.end(); ++i)
      for (auto j = std::next(i); j != a.nodes.end(); ++j) CHECK(distance(i->second, j->second) >= 1.5);
    for (const auto& e : a.edges) CHECK(a.edge_length(e) <= 3.0 + 1e-9);
    CHECK(a.connected());
  }

  TEST_CASE("refined graph of an empty environment is navigable") {
    const auto env = fixtures::empty_env();
    const auto r = refine(env, seed_graph(env, 2, 1.5), {}, {});
    CHECK(check_navigable(env, r.graph, 0.5).ok());
  }

  TEST_CASE("seeded graphs in clutter almost always need repair") {
    int invalid = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto env = generate_environment(1000 + s, Profile::Clutter);
      invalid += !check_navigable(env, seed_graph(env, s, 1.5), 0.5).ok();
    }
    CHECK(invalid >= 95);
  }

  TEST_CASE("score of a valid node in place") {
    const auto env = fixtures::empty_env();
    auto g = lattice(2, 2);
    const RefineConfig cfg;
    const Point2 p = g.at(4);
    const double clear = std::min(1.0, env.clearance(p) / cfg.clearance_scale);
    CHECK(score_candidate(env, g, 4, p, cfg) == doctest::Approx(clear + 1.0 + 1.0));
    CHECK_THROWS_AS(score_candidate(env, g, 4, {-1, -1}, cfg), Error);
  }

  TEST_CASE("score is monotone in clearance") {
    const auto env = fixtures::env_with({make_rect(0, 0, 10, 2)});
    NavGraph g;
    g.add_node({5, 3});
    const RefineConfig cfg;
    CHECK(score_candidate(env, g, 0, {5, 2.35}, cfg) > score_candidate(env, g, 0, {5, 2.10}, cfg));
  }

  TEST_CASE("adjust_node picks the best ring candidate at a doorway") {
    // Wall with a 0.8 m doorway; the node sits inside the wall next to it.
    const auto env = fixtures::env_with({make_rect(0, 4.8, 4.6, 5.2), make_rect(5.4, 4.8, 10, 5.2)});
    NavGraph g;
    const auto n = g.add_node({5.35, 5.0});
    const auto a = g.add_node({5.0, 3.0});
    const auto b = g.add_node({5.0, 7.0});
    g.add_edge(n, a);
    g.add_edge(n, b);
    const RefineConfig cfg;
    REQUIRE_FALSE(env.is_free(g.at(n)));
    const auto cands = ring_candidates(g.at(n), cfg);
    CHECK(cands.size() == 264);
    std::optional<Point2> best;
    double best_s = -kInf;
    for (const auto& c : cands) {
      if (!env.is_free(c)) continue;
      const double s = score_candidate(env, g, n, c, cfg);
      if (s > best_s + 1e-12) {
        best_s = s;
        best = c;
      }
    }
    REQUIRE(best);
    const auto out = adjust_node(env, g, n, cfg);
    CHECK(out.at(n) == *best);
    CHECK(env.is_free(out.at(n)));
  }

  TEST_CASE("adjust_node moves a node out of a wall") {
    const auto env = fixtures::env_with({make_rect(0, 0, 10, 5)});
    NavGraph g;
    const auto n = g.add_node({5, 4.95});
    const auto m = g.add_node({5, 7});
    g.add_edge(n, m);
    const auto out = adjust_node(env, g, n, {});
    CHECK(env.is_free(out.at(n)));
    CHECK(out.has_edge(n, m));
  }

  TEST_CASE("adjust_node deletes a node deep inside an obstacle") {
    const auto env = fixtures::env_with({make_rect(3, 3, 7, 7)});
    NavGraph g;
    const auto n = g.add_node({5, 5});
    const auto a = g.add_node({1.5, 5});
    const auto b = g.add_node({8.5, 5});
    g.add_edge(n, a);
    g.add_edge(n, b);
    const auto out = adjust_node(env, g, n, {});
    CHECK_FALSE(out.nodes.contains(n));
    CHECK(check_navigable(env, out, 0.5).blocked_edges.empty());
    CHECK(out.connected());
  }

  TEST_CASE("add_detour around an obstacle corner") {
    const auto env = fixtures::env_with({make_rect(4, 0, 6, 5)});
    NavGraph g;
    const auto a = g.add_node({3.5, 4.0});
    const auto b = g.add_node({5.0, 5.8});
    g.add_edge(a, b);
    REQUIRE_FALSE(env.segment_free(g.at(a), g.at(b)));
    const auto out = add_detour(env, g, a, b, {});
    const auto added = out.nodes.size() - g.nodes.size();
    CHECK(added >= 1);
    CHECK(added <= 2);
    CHECK(out.connected());
    CHECK(check_navigable(env, out, 0.0).blocked_edges.empty());
  }

  TEST_CASE("add_detour between sealed rooms drops the edge") {
    const auto env = fixtures::env_with({make_rect(4.8, 0, 5.2, 10)});
    NavGraph g;
    const auto a = g.add_node({3, 5}), b = g.add_node({7, 5});
    g.add_edge(a, b);
    const auto out = add_detour(env, g, a, b, {});
    CHECK(out.edges.empty());
    CHECK(out.nodes.size() == 2);
  }

  TEST_CASE("add_detour through an L-shaped corridor stays near the raster optimum") {
    // Free space: a horizontal corridor y in [1, 2.5] and a vertical one x in [7.5, 9].
    const auto env = fixtures::env_with({make_rect(0, 2.5, 7.5, 10), make_rect(0, 0, 10, 1), make_rect(9, 1, 10, 10)});
    NavGraph g;
    const auto a = g.add_node({1.0, 1.75}), b = g.add_node({8.25, 9.0});
    g.add_edge(a, b);
    const auto out = add_detour(env, g, a, b, {});
    // Walk the chain.
    double len = 0.0;
    NodeId prev = -1, cur = a;
    while (cur != b) {
      NodeId next = -1;
      for (auto nb : out.neighbors(cur))
        if (nb != prev) next = nb;
      REQUIRE(next >= 0);
      CHECK(env.segment_free(out.at(cur), out.at(next)));
      len += distance(out.at(cur), out.at(next));
      prev = cur;
      cur = next;
    }
    const double opt = geodesic_distance(env, g.at(a), g.at(b));
    CHECK(len <= 1.10 * opt);
  }

  TEST_CASE("merge_nodes examples") {
    const auto env = fixtures::empty_env();
    NavGraph g;
    const auto a = g.add_node({5, 5}), b = g.add_node({5.3, 5});
    const auto c = g.add_node({3, 5}), d = g.add_node({7, 5});
    g.add_edge(a, c);
    g.add_edge(b, d);
    const auto m = merge_nodes(env, g, {});
    CHECK(m.nodes.size() == 3);
    const NodeId kept = m.nodes.contains(a) ? a : b;
    CHECK(m.at(kept).x == doctest::Approx(5.15));
    CHECK(m.at(kept).y == doctest::Approx(5.0));
    CHECK(m.has_edge(kept, c));
    CHECK(m.has_edge(kept, d));

    const auto spread = lattice(2, 2);
    CHECK(merge_nodes(env, spread, {}) == spread);
  }

  TEST_CASE("merging a chain matches a greedy closest-pair simulation") {
    const auto env = fixtures::empty_env();
    NavGraph g;
    for (int i = 0; i < 4; ++i) g.add_node({4.0 + 0.3 * i, 5.0});
    for (int i = 0; i < 3; ++i) g.add_edge(i, i + 1);
    // Independent simulation on bare positions.
    std::vector<Point2> pts;
    for (const auto& [id, p] : g.nodes) pts.push_back(p);
    for (;;) {
      double best = 0.5;
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
          if (distance(pts[i], pts[j]) < best) {
            best = distance(pts[i], pts[j]);
            bi = i;
            bj = j;
          }
      if (best >= 0.5) break;
      pts[bi] = lerp(pts[bi], pts[bj], 0.5);
      pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    const auto m = merge_nodes(env, g, {});
    CHECK(m.nodes.size() == pts.size());
    for (auto i = m.nodes.begin(); i != m.nodes.end(); ++i)
      for (auto j = std::next(i); j != m.nodes.end(); ++j) CHECK(distance(i->second, j->second) >= 0.5);
  }

  TEST_CASE("fit_endpoints examples") {
    const auto env = fixtures::empty_env();
    NavGraph g;
    g.add_node({5, 5});
    const std::vector<Point2> close{{5.3, 5}};
    CHECK(fit_endpoints(env, g, close, {}) == g);
    const std::vector<Point2> far{{7, 5}};
    const auto f = fit_endpoints(env, g, far, {});
    CHECK(f.nodes.size() == 2);
    CHECK(f.edges.size() == 1);
    CHECK(f.at(1) == far[0]);
    CHECK(f.has_edge(0, 1));
  }

  TEST_CASE("fit_endpoints measures geodesically") {
    // Partition x in [4.9, 5.1] up to y = 7; the point is 0.6 m away through it.
    const auto env = fixtures::env_with({make_rect(4.9, 0, 5.1, 7)});
    NavGraph g;
    g.add_node({4.65, 5});
    const std::vector<Point2> pts{{5.25, 5}};
    REQUIRE(distance(g.at(0), pts[0]) < RefineConfig{}.fit_dist);
    REQUIRE(geodesic_distance(env, g.at(0), pts[0]) > 4.0);
    const auto f = fit_endpoints(env, g, pts, {});
    CHECK(f.nodes.size() >= 2);
    CHECK(f.connected());
    CHECK(check_navigable(env, f, 0.0).blocked_edges.empty());
  }

  TEST_CASE("refine leaves a valid graph alone") {
    const auto env = fixtures::empty_env();
    const auto g = lattice(2, 2);
    const auto r = refine(env, g, {}, {});
    CHECK(r.iterations == 1);
    CHECK(r.graph == g);
  }

  TEST_CASE("refine moves only the node pushed into a wall") {
    const auto env = fixtures::env_with({make_rect(4.05, 4.05, 4.6, 4.6)});
    const auto g = lattice(2, 2);  // center node (4, 4) sits inside the inflated box
    REQUIRE_FALSE(env.is_free(g.at(4)));
    const auto r = refine(env, g, {}, {});
    CHECK(check_navigable(env, r.graph, 0.5).ok());
    CHECK(r.graph.nodes.size() == g.nodes.size());
    CHECK(r.graph.edges == g.edges);
    for (const auto& [id, p] : g.nodes) {
      if (id == 4) CHECK(r.graph.at(id) != p);
      else CHECK(r.graph.at(id) == p);
    }
  }

  TEST_CASE("refine is idempotent and keeps geodesic reachability") {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto env = generate_environment(50 + s, static_cast<Profile>(s % 3));
      const auto once = refine(env, seed_graph(env, s, 1.5), {}, {}).graph;
      REQUIRE(check_navigable(env, once, 0.5).ok());
      const auto twice = refine(env, once, {}, {}).graph;
      CHECK(twice == once);
      // Any two surviving nodes: graph path exists iff geodesic is finite.
      const auto first = once.nodes.begin()->second;
      const GeodesicField field(env, first);
      const auto comp = once.components();
      for (const auto& [id, p] : once.nodes)
        CHECK((comp.at(id) == comp.begin()->second) == std::isfinite(field.distance_to(p)));
    }
  }

  TEST_CASE("refine with endpoints keeps them as nodes") {
    const auto env = generate_environment(7, Profile::Corridors);
    const auto base = refine(env, seed_graph(env, 1, 1.5), {}, {}).graph;
    // A free point far from every node.
    Point2 far{};
    double far_d = -1;
    for (int c = 0; c < env.raster().size(); c += 97) {
      if (!env.raster().free(c)) continue;
      const Point2 p = env.raster().center(c);
      double d = kInf;
      for (const auto& [id, q] : base.nodes) d = std::min(d, distance(p, q));
      if (d > far_d) {
        far_d = d;
        far = p;
      }
    }
    REQUIRE(far_d > 0.8);
    const std::vector<Point2> eps{far};
    const auto r = refine(env, base, eps, {}).graph;
    CHECK(check_navigable(env, r, 0.5).ok());
    bool found = false;
    for (const auto& [id, p] : r.nodes) found = found || p == far;
    CHECK(found);
  }

  TEST_CASE("violations are described") {
    const auto env = fixtures::env_with({make_rect(4, 4, 6, 6)});
    NavGraph g;
    const auto a = g.add_node({5, 5}), b = g.add_node({1, 5}), c = g.add_node({1.2, 5});
    g.add_edge(a, b);
    g.add_edge(b, c);
    g.add_node({9, 9});
    const auto v = check_navigable(env, g, 0.5);
    CHECK_FALSE(v.ok());
    CHECK(v.blocked_nodes == std::vector<NodeId>{a});
    CHECK(v.short_edges.size() == 1);
    CHECK_FALSE(v.connected);
    CHECK_FALSE(v.describe().empty());
  }
}
