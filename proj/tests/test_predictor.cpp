#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "waygraph/envgen.hpp"
#include "waygraph/error.hpp"
#include "waygraph/navgraph.hpp"
#include "waygraph/predictor.hpp"

using namespace waygraph;

namespace {

struct World {
  Environment env;
  NavGraph graph;
};

World refined(std::uint64_t seed, Profile prof) {
  auto env = generate_environment(seed, prof);
  auto g = refine(env, seed_graph(env, seed, 1.5), {}, {}).graph;
  g.env_id = "w" + std::to_string(seed);
  return {std::move(env), std::move(g)};
}

/// At most k_max waypoints whose bins are pairwise outside the suppression window.
bool separated(const WaypointSet& w) {
  const NmsConfig cfg;
  if (static_cast<int>(w.size()) > cfg.k_max) return false;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j)
      if (in_suppression_window(bin_of(w[i].angle, w[i].distance), bin_of(w[j].angle, w[j].distance), cfg))
        return false;
  return true;
}

RangeScan open_scan() {
  RangeScan s;
  s.fill(kScanRange);
  return s;
}

}  // namespace

TEST_SUITE("predictor") {
  TEST_CASE("oracle_predict examples") {
    NavGraph g;
    const auto lone = g.add_node({5, 5});
    CHECK(oracle_predict(g, lone) == PolarGrid{});

    NavGraph h;
    const auto c = h.add_node({5, 5});
    h.add_edge(c, h.add_node({6, 5}));
    const auto grid = oracle_predict(h, c);
    const auto peaks = nms_peaks(grid);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].bin == bin_of(0.0, 1.0));

    NavGraph four;
    const auto m = four.add_node({5, 5});
    const std::vector<Point2> nbs{{6.2, 5.3}, {4.4, 6.9}, {3.1, 4.6}, {5.5, 3.0}};
    for (const auto& p : nbs) four.add_edge(m, four.add_node(p));
    const auto w = nms(oracle_predict(four, m));
    REQUIRE(w.size() == 4);
    for (const auto& p : nbs) {
      const Bin want = bin_of(bearing({5, 5}, p), std::min(distance({5, 5}, p), 3.0));
      bool hit = false;
      for (const auto& x : w) {
        const Bin b = bin_of(x.angle, x.distance);
        hit = hit || (angle_bin_gap(b.a, want.a) <= 1 && std::abs(b.d - want.d) <= 1);
      }
      CHECK(hit);
    }
  }

  TEST_CASE("oracle_predict rotates with the pose heading") {
    NavGraph g;
    const auto c = g.add_node({5, 5});
    g.add_edge(c, g.add_node({5, 6.5}));  // due north
    const auto w = nms(oracle_predict(g, c, Pose{{5, 5}, kPi / 2}));
    REQUIRE(w.size() == 1);
    CHECK(bin_of(w[0].angle, w[0].distance) == bin_of(0.0, 1.5));
  }

  TEST_CASE("geometric_predict in open space") {
    const auto g = geometric_predict(open_scan(), 0.1);
    for (int a = 0; a < kAngleBins; ++a) CHECK(g.at(a, 11) == doctest::Approx(1.0));
    const auto w = nms(g);
    CHECK(w.size() <= 5);
    CHECK_FALSE(w.empty());
    for (const auto& x : w) CHECK(x.distance == doctest::Approx(3.0));
  }

  TEST_CASE("geometric_predict scores nothing behind a close wall") {
    auto s = open_scan();
    for (int a = 0; a <= 10; ++a) s[static_cast<std::size_t>(a)] = 0.2;
    const auto g = geometric_predict(s, 0.1);
    for (int a = 0; a <= 10; ++a)
      for (int d = 0; d < kDistBins; ++d) CHECK(g.at(a, d) == 0.0);
    CHECK(g.valid());
  }

  TEST_CASE("geometric waypoints are reachable in a straight line") {
    const auto env = generate_environment(21, Profile::Corridors);
    Rng rng(4);
    int poses = 0, points = 0;
    while (poses < 100) {
      const Point2 p{uniform(rng, env.bounds().x0, env.bounds().x1), uniform(rng, env.bounds().y0, env.bounds().y1)};
      if (!env.is_free(p)) continue;
      ++poses;
      const Pose pose{p, uniform(rng, 0, kTwoPi)};
      for (const auto& w : nms(geometric_predict(take_scan(env, pose), env.agent_radius()))) {
        ++points;
        CHECK(env.segment_free(p, polar_to_world(pose, w.angle, w.distance)));
      }
    }
    CHECK(points > 100);
  }

  TEST_CASE("scans are heading relative") {
    const auto env = generate_environment(5, Profile::Rooms);
    Point2 p{};
    for (int c = 0; c < env.raster().size(); ++c)
      if (env.raster().free(c)) {
        p = env.raster().center(c);
        break;
      }
    const auto s0 = take_scan(env, Pose{p, 0.0});
    const auto s1 = take_scan(env, Pose{p, deg2rad(30.0)});
    for (int a = 0; a < kAngleBins; ++a)
      CHECK(s1[static_cast<std::size_t>(a)] ==
            doctest::Approx(s0[static_cast<std::size_t>((a + 10) % kAngleBins)]).epsilon(1e-9));
    for (double r : s0) {
      CHECK(r > 0.0);
      CHECK(r <= kScanRange);
    }
  }

  TEST_CASE("training set: one sample per node with free target waypoints") {
    const auto w = refined(31, Profile::Rooms);
    const auto set = build_training_set(w.env, w.graph);
    CHECK(set.size() == w.graph.nodes.size());
    int peaks = 0;
    for (const auto& s : set) {
      CHECK(s.env_id == w.graph.env_id);
      REQUIRE(s.waypoints.size() == w.graph.neighbors(s.node).size());
      std::vector<Point2> truth;
      for (const auto& x : s.waypoints) {
        truth.push_back(polar_to_world(s.pose, x.angle, x.distance));
        CHECK(w.env.is_free(truth.back()));
      }
      // Every decoded peak sits within bin quantization of a true waypoint.
      if (!separated(s.waypoints)) continue;
      for (const auto& x : nms(s.target)) {
        ++peaks;
        const Point2 p = polar_to_world(s.pose, x.angle, x.distance);
        double best = 1e9;
        for (const auto& t : truth) best = std::min(best, distance(p, t));
        CHECK(best <= std::hypot(0.125, x.distance * std::sin(1.5 * kPi / 180.0)) + 1e-9);
      }
    }
    CHECK(peaks > 0);
  }

  TEST_CASE("sector features") {
    RangeScan s;
    for (int i = 0; i < kAngleBins; ++i) s[static_cast<std::size_t>(i)] = 0.1 * (i % 10) + 0.5;
    const auto f = sector_features(s, 0);
    CHECK(f[0] == doctest::Approx(0.5 / kScanRange));
    CHECK(f[10] == doctest::Approx(0.5 / kScanRange));
    CHECK(f[12] == doctest::Approx(1.4 / kScanRange));
    CHECK(f[15] == doctest::Approx(0.1 / kScanRange));
    const auto wrap = sector_features(s, 115);
    CHECK(wrap[5] == doctest::Approx(f[0]));
  }

  TEST_CASE("analytic gradient matches central differences") {
    const auto w = refined(32, Profile::Clutter);
    const auto set = build_training_set(w.env, w.graph);
    REQUIRE(set.size() > 3);
    const RegressorModel model(1, 64, 5);
    const auto r = oracles::gradient_check(model, set[2].scan, set[2].target, 100, 77);
    CHECK(r.checked == 100);
    CHECK(r.worst < 1e-4);
  }

  TEST_CASE("loss_and_grad reports the same loss and scales the gradient") {
    const auto w = refined(33, Profile::Rooms);
    const auto set = build_training_set(w.env, w.graph);
    const RegressorModel model(1, 16, 2);
    std::vector<double> g1(model.param_count()), g2(model.param_count());
    const double l = model.loss_and_grad(set[0].scan, set[0].target, g1, 1.0);
    model.loss_and_grad(set[0].scan, set[0].target, g2, 0.5);
    CHECK(l == doctest::Approx(model.loss(set[0].scan, set[0].target)).epsilon(1e-12));
    for (std::size_t i = 0; i < g1.size(); i += 97) CHECK(g2[i] == doctest::Approx(0.5 * g1[i]));
  }

  TEST_CASE("memorizes a single repeated sample") {
    const auto w = refined(34, Profile::Rooms);
    const auto set = build_training_set(w.env, w.graph);
    const std::vector<Sample> same(8, set[1]);
    double zeros = 0.0;
    for (double t : set[1].target.values()) zeros += t * t;
    zeros /= kAngleBins * kDistBins;
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 1;
    cfg.learning_rate = 3e-3;
    cfg.seed = 3;
    const auto r = train(RegressorModel(1, 64, 3), same, {}, cfg);
    REQUIRE(r.train_loss.size() == 50);
    for (std::size_t e = 6; e < r.train_loss.size(); ++e) CHECK(r.train_loss[e] < r.train_loss[e - 1]);
    CHECK(r.train_loss.back() < 0.01 * zeros);
  }

  TEST_CASE("training is seed deterministic and beats simple baselines") {
    const auto a = refined(35, Profile::Rooms), b = refined(36, Profile::Corridors), v = refined(37, Profile::Clutter);
    auto tr = build_training_set(a.env, a.graph);
    const auto tb = build_training_set(b.env, b.graph);
    tr.insert(tr.end(), tb.begin(), tb.end());
    const auto va = build_training_set(v.env, v.graph);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 11;
    const auto r1 = train(RegressorModel(1, 32, 1), tr, va, cfg);
    const auto r2 = train(RegressorModel(1, 32, 1), tr, va, cfg);
    CHECK(r1.train_loss == r2.train_loss);
    CHECK(r1.val_loss == r2.val_loss);
    CHECK(r1.model == r2.model);

    double zeros = 0.0;
    for (const auto& s : va) {
      double acc = 0.0;
      for (double t : s.target.values()) acc += t * t;
      zeros += acc / (kAngleBins * kDistBins);
    }
    zeros /= static_cast<double>(va.size());
    CHECK(mean_loss(r1.model, va) < zeros);
    CHECK(mean_loss(r1.model, va) == doctest::Approx(r1.val_loss.back()));
  }

  TEST_CASE("a non-finite loss is reported with its epoch") {
    const auto w = refined(38, Profile::Rooms);
    auto set = build_training_set(w.env, w.graph);
    set[0].target.at(7, 3) = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 5;
    try {
      train(RegressorModel(1, 16, 1), set, {}, cfg);
      FAIL("expected Diverged");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Diverged);
      CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
  }

  TEST_CASE("evaluate_predictor examples") {
    const auto env = fixtures::empty_env();
    const std::vector<Pose> poses{Pose{{5, 5}, 0.0}, Pose{{4, 4}, 1.0}};
    const std::vector<WaypointSet> t{{{0.1, 1.0}, {2.0, 2.0}}, {{4.0, 1.5}}};
    const auto same = evaluate_predictor(t, t, poses, env);
    CHECK(same.delta_abs == 0.0);
    CHECK(same.chamfer == 0.0);
    CHECK(same.hausdorff == 0.0);
    CHECK(same.pct_open == 100.0);
    auto extra = t;
    for (auto& w : extra) w.push_back({3.0, 0.5});
    CHECK(evaluate_predictor(extra, t, poses, env).delta_abs == 1.0);
    const std::vector<Pose> one{poses[0]};
    CHECK_THROWS_AS(evaluate_predictor(t, t, one, env), Error);
    // A waypoint behind a wall is not open.
    const auto walled = fixtures::env_with({make_rect(5.5, 0, 5.7, 10)});
    const std::vector<WaypointSet> p{{{0.0, 1.0}}};
    const std::vector<Pose> pp{Pose{{5, 5}, 0.0}};
    CHECK(evaluate_predictor(p, p, pp, walled).pct_open == 0.0);
  }

  TEST_CASE("chamfer and hausdorff against all-pairs sums") {
    Rng rng(12);
    for (int k = 0; k < 200; ++k) {
      std::vector<Point2> p(3), t(3);
      for (auto& x : p) x = {uniform(rng, -3, 3), uniform(rng, -3, 3)};
      for (auto& x : t) x = {uniform(rng, -3, 3), uniform(rng, -3, 3)};
      CHECK(oracles::rel_err(chamfer_distance(p, t), oracles::chamfer_pairs(p, t)) < 1e-12);
      CHECK(oracles::rel_err(hausdorff_distance(p, t), oracles::hausdorff_pairs(p, t)) < 1e-12);
      CHECK(chamfer_distance(p, t) == doctest::Approx(chamfer_distance(t, p)).epsilon(1e-14));
      CHECK(hausdorff_distance(p, t) == hausdorff_distance(t, p));
    }
    const std::vector<Point2> none;
    const std::vector<Point2> some{{0, 0}};
    CHECK_THROWS_AS(chamfer_distance(none, some), Error);
  }

  TEST_CASE("oracle heatmaps survive quantization on held-out graphs") {
    const auto w = refined(39, Profile::Corridors);
    const auto set = build_training_set(w.env, w.graph);
    PredictorTally tally;
    int exact = 0, eligible = 0;
    for (const auto& s : set) {
      const auto peaks = nms(s.target);
      tally.add(peaks, s.waypoints, s.pose, w.env);
      if (!separated(s.waypoints)) continue;
      ++eligible;
      exact += peaks.size() == s.waypoints.size();
    }
    const auto r = tally.report();
    CHECK(r.samples == static_cast<int>(set.size()));
    CHECK(eligible > static_cast<int>(set.size()) / 2);
    CHECK(exact == eligible);
    CHECK(r.chamfer <= 0.2);
  }
}
