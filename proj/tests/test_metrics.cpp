#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "waygraph/error.hpp"
#include "waygraph/metrics.hpp"

using namespace waygraph;

namespace {

Trajectory through(std::span<const Point2> pts) {
  Trajectory t;
  for (const auto& p : pts) t.poses.push_back(Pose{p, 0.0});
  t.actions.resize(pts.size() - 1);
  return t;
}

Episode straight_episode(Point2 a, Point2 b) {
  Episode e;
  e.id = "e";
  e.start = Pose{a, 0.0};
  e.goal = b;
  const std::vector<Point2> ends{a, b};
  e.gt_path = resample_polyline(ends, 0.25);
  return e;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("following the reference path exactly") {
    const auto env = fixtures::empty_env();
    const auto ep = straight_episode({1, 5}, {9, 5});
    const auto r = evaluate_trajectory(env, through(ep.gt_path), ep, {});
    CHECK(r.ndtw == 1.0);
    CHECK(r.success);
    CHECK(r.spl == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.tl == doctest::Approx(8.0));
    CHECK(r.sdtw == r.ndtw);
  }

  TEST_CASE("an agent that never moves") {
    const auto env = fixtures::empty_env(12, 12);
    const auto ep = straight_episode({1, 6}, {11, 6});
    const std::vector<Point2> still{{1, 6}};
    const auto r = evaluate_trajectory(env, through(still), ep, {});
    CHECK_FALSE(r.success);
    CHECK_FALSE(r.oracle_success);
    CHECK(r.spl == 0.0);
    CHECK(r.sdtw == 0.0);
    CHECK(r.ne == doctest::Approx(10.0).epsilon(0.01));
    CHECK(r.ne_euclidean == doctest::Approx(10.0));
  }

  TEST_CASE("a path twice the shortest length halves spl") {
    const auto env = fixtures::empty_env();
    const auto ep = straight_episode({2, 5}, {6, 5});
    const std::vector<Point2> wiggle{{2, 5}, {6, 5}, {8, 5}, {6, 5}};
    const auto r = evaluate_trajectory(env, through(wiggle), ep, {});
    CHECK(r.tl == doctest::Approx(8.0));
    CHECK(r.spl == doctest::Approx(0.5).epsilon(0.02));
  }

  TEST_CASE("oracle success counts the closest approach") {
    const auto env = fixtures::empty_env(12, 12);
    const auto ep = straight_episode({1, 6}, {11, 6});
    const std::vector<Point2> overshoot{{1, 6}, {10, 6}, {10, 11}};
    const auto r = evaluate_trajectory(env, through(overshoot), ep, {});
    CHECK(r.oracle_success);
    CHECK_FALSE(r.success);
  }

  TEST_CASE("dtw matches exhaustive alignment enumeration") {
    Rng rng(6);
    for (int k = 0; k < 200; ++k) {
      std::vector<Point2> a(static_cast<std::size_t>(uniform_int(rng, 1, 6)));
      std::vector<Point2> b(static_cast<std::size_t>(uniform_int(rng, 1, 7)));
      for (auto& p : a) p = {uniform(rng, 0, 5), uniform(rng, 0, 5)};
      for (auto& p : b) p = {uniform(rng, 0, 5), uniform(rng, 0, 5)};
      CHECK(oracles::rel_err(dtw(a, b), oracles::dtw_enumerate(a, b)) < 1e-9);
    }
    const std::vector<Point2> none;
    const std::vector<Point2> one{{0, 0}};
    CHECK_THROWS_AS(dtw(none, one), Error);
  }

  TEST_CASE("ndtw properties") {
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
      std::vector<Point2> a(5), b(7);
      for (auto& p : a) p = {uniform(rng, 0, 5), uniform(rng, 0, 5)};
      for (auto& p : b) p = {uniform(rng, 0, 5), uniform(rng, 0, 5)};
      const double v = ndtw(a, b);
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      CHECK(ndtw(b, b) == 1.0);
      const Point2 shift{uniform(rng, -9, 9), uniform(rng, -9, 9)};
      auto as = a, bs = b;
      for (auto& p : as) p = p + shift;
      for (auto& p : bs) p = p + shift;
      CHECK(ndtw(as, bs) == doctest::Approx(v).epsilon(1e-12));
      CHECK(v == doctest::Approx(std::exp(-oracles::dtw_enumerate(a, b) / (7 * 3.0))).epsilon(1e-12));
    }
  }

  TEST_CASE("aggregate examples") {
    EvalRecord r;
    r.id = "a";
    r.tl = 3;
    r.ne = 2;
    r.success = true;
    r.spl = 1;
    r.ndtw = 0.8;
    r.sdtw = 0.8;
    r.decisions = 4;
    r.actions = 9;
    r.collisions = 1;
    r.time_s = 0.5;
    const auto one = aggregate(std::vector<EvalRecord>{r});
    CHECK(one.episodes == 1);
    CHECK(one.tl == 3);
    CHECK(one.sr == 100.0);
    CHECK(one.osr == 0.0);
    CHECK(one.spl == 1);
    CHECK(one.actions == 9);
    EvalRecord z = r;
    z.spl = 0;
    CHECK(aggregate(std::vector<EvalRecord>{r, z}).spl == 0.5);
    CHECK_THROWS_AS(aggregate(std::vector<EvalRecord>{}), Error);
  }

  TEST_CASE("aggregate matches an independent recomputation") {
    Rng rng(10);
    std::vector<EvalRecord> rs(100);
    long double tl = 0, sr = 0, spl = 0, ndtw_sum = 0, dec = 0;
    for (auto& r : rs) {
      r.tl = uniform(rng, 0, 20);
      r.success = uniform01(rng) < 0.4;
      r.spl = r.success ? uniform01(rng) : 0.0;
      r.ndtw = uniform01(rng);
      r.decisions = uniform_int(rng, 0, 50);
      tl += r.tl;
      sr += r.success;
      spl += r.spl;
      ndtw_sum += r.ndtw;
      dec += r.decisions;
    }
    const auto s = aggregate(rs);
    CHECK(s.tl == doctest::Approx(static_cast<double>(tl / 100)));
    CHECK(s.sr == doctest::Approx(static_cast<double>(sr)));
    CHECK(s.spl == doctest::Approx(static_cast<double>(spl / 100)));
    CHECK(s.ndtw == doctest::Approx(static_cast<double>(ndtw_sum / 100)));
    CHECK(s.decisions == doctest::Approx(static_cast<double>(dec / 100)));
  }
}
