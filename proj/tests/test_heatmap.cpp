#include <doctest.h>

#include <map>

#include <algorithm>
#include <set>

#include "waygraph/error.hpp"
#include "waygraph/heatmap.hpp"
#include "waygraph/rng.hpp"

using namespace waygraph;

TEST_SUITE("heatmap") {
  TEST_CASE("bin_of examples") {
    CHECK(bin_of(0.0, 0.25) == Bin{0, 0});
    CHECK(bin_of(deg2rad(359), 3.0) == Bin{119, 11});
    CHECK(bin_of(deg2rad(46), 1.13) == Bin{15, 4});
    CHECK(bin_of(deg2rad(-1), 1.0) == Bin{119, 3});
    CHECK_THROWS_AS(bin_of(0.0, 0.1), Error);
    CHECK_THROWS_AS(bin_of(0.0, 3.2), Error);
  }

  TEST_CASE("bin_of inverts bin centers for all 1440 bins") {
    for (int a = 0; a < kAngleBins; ++a)
      for (int d = 0; d < kDistBins; ++d) {
        const auto c = bin_center({a, d});
        CHECK(bin_of(c.angle, c.distance) == Bin{a, d});
      }
  }

  TEST_CASE("bin boundaries") {
    for (int a = 0; a < kAngleBins; ++a) {
      const double lo = deg2rad(3.0 * a);
      CHECK(bin_of(lo + 1e-9, 1.0).a == a);
      CHECK(bin_of(lo - 1e-9, 1.0).a == (a + kAngleBins - 1) % kAngleBins);
    }
    for (int d = 0; d < kDistBins; ++d) {
      const double lo = 0.25 * d + 0.125;
      CHECK(bin_of(0.0, lo + 1e-9).d == d);
      if (d > 0) CHECK(bin_of(0.0, lo - 1e-9).d == d - 1);
    }
  }

  TEST_CASE("make_target examples") {
    const WaypointSet one{bin_center({10, 5})};
    const auto g = make_target(one);
    CHECK(g.at(10, 5) == doctest::Approx(1.0));
    CHECK(g.max() == g.at(10, 5));
    CHECK(make_target({}) == PolarGrid{});
    // 15 degrees off at the same ring: exp(-15^2 / (2 * 15^2)).
    const WaypointSet w0{{0.0, 1.0}};
    const auto h = make_target(w0);
    const double want = std::exp(-0.5 * std::pow((bin_angle(5) - 0.0) / deg2rad(15.0), 2));
    CHECK(h.at(5, 3) == doctest::Approx(want));
    const WaypointSet w1{bin_center({5, 3})};
    CHECK(make_target(w1).at(0, 3) == doctest::Approx(std::exp(-0.5)));
    CHECK(h.valid());
  }

  TEST_CASE("make_target is permutation invariant and monotone") {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
      WaypointSet w;
      for (int i = 0; i < 4; ++i) w.push_back({uniform(rng, 0, kTwoPi), uniform(rng, 0.2, 3.1)});
      auto r = w;
      std::reverse(r.begin(), r.end());
      CHECK(make_target(w) == make_target(r));
      const auto fewer = make_target(std::span<const Waypoint>(w).first(3));
      const auto all = make_target(w);
      for (std::size_t i = 0; i < all.values().size(); ++i) CHECK(all.values()[i] >= fewer.values()[i]);
    }
  }

  TEST_CASE("nms examples") {
    PolarGrid g;
    g.at(10, 5) = 1.0;
    const auto w = nms(g);
    REQUIRE(w.size() == 1);
    CHECK(rad2deg(w[0].angle) == doctest::Approx(31.5));
    CHECK(w[0].distance == doctest::Approx(1.5));

    PolarGrid two;
    two.at(60, 2) = 1.0;
    two.at(30, 2) = 1.0;
    const auto p = nms_peaks(two);
    REQUIRE(p.size() == 2);
    CHECK(p[0].bin == Bin{30, 2});
    CHECK(p[1].bin == Bin{60, 2});

    const WaypointSet three{bin_center({5, 2}), bin_center({50, 8}), bin_center({90, 4})};
    auto got = nms(make_target(three));
    auto key = [](const Waypoint& x) { return std::pair{x.angle, x.distance}; };
    std::sort(got.begin(), got.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
    CHECK(got == three);
    CHECK(nms(PolarGrid{}).empty());
  }

  TEST_CASE("nms output respects k, threshold and the suppression window") {
    Rng rng(9);
    const NmsConfig cfg;
    for (int k = 0; k < 100; ++k) {
      PolarGrid g;
      for (double& v : g.values()) v = uniform01(rng);
      const auto peaks = nms_peaks(g, cfg);
      CHECK(peaks.size() <= 5);
      for (std::size_t i = 0; i < peaks.size(); ++i) {
        CHECK(peaks[i].score >= 0.35 * g.max());
        if (i > 0) CHECK(peaks[i].score <= peaks[i - 1].score);
        for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(in_suppression_window(peaks[i].bin, peaks[j].bin, cfg));
      }
    }
  }

  TEST_CASE("rotation shifts the angle axis") {
    PolarGrid g;
    g.at(3, 1) = 0.5;
    const auto r = g.rotated(2);
    CHECK(r.at(1, 1) == 0.5);
    CHECK(g.rotated(-3).at(6, 1) == 0.5);
    CHECK(g.rotated(120) == g);
  }

  TEST_CASE("patch covers ten bins around the selected angle") {
    for (int a = 0; a < kAngleBins; ++a) {
      const auto bins = patch_bins(bin_angle(a));
      CHECK(bins.size() == 10);
      CHECK(std::set<int>(bins.begin(), bins.end()).size() == 10);
      for (int b : bins) CHECK(angle_bin_gap(a, b) <= 5);
    }
  }

  TEST_CASE("sample_patch examples") {
    PolarGrid g;
    g.at(2, 7) = 0.3;
    for (std::uint64_t s = 0; s < 50; ++s) CHECK(sample_patch(g, bin_angle(2), s) == bin_center({2, 7}));

    PolarGrid outside;
    outside.at(60, 0) = 1.0;
    CHECK_THROWS_AS(sample_patch(outside, bin_angle(2), 1), Error);
  }

  TEST_CASE("uniform patch samples uniformly") {
    PolarGrid g;
    for (double& v : g.values()) v = 1.0;
    const double sel = bin_angle(40);
    const auto bins = patch_bins(sel);
    std::map<std::pair<int, int>, int> counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const auto w = sample_patch(g, sel, static_cast<std::uint64_t>(i));
      const auto b = bin_of(w.angle, w.distance);
      CHECK(std::find(bins.begin(), bins.end(), b.a) != bins.end());
      ++counts[{b.a, b.d}];
    }
    CHECK(counts.size() == 120);
    const double expect = n / 120.0;
    double chi2 = 0.0;
    for (const auto& [b, c] : counts) chi2 += (c - expect) * (c - expect) / expect;
    CHECK(chi2 < 157.8);  // 99th percentile, 119 degrees of freedom
  }
}
