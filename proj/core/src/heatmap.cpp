#include "waygraph/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "waygraph/error.hpp"
#include "waygraph/rng.hpp"

namespace waygraph {

Bin bin_of(double angle, double distance) {
  if (!(distance >= 0.5 * kDistStep && distance < kMaxRing + 0.5 * kDistStep))
    throw Error(ErrorCode::OutOfRange, "distance " + std::to_string(distance) + " outside ring coverage");
  const double deg = rad2deg(normalize_angle(angle));
  int a = static_cast<int>(std::floor(deg / kAngleBinDeg)) % kAngleBins;
  if (a < 0) a += kAngleBins;
  const int d = std::clamp(static_cast<int>(std::lround(distance / kDistStep)) - 1, 0, kDistBins - 1);
  return {a, d};
}

double PolarGrid::max() const { return *std::max_element(v_.begin(), v_.end()); }

bool PolarGrid::valid() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x) && x >= 0.0; });
}

PolarGrid PolarGrid::rotated(int shift) const {
  PolarGrid out;
  for (int a = 0; a < kAngleBins; ++a) {
    const int src = ((a + shift) % kAngleBins + kAngleBins) % kAngleBins;
    for (int d = 0; d < kDistBins; ++d) out.at(a, d) = at(src, d);
  }
  return out;
}

PolarGrid make_target(std::span<const Waypoint> waypoints, const GaussianSpec& spec) {
  PolarGrid g;
  for (const auto& w : waypoints) {
    bin_of(w.angle, w.distance);  // coverage check
    const double wdeg = rad2deg(normalize_angle(w.angle));
    for (int a = 0; a < kAngleBins; ++a) {
      double dth = std::fabs(kAngleBinDeg * a + 0.5 * kAngleBinDeg - wdeg);
      dth = std::min(dth, 360.0 - dth);
      const double ta = dth * dth / (2.0 * spec.sigma_angle_deg * spec.sigma_angle_deg);
      for (int d = 0; d < kDistBins; ++d) {
        const double dd = ring_distance(d) - w.distance;
        const double v = std::exp(-dd * dd / (2.0 * spec.sigma_dist * spec.sigma_dist) - ta);
        g.at(a, d) = std::max(g.at(a, d), v);
      }
    }
  }
  return g;
}

bool in_suppression_window(Bin p, Bin q, const NmsConfig& cfg) {
  const double dth = kAngleBinDeg * angle_bin_gap(p.a, q.a);
  const double dd = kDistStep * std::abs(p.d - q.d);
  return dth <= cfg.suppress_angle_deg + 1e-9 && dd <= cfg.suppress_dist + 1e-9;
}

namespace {

bool is_local_max(const PolarGrid& g, int a, int d) {
  const double v = g.at(a, d);
  for (int da = -1; da <= 1; ++da) {
    for (int dd = -1; dd <= 1; ++dd) {
      if (da == 0 && dd == 0) continue;
      const int nd = d + dd;
      if (nd < 0 || nd >= kDistBins) continue;
      const int na = (a + da + kAngleBins) % kAngleBins;
      if (g.at(na, nd) > v) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Peak> nms_peaks(const PolarGrid& grid, const NmsConfig& cfg) {
  const double mx = grid.max();
  if (!(mx > 0.0)) return {};
  const double thr = cfg.threshold_ratio * mx;
  std::vector<Peak> cands;
  for (int a = 0; a < kAngleBins; ++a) {
    for (int d = 0; d < kDistBins; ++d) {
      const double v = grid.at(a, d);
      if (v <= 0.0 || v < thr) continue;
      if (cfg.local_max_only && !is_local_max(grid, a, d)) continue;
      cands.push_back({{a, d}, v});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Peak& x, const Peak& y) { return x.score > y.score; });
  std::vector<Peak> out;
  for (const auto& c : cands) {
    if (static_cast<int>(out.size()) >= cfg.k_max) break;
    const bool suppressed =
        std::any_of(out.begin(), out.end(), [&](const Peak& p) { return in_suppression_window(p.bin, c.bin, cfg); });
    if (!suppressed) out.push_back(c);
  }
  return out;
}

WaypointSet nms(const PolarGrid& grid, const NmsConfig& cfg) {
  WaypointSet out;
  for (const auto& p : nms_peaks(grid, cfg)) out.push_back(bin_center(p.bin));
  return out;
}

std::vector<int> patch_bins(double selected_angle) {
  // Bin centers in [theta - 15deg, theta + 15deg): always ten of them.
  const double deg = rad2deg(normalize_angle(selected_angle));
  const int first = static_cast<int>(std::ceil((deg - 15.0 - 0.5 * kAngleBinDeg) / kAngleBinDeg - 1e-9));
  std::vector<int> out;
  for (int i = 0; i < 10; ++i) out.push_back(((first + i) % kAngleBins + kAngleBins) % kAngleBins);
  return out;
}

Waypoint sample_patch(const PolarGrid& grid, double selected_angle, std::uint64_t seed) {
  const auto bins = patch_bins(selected_angle);
  double total = 0.0;
  for (int a : bins)
    for (int d = 0; d < kDistBins; ++d) total += grid.at(a, d);
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyPatch, "no mass in the selected view");
  Rng rng(mix_seed(seed, 0x7061746368ULL));
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  Bin last{bins.front(), 0};
  for (int a : bins) {
    for (int d = 0; d < kDistBins; ++d) {
      const double v = grid.at(a, d);
      if (v <= 0.0) continue;
      last = {a, d};
      acc += v;
      if (u < acc) return bin_center(last);
    }
  }
  return bin_center(last);
}

}  // namespace waygraph
