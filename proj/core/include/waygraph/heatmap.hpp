#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "waygraph/geometry.hpp"

namespace waygraph {

inline constexpr int kAngleBins = 120;
inline constexpr int kDistBins = 12;
inline constexpr double kAngleBinDeg = 3.0;
inline constexpr double kDistStep = 0.25;
inline constexpr double kMaxRing = kDistStep * kDistBins;  // 3.0 m

struct Bin {
  int a = 0;
  int d = 0;
  friend bool operator==(const Bin&, const Bin&) = default;
};

/// Bin center angle in radians, relative to heading.
inline double bin_angle(int a) { return deg2rad(kAngleBinDeg * a + 0.5 * kAngleBinDeg); }
inline double ring_distance(int d) { return kDistStep * (d + 1); }

/// Throws OutOfRange unless 0.125 <= distance < 3.125.
Bin bin_of(double angle, double distance);

/// Circular difference in angle bins, in [0, 60].
inline int angle_bin_gap(int a, int b) {
  const int g = ((a - b) % kAngleBins + kAngleBins) % kAngleBins;
  return g <= kAngleBins / 2 ? g : kAngleBins - g;
}

/// 120 x 12 scores, row-major by angle.
class PolarGrid {
 public:
  PolarGrid() : v_(kAngleBins * kDistBins, 0.0) {}

  double& at(int a, int d) { return v_[static_cast<std::size_t>(a * kDistBins + d)]; }
  double at(int a, int d) const { return v_[static_cast<std::size_t>(a * kDistBins + d)]; }
  double at(Bin b) const { return at(b.a, b.d); }

  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }

  double max() const;
  bool valid() const;

  /// Grid seen from a heading `shift` angle bins further counter-clockwise:
  /// out(a) = in(a + shift).
  PolarGrid rotated(int shift) const;

  friend bool operator==(const PolarGrid&, const PolarGrid&) = default;

 private:
  std::vector<double> v_;
};

struct Waypoint {
  double angle = 0.0;     // radians relative to heading
  double distance = 0.0;  // meters
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

using WaypointSet = std::vector<Waypoint>;

inline Waypoint bin_center(Bin b) { return {bin_angle(b.a), ring_distance(b.d)}; }

struct GaussianSpec {
  double sigma_dist = 1.75;
  double sigma_angle_deg = 15.0;
};

/// Max-combined Gaussian bumps, one per waypoint.
PolarGrid make_target(std::span<const Waypoint> waypoints, const GaussianSpec& spec = {});

struct NmsConfig {
  int k_max = 5;
  double suppress_angle_deg = 15.0;
  double suppress_dist = 0.5;
  double threshold_ratio = 0.35;
  /// Only bins that are >= their 8 neighbours (angle wraps) may be picked.
  bool local_max_only = true;
};

struct Peak {
  Bin bin;
  double score = 0.0;
};

bool in_suppression_window(Bin p, Bin q, const NmsConfig& cfg);

/// Greedy peak extraction, descending score; ties go to lower angle index,
/// then lower distance index.
std::vector<Peak> nms_peaks(const PolarGrid& grid, const NmsConfig& cfg = {});
WaypointSet nms(const PolarGrid& grid, const NmsConfig& cfg = {});

/// Angle bins of the 30 degree view centered on selected_angle.
std::vector<int> patch_bins(double selected_angle);

/// Score-proportional draw from the view patch; returns a bin center.
/// Throws EmptyPatch when the patch has no mass.
Waypoint sample_patch(const PolarGrid& grid, double selected_angle, std::uint64_t seed);

}  // namespace waygraph
