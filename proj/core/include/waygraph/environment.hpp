#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "waygraph/geometry.hpp"

namespace waygraph {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bounds {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Free-space raster shared by every geodesic query on an environment.
///
/// A cell is marked free when its center keeps `agent_radius + 0.75 * cell_size`
/// clearance. The extra margin makes the straight segment between any two
/// 8-adjacent free centers collision free (clearance is 1-Lipschitz and the
/// diagonal half-length is below 0.75 cells).
class Raster {
 public:
  Raster() = default;
  Raster(Bounds bounds, double cell_size);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  double cell_size() const { return cell_size_; }

  int index(int ix, int iy) const { return iy * nx_ + ix; }
  int ix(int idx) const { return idx % nx_; }
  int iy(int idx) const { return idx / nx_; }
  bool in_grid(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx_ && iy < ny_; }

  /// Cell containing p, or -1 outside the grid.
  int cell_of(Point2 p) const;
  Point2 center(int idx) const;

  bool free(int idx) const { return free_[static_cast<std::size_t>(idx)] != 0; }
  void set_free(int idx, bool v) { free_[static_cast<std::size_t>(idx)] = v ? 1 : 0; }
  std::size_t free_count() const;

 private:
  Bounds bounds_{};
  double cell_size_ = 0.05;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint8_t> free_;
};

/// Continuous 2D world: axis-aligned bounds plus convex polygon obstacles,
/// queried for a disc-shaped agent. Immutable after construction.
class Environment {
 public:
  Environment(Bounds bounds, std::vector<Polygon> obstacles, double cell_size = 0.05,
              double agent_radius = 0.10);

  const Bounds& bounds() const { return bounds_; }
  const std::vector<Polygon>& obstacles() const { return obstacles_; }
  double cell_size() const { return cell_size_; }
  double agent_radius() const { return agent_radius_; }
  const Raster& raster() const { return raster_; }

  /// Distance from p to the nearest obstacle surface or bounds edge; 0 when p
  /// is inside an obstacle or outside the bounds.
  double clearance(Point2 p) const;

  /// Closest point on any obstacle boundary or bounds edge.
  Point2 nearest_surface_point(Point2 p) const;

  bool is_free(Point2 p) const;
  bool segment_free(Point2 a, Point2 b) const;

  /// Distance along the ray to the first obstacle or bounds hit, capped at
  /// max_range. Throws OriginBlocked when origin is not free.
  double raycast(Point2 origin, double angle, double max_range) const;

  /// Raster cell representing a free point in geodesic queries: the containing
  /// cell if free, otherwise the nearest free cell (within 4 cells) reachable by
  /// a free straight segment. nullopt when p is blocked or no such cell exists.
  std::optional<int> anchor_cell(Point2 p) const;

  /// Nearest raster-free cell center to p (breadth-first over the raster).
  std::optional<Point2> nearest_free_point(Point2 p) const;

 private:
  void build_raster();
  bool in_inset_bounds(Point2 p) const;

  Bounds bounds_;
  std::vector<Polygon> obstacles_;
  std::vector<Bounds> boxes_;
  double cell_size_;
  double agent_radius_;
  Raster raster_;
};

/// Shortest 8-connected raster distances from a source point. Diagonal moves
/// may not cut corners. Holds a non-owning reference to its environment.
class GeodesicField {
 public:
  /// Full field over the source's connected component.
  GeodesicField(const Environment& env, Point2 source);
  /// Dijkstra stops once every anchor cell of `targets` is settled; cells not
  /// settled by then read as +inf.
  GeodesicField(const Environment& env, Point2 source, std::span<const Point2> targets);

  Point2 source() const { return source_; }
  const Environment& environment() const { return *env_; }

  /// Geodesic distance from the source to p; +inf when unreachable.
  double distance_to(Point2 p) const;
  double cell_distance(int idx) const { return dist_[static_cast<std::size_t>(idx)]; }
  std::span<const double> distances() const { return dist_; }

  /// Steepest-descent cell sequence from `from` down to the source cell.
  std::vector<int> descend(int from) const;

 private:
  void run(std::span<const int> targets);

  const Environment* env_;
  Point2 source_;
  int source_cell_ = -1;
  std::vector<double> dist_;
};

double geodesic_distance(const Environment& env, Point2 a, Point2 b);

/// Polyline a→b with gaps ≤ step, each segment collision free. Descends the
/// geodesic field of b and string-pulls the cell path.
std::vector<Point2> shortest_path_follower(const Environment& env, Point2 a, Point2 b, double step);

/// Same path before resampling (string-pulled corners only).
std::vector<Point2> pulled_path(const GeodesicField& field_to_b, Point2 a);

/// Inserts evenly spaced points so consecutive gaps are ≤ step.
std::vector<Point2> resample_polyline(std::span<const Point2> pts, double step);

}  // namespace waygraph
