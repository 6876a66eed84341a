#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace waygraph {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
inline Point2 operator*(double s, Point2 a) { return {a.x * s, a.y * s}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 lerp(Point2 a, Point2 b, double t) { return a + (b - a) * t; }
inline Point2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }
inline double bearing(Point2 from, Point2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

/// Wraps to [0, 2π).
inline double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Wraps to (-π, π].
inline double signed_angle(double a) {
  double r = normalize_angle(a);
  return r > kPi ? r - kTwoPi : r;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Agent position plus heading; heading is kept in [0, 2π).
struct Pose {
  Point2 position;
  double heading = 0.0;

  Pose() = default;
  Pose(Point2 p, double h) : position(p), heading(normalize_angle(h)) {}

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Converts an (angle relative to heading, distance) pair to a world point.
inline Point2 polar_to_world(const Pose& pose, double rel_angle, double dist) {
  return pose.position + unit(pose.heading + rel_angle) * dist;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b);
Point2 closest_point_on_segment(Point2 p, Point2 a, Point2 b);
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);
double segment_segment_distance(Point2 a, Point2 b, Point2 c, Point2 d);

/// Ray/segment hit distance along unit direction `dir`, or +inf.
double ray_segment_hit(Point2 origin, Point2 dir, Point2 a, Point2 b);

double polyline_length(std::span<const Point2> pts);

/// Convex polygon with counter-clockwise vertex order.
struct Polygon {
  std::vector<Point2> vertices;

  bool contains(Point2 p) const;
  double distance(Point2 p) const;  // 0 inside
  Point2 closest_boundary_point(Point2 p) const;
  double segment_distance(Point2 a, Point2 b) const;  // 0 on overlap
  double signed_area() const;
  bool is_convex() const;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

Polygon make_rect(double x0, double y0, double x1, double y1);

}  // namespace waygraph
