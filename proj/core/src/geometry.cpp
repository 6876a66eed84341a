#include "waygraph/geometry.hpp"

#include <algorithm>
#include <limits>

namespace waygraph {

Point2 closest_point_on_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  return distance(p, closest_point_on_segment(p, a, b));
}

namespace {

int orientation(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double segment_segment_distance(Point2 a, Point2 b, Point2 c, Point2 d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                   point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

double ray_segment_hit(Point2 origin, Point2 dir, Point2 a, Point2 b) {
  const Point2 e = b - a;
  const double denom = cross(dir, e);
  const Point2 w = a - origin;
  if (std::abs(denom) < 1e-15) {
    // Parallel: only a collinear overlap can be hit.
    if (std::abs(cross(w, dir)) > 1e-12) return std::numeric_limits<double>::infinity();
    const double ta = dot(a - origin, dir);
    const double tb = dot(b - origin, dir);
    if (ta < 0.0 && tb < 0.0) return std::numeric_limits<double>::infinity();
    if (ta <= 0.0 || tb <= 0.0) return 0.0;
    return std::min(ta, tb);
  }
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::numeric_limits<double>::infinity();
  return t;
}

double polyline_length(std::span<const Point2> pts) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
  return total;
}

bool Polygon::contains(Point2 p) const {
  const std::size_t n = vertices.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(vertices[(i + 1) % n] - vertices[i], p - vertices[i]) < 0.0) return false;
  }
  return true;
}

Point2 Polygon::closest_boundary_point(Point2 p) const {
  Point2 best = vertices.front();
  double best_d = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 q = closest_point_on_segment(p, vertices[i], vertices[(i + 1) % n]);
    const double d = waygraph::distance(p, q);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

double Polygon::distance(Point2 p) const {
  if (contains(p)) return 0.0;
  return waygraph::distance(p, closest_boundary_point(p));
}

double Polygon::segment_distance(Point2 a, Point2 b) const {
  if (contains(a) || contains(b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, segment_segment_distance(a, b, vertices[i], vertices[(i + 1) % n]));
    if (best == 0.0) break;
  }
  return best;
}

double Polygon::signed_area() const {
  double s = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) s += cross(vertices[i], vertices[(i + 1) % n]);
  return 0.5 * s;
}

bool Polygon::is_convex() const {
  const std::size_t n = vertices.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = vertices[i];
    const Point2 b = vertices[(i + 1) % n];
    const Point2 c = vertices[(i + 2) % n];
    if (cross(b - a, c - b) < -1e-12) return false;
  }
  return signed_area() > 0.0;
}

Polygon make_rect(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

}  // namespace waygraph
