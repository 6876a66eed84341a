#include "waygraph/environment.hpp"
#include "waygraph/workclock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>

#include "waygraph/error.hpp"

namespace waygraph {

namespace {

constexpr double kEps = 1e-9;
constexpr double kRasterMargin = 0.75;  // in cells
constexpr int kAnchorSearch = 4;        // in cells

struct Move {
  int dx;
  int dy;
};
constexpr std::array<Move, 8> kMoves{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

Bounds bbox_of(const Polygon& poly) {
  Bounds b{kInf, kInf, -kInf, -kInf};
  for (const auto& v : poly.vertices) {
    b.x0 = std::min(b.x0, v.x);
    b.y0 = std::min(b.y0, v.y);
    b.x1 = std::max(b.x1, v.x);
    b.y1 = std::max(b.y1, v.y);
  }
  return b;
}

bool boxes_overlap(const Bounds& a, const Bounds& b, double pad) {
  return a.x0 - pad <= b.x1 && b.x0 <= a.x1 + pad && a.y0 - pad <= b.y1 && b.y0 <= a.y1 + pad;
}

}  // namespace

Raster::Raster(Bounds bounds, double cell_size) : bounds_(bounds), cell_size_(cell_size) {
  nx_ = std::max(1, static_cast<int>(std::ceil(bounds.width() / cell_size - 1e-9)));
  ny_ = std::max(1, static_cast<int>(std::ceil(bounds.height() / cell_size - 1e-9)));
  free_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), 0);
}

int Raster::cell_of(Point2 p) const {
  const int i = static_cast<int>(std::floor((p.x - bounds_.x0) / cell_size_));
  const int j = static_cast<int>(std::floor((p.y - bounds_.y0) / cell_size_));
  if (!in_grid(i, j)) return -1;
  return index(i, j);
}

Point2 Raster::center(int idx) const {
  return {bounds_.x0 + (ix(idx) + 0.5) * cell_size_, bounds_.y0 + (iy(idx) + 0.5) * cell_size_};
}

std::size_t Raster::free_count() const {
  return static_cast<std::size_t>(std::count(free_.begin(), free_.end(), std::uint8_t{1}));
}

Environment::Environment(Bounds bounds, std::vector<Polygon> obstacles, double cell_size,
                         double agent_radius)
    : bounds_(bounds), obstacles_(std::move(obstacles)), cell_size_(cell_size), agent_radius_(agent_radius) {
  if (!(bounds_.width() > 0.0 && bounds_.height() > 0.0))
    throw Error(ErrorCode::InvalidInput, "bounds must have positive extent");
  if (!(cell_size_ > 0.0) || !(agent_radius_ >= 0.0))
    throw Error(ErrorCode::InvalidInput, "cell_size must be positive and agent_radius non-negative");
  for (auto& poly : obstacles_) {
    if (poly.vertices.size() >= 3 && poly.signed_area() < 0.0)
      std::reverse(poly.vertices.begin(), poly.vertices.end());
    if (!poly.is_convex()) throw Error(ErrorCode::InvalidInput, "obstacle polygons must be convex");
    for (const auto& v : poly.vertices) {
      if (!std::isfinite(v.x) || !std::isfinite(v.y) || !bounds_.contains(v))
        throw Error(ErrorCode::InvalidInput, "obstacle vertex outside bounds");
    }
    boxes_.push_back(bbox_of(poly));
  }
  build_raster();
  if (raster_.free_count() == 0) throw Error(ErrorCode::InvalidInput, "environment has no free space");
}

void Environment::build_raster() {
  raster_ = Raster(bounds_, cell_size_);
  const double thr = agent_radius_ + kRasterMargin * cell_size_;
  for (int idx = 0; idx < raster_.size(); ++idx) {
    const Point2 c = raster_.center(idx);
    const bool inside = c.x - bounds_.x0 >= thr && bounds_.x1 - c.x >= thr && c.y - bounds_.y0 >= thr &&
                        bounds_.y1 - c.y >= thr;
    raster_.set_free(idx, inside);
  }
  for (std::size_t k = 0; k < obstacles_.size(); ++k) {
    const Bounds& b = boxes_[k];
    const int i0 = std::max(0, static_cast<int>(std::floor((b.x0 - thr - bounds_.x0) / cell_size_)));
    const int j0 = std::max(0, static_cast<int>(std::floor((b.y0 - thr - bounds_.y0) / cell_size_)));
    const int i1 = std::min(raster_.nx() - 1, static_cast<int>(std::floor((b.x1 + thr - bounds_.x0) / cell_size_)));
    const int j1 = std::min(raster_.ny() - 1, static_cast<int>(std::floor((b.y1 + thr - bounds_.y0) / cell_size_)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const int idx = raster_.index(i, j);
        if (!raster_.free(idx)) continue;
        if (obstacles_[k].distance(raster_.center(idx)) < thr) raster_.set_free(idx, false);
      }
    }
  }
}

bool Environment::in_inset_bounds(Point2 p) const {
  const double r = agent_radius_ - kEps;
  return p.x - bounds_.x0 >= r && bounds_.x1 - p.x >= r && p.y - bounds_.y0 >= r && bounds_.y1 - p.y >= r;
}

double Environment::clearance(Point2 p) const {
  if (!bounds_.contains(p)) return 0.0;
  double best = std::min({p.x - bounds_.x0, bounds_.x1 - p.x, p.y - bounds_.y0, bounds_.y1 - p.y});
  for (const auto& poly : obstacles_) {
    best = std::min(best, poly.distance(p));
    if (best == 0.0) break;
  }
  return best;
}

Point2 Environment::nearest_surface_point(Point2 p) const {
  std::array<Point2, 4> walls{Point2{bounds_.x0, p.y}, Point2{bounds_.x1, p.y}, Point2{p.x, bounds_.y0},
                              Point2{p.x, bounds_.y1}};
  Point2 best = walls[0];
  double best_d = kInf;
  for (const auto& w : walls) {
    const double d = distance(p, w);
    if (d < best_d) {
      best_d = d;
      best = w;
    }
  }
  for (const auto& poly : obstacles_) {
    const Point2 q = poly.closest_boundary_point(p);
    const double d = distance(p, q);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

bool Environment::is_free(Point2 p) const {
  ++work_counts().point_checks;
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !in_inset_bounds(p)) return false;
  const double r = agent_radius_ - kEps;
  const Bounds pb{p.x, p.y, p.x, p.y};
  for (std::size_t k = 0; k < obstacles_.size(); ++k) {
    if (!boxes_overlap(boxes_[k], pb, agent_radius_)) continue;
    if (obstacles_[k].distance(p) < r) return false;
  }
  return true;
}

bool Environment::segment_free(Point2 a, Point2 b) const {
  ++work_counts().segment_checks;
  if (!in_inset_bounds(a) || !in_inset_bounds(b)) return false;
  const double r = agent_radius_ - kEps;
  const Bounds sb{std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
  for (std::size_t k = 0; k < obstacles_.size(); ++k) {
    if (!boxes_overlap(boxes_[k], sb, agent_radius_)) continue;
    if (obstacles_[k].segment_distance(a, b) < r) return false;
  }
  return true;
}

double Environment::raycast(Point2 origin, double angle, double max_range) const {
  if (!is_free(origin)) throw Error(ErrorCode::OriginBlocked, "raycast origin is not free");
  ++work_counts().rays;
  const Point2 dir = unit(angle);
  double best = max_range;
  const std::array<std::pair<Point2, Point2>, 4> walls{{{{bounds_.x0, bounds_.y0}, {bounds_.x1, bounds_.y0}},
                                                        {{bounds_.x1, bounds_.y0}, {bounds_.x1, bounds_.y1}},
                                                        {{bounds_.x1, bounds_.y1}, {bounds_.x0, bounds_.y1}},
                                                        {{bounds_.x0, bounds_.y1}, {bounds_.x0, bounds_.y0}}}};
  for (const auto& [a, b] : walls) best = std::min(best, ray_segment_hit(origin, dir, a, b));
  const Point2 end = origin + dir * best;
  const Bounds rb{std::min(origin.x, end.x), std::min(origin.y, end.y), std::max(origin.x, end.x),
                  std::max(origin.y, end.y)};
  for (std::size_t k = 0; k < obstacles_.size(); ++k) {
    if (!boxes_overlap(boxes_[k], rb, 0.0)) continue;
    const auto& vs = obstacles_[k].vertices;
    for (std::size_t i = 0; i < vs.size(); ++i)
      best = std::min(best, ray_segment_hit(origin, dir, vs[i], vs[(i + 1) % vs.size()]));
  }
  return best;
}

std::optional<int> Environment::anchor_cell(Point2 p) const {
  if (!is_free(p)) return std::nullopt;
  const int own = raster_.cell_of(p);
  if (own >= 0 && raster_.free(own)) return own;
  const double cs = cell_size_;
  const int ci = static_cast<int>(std::floor((p.x - bounds_.x0) / cs));
  const int cj = static_cast<int>(std::floor((p.y - bounds_.y0) / cs));
  std::vector<std::pair<double, int>> cands;
  for (int dj = -kAnchorSearch; dj <= kAnchorSearch; ++dj) {
    for (int di = -kAnchorSearch; di <= kAnchorSearch; ++di) {
      const int i = ci + di;
      const int j = cj + dj;
      if (!raster_.in_grid(i, j)) continue;
      const int idx = raster_.index(i, j);
      if (!raster_.free(idx)) continue;
      cands.emplace_back(distance(p, raster_.center(idx)), idx);
    }
  }
  std::sort(cands.begin(), cands.end());
  for (const auto& [d, idx] : cands) {
    if (segment_free(p, raster_.center(idx))) return idx;
  }
  return std::nullopt;
}

std::optional<Point2> Environment::nearest_free_point(Point2 p) const {
  const double cs = cell_size_;
  const int ci = std::clamp(static_cast<int>(std::floor((p.x - bounds_.x0) / cs)), 0, raster_.nx() - 1);
  const int cj = std::clamp(static_cast<int>(std::floor((p.y - bounds_.y0) / cs)), 0, raster_.ny() - 1);
  const int max_ring = std::max(raster_.nx(), raster_.ny());
  double best_d = kInf;
  int best = -1;
  for (int ring = 0; ring <= max_ring; ++ring) {
    if (best >= 0 && (ring - 1) * cs > best_d) break;
    for (int dj = -ring; dj <= ring; ++dj) {
      for (int di = -ring; di <= ring; ++di) {
        if (std::max(std::abs(di), std::abs(dj)) != ring) continue;
        const int i = ci + di;
        const int j = cj + dj;
        if (!raster_.in_grid(i, j)) continue;
        const int idx = raster_.index(i, j);
        if (!raster_.free(idx)) continue;
        const double d = distance(p, raster_.center(idx));
        if (d < best_d) {
          best_d = d;
          best = idx;
        }
      }
    }
  }
  if (best < 0) return std::nullopt;
  return raster_.center(best);
}

GeodesicField::GeodesicField(const Environment& env, Point2 source) : env_(&env), source_(source) {
  run({});
}

GeodesicField::GeodesicField(const Environment& env, Point2 source, std::span<const Point2> targets)
    : env_(&env), source_(source) {
  std::vector<int> cells;
  for (const auto& t : targets) {
    if (auto c = env.anchor_cell(t)) cells.push_back(*c);
  }
  // No resolvable target: nothing to wait for, compute the full field.
  run(cells);
}

void GeodesicField::run(std::span<const int> targets) {
  const Raster& ras = env_->raster();
  dist_.assign(static_cast<std::size_t>(ras.size()), kInf);
  if (!env_->is_free(source_)) throw Error(ErrorCode::EndpointBlocked, "geodesic source is not free");
  const auto src = env_->anchor_cell(source_);
  if (!src) return;
  source_cell_ = *src;

  std::vector<std::uint8_t> is_target(targets.empty() ? 0 : static_cast<std::size_t>(ras.size()), 0);
  std::size_t remaining = 0;
  for (int t : targets) {
    if (!is_target[static_cast<std::size_t>(t)]) {
      is_target[static_cast<std::size_t>(t)] = 1;
      ++remaining;
    }
  }
  const bool bounded = remaining > 0;

  std::vector<std::uint8_t> settled(static_cast<std::size_t>(ras.size()), 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist_[static_cast<std::size_t>(source_cell_)] = 0.0;
  open.emplace(0.0, source_cell_);
  const double cs = ras.cell_size();
  const double diag = cs * std::numbers::sqrt2;
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (settled[static_cast<std::size_t>(u)]) continue;
    settled[static_cast<std::size_t>(u)] = 1;
    ++work_counts().cells;
    if (bounded && is_target[static_cast<std::size_t>(u)]) {
      if (--remaining == 0) break;
    }
    const int ui = ras.ix(u);
    const int uj = ras.iy(u);
    for (const auto& m : kMoves) {
      const int vi = ui + m.dx;
      const int vj = uj + m.dy;
      if (!ras.in_grid(vi, vj)) continue;
      const int v = ras.index(vi, vj);
      if (!ras.free(v) || settled[static_cast<std::size_t>(v)]) continue;
      double step = cs;
      if (m.dx != 0 && m.dy != 0) {
        if (!ras.free(ras.index(ui + m.dx, uj)) || !ras.free(ras.index(ui, uj + m.dy))) continue;
        step = diag;
      }
      const double nd = d + step;
      if (nd < dist_[static_cast<std::size_t>(v)]) {
        dist_[static_cast<std::size_t>(v)] = nd;
        open.emplace(nd, v);
      }
    }
  }
  if (bounded) {
    for (std::size_t i = 0; i < dist_.size(); ++i) {
      if (!settled[i]) dist_[i] = kInf;
    }
  }
}

double GeodesicField::distance_to(Point2 p) const {
  if (p == source_) return source_cell_ >= 0 ? 0.0 : kInf;
  const auto c = env_->anchor_cell(p);
  if (!c) return kInf;
  return dist_[static_cast<std::size_t>(*c)];
}

std::vector<int> GeodesicField::descend(int from) const {
  std::vector<int> cells;
  if (from < 0 || !std::isfinite(dist_[static_cast<std::size_t>(from)])) return cells;
  const Raster& ras = env_->raster();
  const double cs = ras.cell_size();
  const double diag = cs * std::numbers::sqrt2;
  int cur = from;
  cells.push_back(cur);
  while (dist_[static_cast<std::size_t>(cur)] > 0.0) {
    const int ui = ras.ix(cur);
    const int uj = ras.iy(cur);
    int best = -1;
    double best_d = dist_[static_cast<std::size_t>(cur)];
    for (const auto& m : kMoves) {
      const int vi = ui + m.dx;
      const int vj = uj + m.dy;
      if (!ras.in_grid(vi, vj)) continue;
      const int v = ras.index(vi, vj);
      if (!ras.free(v)) continue;
      if (m.dx != 0 && m.dy != 0 &&
          (!ras.free(ras.index(ui + m.dx, uj)) || !ras.free(ras.index(ui, uj + m.dy))))
        continue;
      // Pick the predecessor consistent with the recorded distance first.
      const double step = (m.dx != 0 && m.dy != 0) ? diag : cs;
      const double dv = dist_[static_cast<std::size_t>(v)];
      if (std::abs(dv + step - dist_[static_cast<std::size_t>(cur)]) < 1e-9) {
        best = v;
        break;
      }
      if (dv < best_d) {
        best_d = dv;
        best = v;
      }
    }
    if (best < 0) break;
    cur = best;
    cells.push_back(cur);
  }
  return cells;
}

double geodesic_distance(const Environment& env, Point2 a, Point2 b) {
  if (!env.is_free(a) || !env.is_free(b))
    throw Error(ErrorCode::EndpointBlocked, "geodesic endpoint is not free");
  if (a == b) return 0.0;
  const std::array<Point2, 1> targets{a};
  const GeodesicField field(env, b, targets);
  return field.distance_to(a);
}

std::vector<Point2> pulled_path(const GeodesicField& field_to_b, Point2 a) {
  const Environment& env = field_to_b.environment();
  const Point2 b = field_to_b.source();
  if (a == b) return {a};
  const auto anchor = env.anchor_cell(a);
  if (!anchor || !std::isfinite(field_to_b.cell_distance(*anchor)))
    throw Error(ErrorCode::NoPath, "no free path between endpoints");
  std::vector<Point2> pts{a};
  for (int c : field_to_b.descend(*anchor)) pts.push_back(env.raster().center(c));
  pts.push_back(b);

  std::vector<Point2> out{pts.front()};
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t j = i + 1;
    while (j + 1 < pts.size() && env.segment_free(pts[i], pts[j + 1])) ++j;
    out.push_back(pts[j]);
    i = j;
  }
  return out;
}

std::vector<Point2> resample_polyline(std::span<const Point2> pts, double step) {
  std::vector<Point2> out;
  if (pts.empty()) return out;
  out.push_back(pts.front());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double len = distance(pts[i - 1], pts[i]);
    const int k = std::max(1, static_cast<int>(std::ceil(len / step - 1e-9)));
    for (int s = 1; s < k; ++s) out.push_back(lerp(pts[i - 1], pts[i], static_cast<double>(s) / k));
    out.push_back(pts[i]);
  }
  return out;
}

std::vector<Point2> shortest_path_follower(const Environment& env, Point2 a, Point2 b, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidInput, "step must be positive");
  if (!env.is_free(a) || !env.is_free(b)) throw Error(ErrorCode::EndpointBlocked, "path endpoint is not free");
  if (a == b) return {a};
  const std::array<Point2, 1> targets{a};
  const GeodesicField field(env, b, targets);
  const auto corners = pulled_path(field, a);
  return resample_polyline(corners, step);
}

}  // namespace waygraph
