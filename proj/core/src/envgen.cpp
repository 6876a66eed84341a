#include "waygraph/envgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <string>

#include "waygraph/error.hpp"
#include "waygraph/rng.hpp"

namespace waygraph {

Profile parse_profile(std::string_view name) {
  if (name == "rooms") return Profile::Rooms;
  if (name == "corridors") return Profile::Corridors;
  if (name == "clutter") return Profile::Clutter;
  throw Error(ErrorCode::InvalidInput, "unknown profile '" + std::string(name) + "'");
}

std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::Rooms: return "rooms";
    case Profile::Corridors: return "corridors";
    case Profile::Clutter: return "clutter";
  }
  return "rooms";
}

namespace {

constexpr double kWallThickness = 0.12;
constexpr double kFurnitureGap = 0.7;

double polygon_distance(const Polygon& a, const Polygon& b) {
  for (const auto& v : a.vertices)
    if (b.contains(v)) return 0.0;
  for (const auto& v : b.vertices)
    if (a.contains(v)) return 0.0;
  double best = kInf;
  const auto& av = a.vertices;
  const auto& bv = b.vertices;
  for (std::size_t i = 0; i < av.size(); ++i)
    for (std::size_t j = 0; j < bv.size(); ++j)
      best = std::min(best, segment_segment_distance(av[i], av[(i + 1) % av.size()], bv[j], bv[(j + 1) % bv.size()]));
  return best;
}

Polygon rotated_box(Point2 c, double w, double h, double angle) {
  Polygon p;
  const std::array<Point2, 4> local{{{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}}};
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  for (const auto& l : local) p.vertices.push_back({c.x + cs * l.x - sn * l.y, c.y + sn * l.x + cs * l.y});
  return p;
}

Polygon regular_polygon(Point2 c, double radius, int sides, double phase) {
  Polygon p;
  for (int k = 0; k < sides; ++k) p.vertices.push_back(c + unit(phase + kTwoPi * k / sides) * radius);
  return p;
}

/// Wall along one axis between [from, to] with a door gap; emits 0..2 rectangles.
struct WallSpec {
  bool vertical;   // wall runs along y at x = pos
  double pos;
  double from;
  double to;
};

struct Door {
  Point2 center;
};

void emit_wall(const WallSpec& w, Rng& rng, bool open_wall, std::vector<Polygon>& out, std::vector<Door>& doors) {
  if (open_wall) return;
  const double t = kWallThickness / 2.0;
  const double len = w.to - w.from;
  const double door = uniform(rng, 0.9, 1.3);
  std::vector<std::pair<double, double>> pieces;
  if (len < door + 1.2) {
    // Too short for a framed door: leave it open.
    return;
  }
  const double c = uniform(rng, w.from + 0.6 + door / 2, w.to - 0.6 - door / 2);
  pieces.emplace_back(w.from - t, c - door / 2);
  pieces.emplace_back(c + door / 2, w.to + t);
  doors.push_back({w.vertical ? Point2{w.pos, c} : Point2{c, w.pos}});
  for (const auto& [s, e] : pieces) {
    if (e - s <= 1e-6) continue;
    if (w.vertical)
      out.push_back(make_rect(w.pos - t, s, w.pos + t, e));
    else
      out.push_back(make_rect(s, w.pos - t, e, w.pos + t));
  }
}

Polygon clip_to_bounds(const Polygon& p, const Bounds& b) {
  Polygon q = p;
  for (auto& v : q.vertices) {
    v.x = std::clamp(v.x, b.x0, b.x1);
    v.y = std::clamp(v.y, b.y0, b.y1);
  }
  return q;
}

struct Room {
  double x0, y0, x1, y1;
};

void add_furniture(const std::vector<Room>& rooms, const std::vector<Door>& doors, Rng& rng,
                   std::vector<Polygon>& out, std::vector<Polygon>& furniture, int max_per_room) {
  for (const auto& room : rooms) {
    const int n = uniform_int(rng, 0, max_per_room);
    for (int k = 0; k < n; ++k) {
      for (int attempt = 0; attempt < 30; ++attempt) {
        const double w = uniform(rng, 0.4, 1.1);
        const double h = uniform(rng, 0.4, 1.1);
        const double ang = uniform01(rng) < 0.5 ? 0.0 : uniform(rng, 0.0, kPi);
        const double half = 0.5 * std::hypot(w, h);
        const double inset = kFurnitureGap + kWallThickness / 2 + half;
        if (room.x1 - room.x0 < 2 * inset || room.y1 - room.y0 < 2 * inset) break;
        const Point2 c{uniform(rng, room.x0 + inset, room.x1 - inset), uniform(rng, room.y0 + inset, room.y1 - inset)};
        Polygon box = rotated_box(c, w, h, ang);
        bool ok = true;
        for (const auto& d : doors)
          if (polygon_distance(box, regular_polygon(d.center, 0.01, 4, 0.0)) < 1.2) ok = false;
        for (const auto& f : furniture)
          if (ok && polygon_distance(box, f) < kFurnitureGap) ok = false;
        if (!ok) continue;
        furniture.push_back(box);
        out.push_back(box);
        break;
      }
    }
  }
}

std::vector<double> splits(Rng& rng, double lo, double hi, int parts, double jitter) {
  std::vector<double> xs;
  for (int k = 1; k < parts; ++k) xs.push_back(lo + (hi - lo) * k / parts + uniform(rng, -jitter, jitter));
  return xs;
}

Environment layout_rooms(Rng& rng, const GenOptions& opts) {
  const double W = uniform(rng, 10.0, 13.0);
  const double H = uniform(rng, 8.0, 10.5);
  const Bounds b{0.0, 0.0, W, H};
  const int cols = uniform_int(rng, 2, 3);
  const int rows = 2;
  const auto xs = splits(rng, 0.0, W, cols, 0.6);
  const auto ys = splits(rng, 0.0, H, rows, 0.5);
  std::vector<double> xe{0.0};
  xe.insert(xe.end(), xs.begin(), xs.end());
  xe.push_back(W);
  std::vector<double> ye{0.0};
  ye.insert(ye.end(), ys.begin(), ys.end());
  ye.push_back(H);

  std::vector<Polygon> obstacles;
  std::vector<Door> doors;
  for (double x : xs)
    for (std::size_t j = 0; j + 1 < ye.size(); ++j)
      emit_wall({true, x, ye[j], ye[j + 1]}, rng, uniform01(rng) < 0.15, obstacles, doors);
  for (double y : ys)
    for (std::size_t i = 0; i + 1 < xe.size(); ++i)
      emit_wall({false, y, xe[i], xe[i + 1]}, rng, uniform01(rng) < 0.15, obstacles, doors);
  for (auto& o : obstacles) o = clip_to_bounds(o, b);

  std::vector<Room> rooms;
  for (std::size_t i = 0; i + 1 < xe.size(); ++i)
    for (std::size_t j = 0; j + 1 < ye.size(); ++j) rooms.push_back({xe[i], ye[j], xe[i + 1], ye[j + 1]});
  std::vector<Polygon> furniture;
  add_furniture(rooms, doors, rng, obstacles, furniture, 2);
  return Environment(b, std::move(obstacles), opts.cell_size, opts.agent_radius);
}

Environment layout_corridors(Rng& rng, const GenOptions& opts) {
  const double W = uniform(rng, 12.0, 15.0);
  const double H = uniform(rng, 9.0, 11.0);
  const Bounds b{0.0, 0.0, W, H};
  const double cw = uniform(rng, 1.4, 1.8);
  const double yc = H / 2 + uniform(rng, -0.5, 0.5);
  const double ylo = yc - cw / 2;
  const double yhi = yc + cw / 2;

  std::vector<Polygon> obstacles;
  std::vector<Door> doors;
  std::vector<Room> rooms;
  for (int side = 0; side < 2; ++side) {
    const int n = uniform_int(rng, 2, 4);
    const auto xs = splits(rng, 0.0, W, n, 0.5);
    std::vector<double> xe{0.0};
    xe.insert(xe.end(), xs.begin(), xs.end());
    xe.push_back(W);
    const double wall_y = side == 0 ? ylo : yhi;
    const double room_lo = side == 0 ? 0.0 : yhi;
    const double room_hi = side == 0 ? ylo : H;
    for (std::size_t i = 0; i + 1 < xe.size(); ++i) {
      emit_wall({false, wall_y, xe[i], xe[i + 1]}, rng, false, obstacles, doors);
      rooms.push_back({xe[i], room_lo, xe[i + 1], room_hi});
    }
    for (double x : xs) emit_wall({true, x, room_lo, room_hi}, rng, uniform01(rng) < 0.5, obstacles, doors);
  }
  for (auto& o : obstacles) o = clip_to_bounds(o, b);
  std::vector<Polygon> furniture;
  add_furniture(rooms, doors, rng, obstacles, furniture, 1);
  return Environment(b, std::move(obstacles), opts.cell_size, opts.agent_radius);
}

Environment layout_clutter(Rng& rng, const GenOptions& opts) {
  const double W = uniform(rng, 10.0, 13.0);
  const double H = uniform(rng, 8.0, 11.0);
  const Bounds b{0.0, 0.0, W, H};
  std::vector<Polygon> obstacles;
  const int target = uniform_int(rng, 8, 16);
  for (int k = 0, tries = 0; k < target && tries < 400; ++tries) {
    const double size = uniform(rng, 0.3, 0.9);
    const Point2 c{uniform(rng, 0.6 + size, W - 0.6 - size), uniform(rng, 0.6 + size, H - 0.6 - size)};
    Polygon p;
    const double kind = uniform01(rng);
    if (kind < 0.5)
      p = rotated_box(c, uniform(rng, 0.4, 2.0 * size), uniform(rng, 0.4, 2.0 * size), uniform(rng, 0.0, kPi));
    else
      p = regular_polygon(c, size, uniform_int(rng, 3, 6), uniform(rng, 0.0, kTwoPi));
    bool ok = true;
    for (const auto& o : obstacles)
      if (polygon_distance(p, o) < kFurnitureGap) {
        ok = false;
        break;
      }
    if (!ok) continue;
    obstacles.push_back(std::move(p));
    ++k;
  }
  return Environment(b, std::move(obstacles), opts.cell_size, opts.agent_radius);
}

}  // namespace

int count_free_components(const Environment& env) {
  const Raster& ras = env.raster();
  std::vector<int> label(static_cast<std::size_t>(ras.size()), -1);
  int components = 0;
  std::deque<int> queue;
  for (int s = 0; s < ras.size(); ++s) {
    if (!ras.free(s) || label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = components;
    queue.push_back(s);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      const int ui = ras.ix(u);
      const int uj = ras.iy(u);
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const int vi = ui + di;
          const int vj = uj + dj;
          if (!ras.in_grid(vi, vj)) continue;
          const int v = ras.index(vi, vj);
          if (!ras.free(v) || label[static_cast<std::size_t>(v)] >= 0) continue;
          if (di != 0 && dj != 0 && (!ras.free(ras.index(ui + di, uj)) || !ras.free(ras.index(ui, uj + dj))))
            continue;
          label[static_cast<std::size_t>(v)] = components;
          queue.push_back(v);
        }
      }
    }
    ++components;
  }
  return components;
}

Environment generate_environment(std::uint64_t seed, Profile profile, const GenOptions& opts) {
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt), static_cast<std::uint64_t>(profile)));
    try {
      Environment env = [&] {
        switch (profile) {
          case Profile::Rooms: return layout_rooms(rng, opts);
          case Profile::Corridors: return layout_corridors(rng, opts);
          case Profile::Clutter: return layout_clutter(rng, opts);
        }
        return layout_rooms(rng, opts);
      }();
      if (count_free_components(env) == 1) return env;
    } catch (const Error&) {
      // Invalid layout; draw another.
    }
  }
  throw Error(ErrorCode::GenerationFailed,
              "no connected layout in " + std::to_string(opts.max_attempts) + " attempts");
}

}  // namespace waygraph
