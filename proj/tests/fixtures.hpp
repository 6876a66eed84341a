#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "waygraph/environment.hpp"
#include "waygraph/geometry.hpp"

namespace fixtures {

using namespace waygraph;

inline Environment empty_env(double w = 10.0, double h = 10.0) { return Environment({0, 0, w, h}, {}); }

inline Environment env_with(std::vector<Polygon> obstacles, double w = 10.0, double h = 10.0) {
  return Environment({0, 0, w, h}, std::move(obstacles));
}

/// Exact distance from p to an axis-aligned box (0 inside).
inline double box_distance(Point2 p, double x0, double y0, double x1, double y1) {
  const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
  const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
  return std::hypot(dx, dy);
}

/// Plain Bellman-Ford sweeps over the raster with the 8-move, no-corner-cut rule.
inline std::vector<double> raster_distances(const Raster& r, int source) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(static_cast<std::size_t>(r.size()), inf);
  d[static_cast<std::size_t>(source)] = 0.0;
  const double c = r.cell_size();
  for (bool changed = true; changed;) {
    changed = false;
    for (int u = 0; u < r.size(); ++u) {
      if (!r.free(u) || !std::isfinite(d[static_cast<std::size_t>(u)])) continue;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          const int x = r.ix(u) + dx, y = r.iy(u) + dy;
          if (!r.in_grid(x, y) || !r.free(r.index(x, y))) continue;
          if (dx != 0 && dy != 0 && (!r.free(r.index(r.ix(u) + dx, r.iy(u))) || !r.free(r.index(r.ix(u), r.iy(u) + dy))))
            continue;
          const double nd = d[static_cast<std::size_t>(u)] + (dx != 0 && dy != 0 ? c * std::sqrt(2.0) : c);
          if (nd < d[static_cast<std::size_t>(r.index(x, y))] - 1e-12) {
            d[static_cast<std::size_t>(r.index(x, y))] = nd;
            changed = true;
          }
        }
    }
  }
  return d;
}

}  // namespace fixtures
