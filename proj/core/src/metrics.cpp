#include "waygraph/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "waygraph/error.hpp"

namespace waygraph {

double dtw(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "dtw of an empty polyline");
  const std::size_t m = b.size();
  std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = kInf;
    for (std::size_t j = 1; j <= m; ++j)
      cur[j] = distance(a[i - 1], b[j - 1]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    std::swap(prev, cur);
  }
  return prev[m];
}

double ndtw(std::span<const Point2> path, std::span<const Point2> reference, double threshold) {
  return std::exp(-dtw(path, reference) / (static_cast<double>(reference.size()) * threshold));
}

EvalRecord evaluate_trajectory(const Environment& env, const Trajectory& traj, const Episode& ep,
                               const SimConfig& cfg) {
  if (traj.poses.empty()) throw Error(ErrorCode::InvalidInput, "empty trajectory");
  EvalRecord r;
  r.id = ep.id;
  std::vector<Point2> pts;
  pts.reserve(traj.poses.size());
  for (const auto& p : traj.poses) pts.push_back(p.position);
  r.tl = polyline_length(pts);

  const GeodesicField goal(env, ep.goal);
  r.ne = goal.distance_to(pts.back());
  r.ne_euclidean = distance(pts.back(), ep.goal);
  r.success = r.ne < cfg.success_dist;
  double best = kInf;
  for (const auto& p : pts) best = std::min(best, goal.distance_to(p));
  r.oracle_success = best < cfg.success_dist;

  const double L = goal.distance_to(ep.start.position);
  r.spl = r.success ? L / std::max(L, r.tl) : 0.0;
  r.ndtw = ep.gt_path.empty() ? 0.0 : ndtw(pts, ep.gt_path, cfg.success_dist);
  r.sdtw = r.success ? r.ndtw : 0.0;

  r.decisions = traj.decisions;
  r.actions = static_cast<int>(traj.actions.size());
  r.collisions = traj.collisions;
  r.time_s = traj.work_time;
  r.wall_time_s = traj.wall_time;
  return r;
}

Summary aggregate(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptySet, "no records to aggregate");
  Summary s;
  s.episodes = static_cast<int>(records.size());
  for (const auto& r : records) {
    s.tl += r.tl;
    s.ne += r.ne;
    s.sr += r.success ? 100.0 : 0.0;
    s.osr += r.oracle_success ? 100.0 : 0.0;
    s.spl += r.spl;
    s.ndtw += r.ndtw;
    s.sdtw += r.sdtw;
    s.decisions += r.decisions;
    s.actions += r.actions;
    s.collisions += r.collisions;
    s.time_s += r.time_s;
    s.wall_time_s += r.wall_time_s;
  }
  const double n = s.episodes;
  for (double* f : {&s.tl, &s.ne, &s.sr, &s.osr, &s.spl, &s.ndtw, &s.sdtw, &s.decisions, &s.actions,
                    &s.collisions, &s.time_s, &s.wall_time_s})
    *f /= n;
  return s;
}

}  // namespace waygraph
