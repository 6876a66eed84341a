#include "waygraph/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <queue>
#include <set>
#include <string>

#include "waygraph/error.hpp"
#include "waygraph/rng.hpp"
#include "waygraph/workclock.hpp"

namespace waygraph {

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::TurnLeft: return "turn_left";
    case ActionKind::TurnRight: return "turn_right";
    case ActionKind::Forward: return "forward";
    case ActionKind::Teleport: return "teleport";
    case ActionKind::Escape: return "escape";
    case ActionKind::Stop: return "stop";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Motion

namespace {

/// Largest t in [0, 1] (by bisection) with a free segment from a to a + t*d.
double free_fraction(const Environment& env, Point2 a, Point2 d) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (env.segment_free(a, a + d * mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

Point2 slide(const Environment& env, Point2 p, Point2 d) {
  const double t = free_fraction(env, p, d);
  const Point2 c = p + d * t;
  const Point2 rem = d * (1.0 - t);
  const Point2 away = c - env.nearest_surface_point(c);
  const double len = norm(away);
  if (len < 1e-12) return c;
  const Point2 n = away * (1.0 / len);
  const double into = dot(rem, n);
  const Point2 tangent = into < 0.0 ? rem - n * into : rem;
  if (norm(tangent) < 1e-12) return c;
  const double s = free_fraction(env, c, tangent);
  return c + tangent * s;
}

}  // namespace

StepResult step_low(const Environment& env, const Pose& pose, ActionKind action, const SimConfig& cfg) {
  switch (action) {
    case ActionKind::TurnLeft:
      return {Pose{pose.position, pose.heading + deg2rad(cfg.turn_angle_deg)}, false};
    case ActionKind::TurnRight:
      return {Pose{pose.position, pose.heading - deg2rad(cfg.turn_angle_deg)}, false};
    case ActionKind::Forward: {
      const Point2 d = unit(pose.heading) * cfg.forward_step;
      const Point2 target = pose.position + d;
      if (env.segment_free(pose.position, target)) return {Pose{target, pose.heading}, false};
      if (!cfg.allow_sliding) return {pose, true};
      return {Pose{slide(env, pose.position, d), pose.heading}, true};
    }
    default:
      return {pose, false};
  }
}

WalkResult decompose_and_walk(const Environment& env, const Pose& pose, const Waypoint& waypoint,
                              const SimConfig& cfg) {
  WalkResult out;
  out.pose = pose;
  const Point2 target = polar_to_world(pose, waypoint.angle, waypoint.distance);
  const double inc = deg2rad(cfg.decompose_turn_deg);
  const long turns = std::lround(signed_angle(waypoint.angle) / inc);
  for (long i = 0; i < std::labs(turns); ++i) {
    out.pose = Pose{out.pose.position, out.pose.heading + (turns > 0 ? inc : -inc)};
    out.poses.push_back(out.pose);
    out.actions.push_back({turns > 0 ? ActionKind::TurnLeft : ActionKind::TurnRight, false});
  }
  const int steps = static_cast<int>(std::ceil(waypoint.distance / cfg.forward_step - 1e-9));
  for (int i = 0; i < steps; ++i) {
    if (distance(out.pose.position, target) <= cfg.arrive_tolerance) break;
    const auto r = step_low(env, out.pose, ActionKind::Forward, cfg);
    const bool stuck = r.collided && r.pose.position == out.pose.position;
    out.pose = r.pose;
    out.poses.push_back(out.pose);
    out.actions.push_back({ActionKind::Forward, r.collided});
    if (stuck && !cfg.allow_sliding) break;
  }
  return out;
}

Pose teleport(const Environment& env, const Pose& pose, const Waypoint& waypoint) {
  const Point2 target = polar_to_world(pose, waypoint.angle, waypoint.distance);
  if (!env.is_free(target)) throw Error(ErrorCode::TeleportBlocked, "teleport target is not free");
  const double h = distance(pose.position, target) > 0.0 ? bearing(pose.position, target) : pose.heading;
  return Pose{target, h};
}

// ---------------------------------------------------------------------------
// Oracle rules

namespace {

int argmin_index(std::span<const double> costs) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(costs.size()); ++i) {
    if (!std::isfinite(costs[static_cast<std::size_t>(i)])) continue;
    if (best < 0 || costs[static_cast<std::size_t>(i)] < costs[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

std::vector<Point2> world_points(const Pose& pose, std::span<const Waypoint> w) {
  std::vector<Point2> out;
  out.reserve(w.size());
  for (const auto& x : w) out.push_back(polar_to_world(pose, x.angle, x.distance));
  return out;
}

PolicyDecision oracle_r2r_points(const Pose& pose, std::span<const Point2> pts, const GeodesicField& goal_field,
                                 const SimConfig& cfg) {
  if (goal_field.distance_to(pose.position) < cfg.oracle_stop_dist) return PolicyDecision::stop();
  if (pts.empty()) throw Error(ErrorCode::NoWaypoint, "no candidate waypoints");
  std::vector<double> costs;
  for (const auto& p : pts) costs.push_back(goal_field.distance_to(p));
  const int best = argmin_index(costs);
  return PolicyDecision::high(best < 0 ? 0 : best);
}

PolicyDecision oracle_rxr_points(const Environment& env, const Pose& pose, std::span<const Point2> pts,
                                 std::span<const Point2> gt_path, const GeodesicField& goal_field, RxrState& state,
                                 const SimConfig& cfg) {
  if (gt_path.empty()) throw Error(ErrorCode::InvalidInput, "empty ground-truth path");
  if (auto sg = ring_sub_goal(gt_path, pose.position))
    state.sub_goal = *sg;
  else if (!state.sub_goal)
    state.sub_goal = gt_path.front();
  if (goal_field.distance_to(pose.position) < cfg.oracle_stop_dist) return PolicyDecision::stop();
  if (pts.empty()) throw Error(ErrorCode::NoWaypoint, "no candidate waypoints");
  const GeodesicField from_agent(env, pose.position, pts);
  std::vector<double> costs;
  if (env.is_free(*state.sub_goal)) {
    const GeodesicField from_sub(env, *state.sub_goal, pts);
    for (const auto& p : pts) costs.push_back(from_agent.distance_to(p) + from_sub.distance_to(p));
  } else {
    for (const auto& p : pts) costs.push_back(from_agent.distance_to(p) + distance(p, *state.sub_goal));
  }
  const int best = argmin_index(costs);
  return PolicyDecision::high(best < 0 ? 0 : best);
}

}  // namespace

PolicyDecision oracle_action_r2r(const Environment& /*env*/, const Pose& pose, std::span<const Waypoint> waypoints,
                                 const GeodesicField& goal_field, const SimConfig& cfg) {
  const auto pts = world_points(pose, waypoints);
  return oracle_r2r_points(pose, pts, goal_field, cfg);
}

std::optional<Point2> ring_sub_goal(std::span<const Point2> gt_path, Point2 p, double radius) {
  std::optional<Point2> best;
  double best_arc = -1.0;
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < gt_path.size(); ++i) {
    const Point2 a = gt_path[i];
    const Point2 d = gt_path[i + 1] - a;
    const double len = norm(d);
    if (len > 0.0) {
      // |a + t d - p|^2 = r^2
      const Point2 f = a - p;
      const double A = dot(d, d);
      const double B = 2.0 * dot(f, d);
      const double C = dot(f, f) - radius * radius;
      const double disc = B * B - 4.0 * A * C;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
          if (t < 0.0 || t > 1.0) continue;
          const double s = arc + t * len;
          if (s > best_arc) {
            best_arc = s;
            best = a + d * t;
          }
        }
      }
    }
    arc += len;
  }
  return best;
}

PolicyDecision oracle_action_rxr(const Environment& env, const Pose& pose, std::span<const Waypoint> waypoints,
                                 std::span<const Point2> gt_path, const GeodesicField& goal_field, RxrState& state,
                                 const SimConfig& cfg) {
  const auto pts = world_points(pose, waypoints);
  return oracle_rxr_points(env, pose, pts, gt_path, goal_field, state, cfg);
}

// ---------------------------------------------------------------------------
// Names

std::string Regime::name() const {
  switch (kind) {
    case RegimeKind::HighTeleport: return "high_teleport";
    case RegimeKind::HighDecompose: return "high_decompose";
    case RegimeKind::LowOnly: return "low_only";
    case RegimeKind::GraphStep: return "graph_step";
    case RegimeKind::AlignedTeleport: return "aligned_teleport";
    case RegimeKind::FixedDist: {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%s:%g", select ? "fixed_dist" : "fixed_dist_noselect", dist);
      return buf;
    }
  }
  return "?";
}

Regime parse_regime(std::string_view text) {
  if (text == "high_teleport") return {RegimeKind::HighTeleport};
  if (text == "high_decompose") return {RegimeKind::HighDecompose};
  if (text == "low_only") return {RegimeKind::LowOnly};
  if (text == "graph_step") return {RegimeKind::GraphStep};
  if (text == "aligned_teleport") return {RegimeKind::AlignedTeleport};
  for (const auto& [prefix, sel] : {std::pair{std::string_view("fixed_dist:"), true},
                                    std::pair{std::string_view("fixed_dist_noselect:"), false}}) {
    if (text.starts_with(prefix)) {
      const std::string num(text.substr(prefix.size()));
      char* end = nullptr;
      const double d = std::strtod(num.c_str(), &end);
      if (end == num.c_str() || *end != '\0' || !(d > 0.0))
        throw Error(ErrorCode::InvalidInput, "bad fixed distance in regime '" + std::string(text) + "'");
      return {RegimeKind::FixedDist, d, sel};
    }
  }
  throw Error(ErrorCode::InvalidInput, "unknown regime '" + std::string(text) + "'");
}

PolicyKind parse_policy(std::string_view text) {
  if (text == "oracle") return PolicyKind::Oracle;
  if (text == "oracle_rxr") return PolicyKind::OracleRxr;
  if (text == "greedy" || text == "greedy-geodesic") return PolicyKind::Greedy;
  if (text == "random") return PolicyKind::Random;
  throw Error(ErrorCode::InvalidInput, "unknown policy '" + std::string(text) + "'");
}

std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::Oracle: return "oracle";
    case PolicyKind::OracleRxr: return "oracle_rxr";
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::Random: return "random";
  }
  return "?";
}

PredictorKind parse_predictor(std::string_view text) {
  if (text == "graph" || text == "oracle") return PredictorKind::Graph;
  if (text == "geometric") return PredictorKind::Geometric;
  if (text == "trained") return PredictorKind::Trained;
  throw Error(ErrorCode::InvalidInput, "unknown predictor '" + std::string(text) + "'");
}

std::string_view to_string(PredictorKind p) {
  switch (p) {
    case PredictorKind::Graph: return "graph";
    case PredictorKind::Geometric: return "geometric";
    case PredictorKind::Trained: return "trained";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Candidates

namespace {

/// Graph node standing in for the agent's location: the closest node visible
/// along a free segment, else the closest node.
NodeId anchor_node(const Environment& env, const NavGraph& g, Point2 p) {
  NodeId best = -1, best_vis = -1;
  double bd = kInf, bdv = kInf;
  for (const auto& [id, q] : g.nodes) {
    const double d = distance(p, q);
    if (d < bd) {
      bd = d;
      best = id;
    }
    if (d < bdv && env.segment_free(p, q)) {
      bdv = d;
      best_vis = id;
    }
  }
  if (best < 0) throw Error(ErrorCode::InsufficientGraph, "empty graph");
  return best_vis >= 0 ? best_vis : best;
}

/// Exact graph directions around p: the anchor's neighbours plus every node
/// visible within the heatmap range, excluding points under half a ring step.
std::vector<Point2> graph_points(const Environment& env, const NavGraph& g, Point2 p) {
  const NodeId n = anchor_node(env, g, p);
  std::set<NodeId> ids;
  for (NodeId nb : g.neighbors(n)) ids.insert(nb);
  for (const auto& [id, q] : g.nodes) {
    const double d = distance(p, q);
    if (d < kMaxRing + 0.5 * kDistStep && env.segment_free(p, q)) ids.insert(id);
  }
  std::vector<Point2> out;
  for (NodeId id : ids)
    if (distance(p, g.at(id)) >= 0.5 * kDistStep) out.push_back(g.at(id));
  return out;
}

}  // namespace

WaypointSet predict_waypoints(const EpisodeContext& ctx, PredictorKind kind, const Pose& pose, PolarGrid* grid) {
  PolarGrid g;
  switch (kind) {
    case PredictorKind::Graph: {
      if (!ctx.graph) throw Error(ErrorCode::InvalidInput, "graph predictor needs a graph");
      WaypointSet w;
      for (const auto& q : graph_points(*ctx.env, *ctx.graph, pose.position)) {
        const double d = distance(pose.position, q);
        if (d < 0.5 * kDistStep) continue;
        w.push_back({normalize_angle(bearing(pose.position, q) - pose.heading), std::min(d, kMaxRing)});
      }
      g = make_target(w);
      break;
    }
    case PredictorKind::Geometric:
      g = geometric_predict(take_scan(*ctx.env, pose), ctx.env->agent_radius());
      break;
    case PredictorKind::Trained:
      if (!ctx.model) throw Error(ErrorCode::InvalidInput, "trained predictor needs a model");
      g = ctx.model->predict(take_scan(*ctx.env, pose));
      break;
  }
  if (grid) *grid = g;
  return nms(g);
}

// ---------------------------------------------------------------------------
// Episode loop

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

struct Option {
  PolicyDecision decision;
  Point2 probe;
  Waypoint waypoint;  // relative to the current pose
};

struct Runner {
  const EpisodeContext& ctx;
  const Episode& ep;
  const RunOptions& opt;
  const SimConfig& cfg;
  const Environment& env;
  GeodesicField goal_field;
  Rng rng;
  RxrState rxr;
  Trajectory traj;
  Pose pose;
  int stuck = 0;

  Runner(const EpisodeContext& c, const Episode& e, const RunOptions& o, const SimConfig& s)
      : ctx(c), ep(e), opt(o), cfg(s), env(*c.env), goal_field(*c.env, e.goal),
        rng(mix_seed(o.seed, fnv1a(e.id), 0x65706973ULL)), pose(e.start) {}

  double geo(Point2 p) const { return goal_field.distance_to(p); }

  void record(const Pose& p, ActionRecord a) {
    pose = p;
    traj.poses.push_back(p);
    traj.actions.push_back(a);
    if (a.collided) ++traj.collisions;
  }

  bool budget_left() const {
    if (opt.regime.high_level()) return traj.decisions < cfg.max_steps_high;
    return static_cast<int>(traj.actions.size()) < cfg.max_steps_low;
  }

  Point2 ahead(const Pose& p, double d) const { return p.position + unit(p.heading) * d; }

  std::optional<Point2> aligned_node(const Pose& p, std::span<const Point2> pts) const {
    std::optional<Point2> best;
    double off_best = kInf;
    for (const auto& q : pts) {
      const double off = std::fabs(signed_angle(bearing(p.position, q) - p.heading));
      if (off <= deg2rad(cfg.align_tolerance_deg) + 1e-9 && off < off_best) {
        off_best = off;
        best = q;
      }
    }
    return best;
  }

  /// Options of the current state. `grid` receives the predictor output in
  /// high-level regimes.
  std::vector<Option> options(PolarGrid& grid) {
    std::vector<Option> out;
    const Regime& r = opt.regime;
    auto rel = [&](Point2 q) {
      return Waypoint{normalize_angle(bearing(pose.position, q) - pose.heading), distance(pose.position, q)};
    };
    switch (r.kind) {
      case RegimeKind::HighTeleport:
      case RegimeKind::HighDecompose: {
        const auto w = predict_waypoints(ctx, opt.predictor, pose, &grid);
        for (int i = 0; i < static_cast<int>(w.size()); ++i)
          out.push_back({PolicyDecision::high(i), polar_to_world(pose, w[static_cast<std::size_t>(i)].angle,
                                                                 w[static_cast<std::size_t>(i)].distance),
                         w[static_cast<std::size_t>(i)]});
        break;
      }
      case RegimeKind::GraphStep: {
        const auto pts = graph_points(env, *ctx.graph, pose.position);
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
          Waypoint w = rel(pts[static_cast<std::size_t>(i)]);
          w.distance = std::min(w.distance, cfg.forward_step);
          out.push_back({PolicyDecision::high(i), polar_to_world(pose, w.angle, w.distance), w});
        }
        break;
      }
      case RegimeKind::FixedDist:
        if (r.select) {
          for (int i = 0; i < kAngleBins; ++i) {
            const Waypoint w{deg2rad(kAngleBinDeg * i), r.dist};
            out.push_back({PolicyDecision::high(i), polar_to_world(pose, w.angle, w.distance), w});
          }
        } else {
          low_options(out, r.dist, [&](const Pose& p) -> std::optional<Point2> { return ahead(p, r.dist); },
                      cfg.turn_angle_deg);
        }
        break;
      case RegimeKind::LowOnly:
        low_options(out, cfg.forward_step,
                    [&](const Pose& p) -> std::optional<Point2> { return ahead(p, cfg.forward_step); },
                    cfg.turn_angle_deg);
        break;
      case RegimeKind::AlignedTeleport: {
        const auto pts = graph_points(env, *ctx.graph, pose.position);
        low_options(out, 0.0, [&](const Pose& p) { return aligned_node(p, pts); }, cfg.aligned_turn_deg);
        break;
      }
    }
    return out;
  }

  /// Turn / forward options. A turn's probe is what the forward move would
  /// reach right after that turn.
  template <class Ahead>
  void low_options(std::vector<Option>& out, double /*dist*/, Ahead&& fwd, double turn_deg) {
    if (auto q = fwd(pose)) out.push_back({PolicyDecision::low(ActionKind::Forward), *q, {}});
    const int looks = std::max(1, cfg.turn_lookahead);
    for (auto [kind, sign] : {std::pair{ActionKind::TurnLeft, 1.0}, std::pair{ActionKind::TurnRight, -1.0}}) {
      Point2 probe = pose.position;
      double best = kInf;
      for (int k = 1; k <= looks; ++k) {
        const Pose turned{pose.position, pose.heading + sign * k * deg2rad(turn_deg)};
        const auto q = fwd(turned);
        if (q && geo(*q) < best) {
          best = geo(*q);
          probe = *q;
        }
      }
      out.push_back({PolicyDecision::low(kind), probe, {}});
    }
  }

  PolicyDecision decide(const std::vector<Option>& opts) {
    switch (opt.policy) {
      case PolicyKind::Oracle: {
        if (geo(pose.position) < cfg.oracle_stop_dist) return PolicyDecision::stop();
        if (opts.empty()) throw Error(ErrorCode::NoWaypoint, "no options at " + ep.id);
        std::vector<double> c;
        for (const auto& o : opts) c.push_back(geo(o.probe));
        const int i = argmin_index(c);
        return opts[static_cast<std::size_t>(i < 0 ? 0 : i)].decision;
      }
      case PolicyKind::OracleRxr: {
        std::vector<Point2> pts;
        for (const auto& o : opts) pts.push_back(o.probe);
        const auto d = oracle_rxr_points(env, pose, pts, ep.gt_path, goal_field, rxr, cfg);
        if (d.kind == PolicyDecision::Kind::Stop) return d;
        return opts[static_cast<std::size_t>(d.index)].decision;
      }
      case PolicyKind::Greedy: {
        const double here = geo(pose.position);
        std::vector<double> c;
        for (const auto& o : opts) c.push_back(geo(o.probe));
        const int i = argmin_index(c);
        if (i < 0 || !(c[static_cast<std::size_t>(i)] < here - 1e-9)) return PolicyDecision::stop();
        return opts[static_cast<std::size_t>(i)].decision;
      }
      case PolicyKind::Random: {
        const int i = uniform_int(rng, 0, static_cast<int>(opts.size()));
        if (i == static_cast<int>(opts.size())) return PolicyDecision::stop();
        return opts[static_cast<std::size_t>(i)].decision;
      }
    }
    return PolicyDecision::stop();
  }

  const Option& chosen(const std::vector<Option>& opts, const PolicyDecision& d) const {
    for (const auto& o : opts)
      if (o.decision == d) return o;
    throw Error(ErrorCode::InvalidInput, "decision outside the option set");
  }

  void walk(const Waypoint& w) {
    const auto r = decompose_and_walk(env, pose, w, cfg);
    for (std::size_t i = 0; i < r.actions.size(); ++i) record(r.poses[i], r.actions[i]);
  }

  void apply(const std::vector<Option>& opts, const PolicyDecision& d, const PolarGrid& grid) {
    const Regime& r = opt.regime;
    const Option& o = chosen(opts, d);
    switch (r.kind) {
      case RegimeKind::HighTeleport:
      case RegimeKind::HighDecompose: {
        Waypoint w = o.waypoint;
        if (opt.augment && cfg.allow_sliding) {
          try {
            w = sample_patch(grid, w.angle, rng());
          } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyPatch) throw;
          }
        }
        if (r.kind == RegimeKind::HighDecompose) {
          walk(w);
        } else {
          do_teleport(polar_to_world(pose, w.angle, w.distance));
        }
        break;
      }
      case RegimeKind::GraphStep:
        walk(o.waypoint);
        break;
      case RegimeKind::FixedDist:
        if (r.select) {
          walk(o.waypoint);
        } else if (d.action == ActionKind::Forward) {
          const int steps = static_cast<int>(std::ceil(r.dist / cfg.forward_step - 1e-9));
          for (int i = 0; i < steps; ++i) {
            const auto s = step_low(env, pose, ActionKind::Forward, cfg);
            const bool blocked = s.collided && s.pose.position == pose.position;
            record(s.pose, {ActionKind::Forward, s.collided});
            if (blocked && !cfg.allow_sliding) break;
          }
        } else {
          turn(d.action, cfg.turn_angle_deg);
        }
        break;
      case RegimeKind::LowOnly:
        if (d.action == ActionKind::Forward) {
          const auto s = step_low(env, pose, ActionKind::Forward, cfg);
          record(s.pose, {ActionKind::Forward, s.collided});
        } else {
          turn(d.action, cfg.turn_angle_deg);
        }
        break;
      case RegimeKind::AlignedTeleport:
        if (d.action == ActionKind::Forward)
          do_teleport(o.probe);
        else
          turn(d.action, cfg.aligned_turn_deg);
        break;
    }
  }

  void turn(ActionKind a, double deg) {
    const double s = a == ActionKind::TurnLeft ? 1.0 : -1.0;
    record(Pose{pose.position, pose.heading + s * deg2rad(deg)}, {a, false});
  }

  /// Teleport; a blocked target snaps to the nearest free raster point within
  /// one ring step, otherwise the move is a collision in place.
  void do_teleport(Point2 target) {
    Point2 dest = target;
    if (!env.is_free(dest)) {
      const auto snapped = env.nearest_free_point(target);
      if (!snapped || distance(*snapped, target) > kDistStep) {
        record(pose, {ActionKind::Teleport, true});
        return;
      }
      dest = *snapped;
    }
    const double h = distance(pose.position, dest) > 0.0 ? bearing(pose.position, dest) : pose.heading;
    record(Pose{dest, h}, {ActionKind::Teleport, dest != target});
  }

  /// Probe the 120 directions, nearest to the heading first, and take the
  /// first free forward step.
  void escape() {
    for (int k = 0; k < kAngleBins; ++k) {
      const int off = (k + 1) / 2 * (k % 2 == 1 ? 1 : -1);
      const double h = pose.heading + deg2rad(kAngleBinDeg * off);
      const Point2 q = pose.position + unit(h) * cfg.forward_step;
      if (env.segment_free(pose.position, q)) {
        record(Pose{q, h}, {ActionKind::Escape, false});
        return;
      }
    }
  }

  void run() {
    traj.poses.push_back(pose);
    while (true) {
      if (!budget_left()) {
        traj.timed_out = true;
        break;
      }
      PolarGrid grid;
      const auto opts = options(grid);
      ++traj.decisions;
      if (opts.empty() && opt.policy != PolicyKind::Oracle && opt.policy != PolicyKind::OracleRxr) {
        record(pose, {ActionKind::Stop, false});
        break;
      }
      PolicyDecision d;
      try {
        d = decide(opts);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoWaypoint) throw;
        d = PolicyDecision::stop();
      }
      if (d.kind == PolicyDecision::Kind::Stop) {
        record(pose, {ActionKind::Stop, false});
        break;
      }
      const Pose before = pose;
      apply(opts, d, grid);
      stuck = pose == before ? stuck + 1 : 0;
      if (!cfg.allow_sliding && stuck >= cfg.deadlock_decisions) {
        escape();
        stuck = 0;
      }
    }
  }
};

}  // namespace

Trajectory run_episode(const EpisodeContext& ctx, const Episode& ep, const RunOptions& opt, const SimConfig& cfg) {
  if (!ctx.env) throw Error(ErrorCode::InvalidInput, "episode context without environment");
  const bool needs_graph = opt.regime.kind == RegimeKind::GraphStep ||
                           opt.regime.kind == RegimeKind::AlignedTeleport ||
                           (opt.regime.high_level() && opt.predictor == PredictorKind::Graph);
  if (needs_graph && !ctx.graph) throw Error(ErrorCode::InvalidInput, "regime needs a graph");
  const auto t0 = std::chrono::steady_clock::now();
  const WorkCounts w0 = work_counts();
  Runner r(ctx, ep, opt, cfg);
  r.run();
  r.traj.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.traj.work_time = modeled_seconds(work_counts() - w0);
  return std::move(r.traj);
}

// ---------------------------------------------------------------------------
// Episodes

std::vector<Episode> generate_episodes(const Environment& env, const NavGraph& g, int count, std::uint64_t seed,
                                       int min_hops, int max_hops) {
  if (min_hops < 1 || max_hops < min_hops) throw Error(ErrorCode::InvalidInput, "bad hop range");
  std::vector<NodeId> ids;
  for (const auto& [id, p] : g.nodes) ids.push_back(id);
  if (ids.size() < 2) throw Error(ErrorCode::InsufficientGraph, "graph has fewer than two nodes");
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& [a, b] : g.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }

  // Shortest (by length) paths from a start node; predecessor map.
  auto dijkstra = [&](NodeId s) {
    std::map<NodeId, double> dist;
    std::map<NodeId, NodeId> prev;
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[s] = 0.0;
    pq.push({0.0, s});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (NodeId v : adj[u]) {
        const double nd = d + distance(g.at(u), g.at(v));
        const auto it = dist.find(v);
        if (it == dist.end() || nd < it->second - 1e-12) {
          dist[v] = nd;
          prev[v] = u;
          pq.push({nd, v});
        }
      }
    }
    return prev;
  };

  std::vector<Episode> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i), 0x6570ULL));
    bool done = false;
    for (int attempt = 0; attempt < 200 && !done; ++attempt) {
      const NodeId s = ids[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(ids.size()) - 1))];
      const auto prev = dijkstra(s);
      std::vector<std::vector<NodeId>> paths;
      for (NodeId t : ids) {
        if (t == s || !prev.contains(t)) continue;
        std::vector<NodeId> path{t};
        while (path.back() != s) path.push_back(prev.at(path.back()));
        const int hops = static_cast<int>(path.size()) - 1;
        if (hops < min_hops || hops > max_hops) continue;
        std::reverse(path.begin(), path.end());
        paths.push_back(std::move(path));
      }
      if (paths.empty()) continue;
      const auto& path = paths[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(paths.size()) - 1))];
      std::vector<Point2> pts;
      for (NodeId n : path) pts.push_back(g.at(n));
      Episode ep;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s/%04d", g.env_id.c_str(), i);
      ep.id = buf;
      ep.env_id = g.env_id;
      ep.start = Pose{pts[0], bearing(pts[0], pts[1])};
      ep.goal = pts.back();
      ep.gt_path = resample_polyline(pts, 0.25);
      ep.hops = static_cast<int>(path.size()) - 1;
      if (!env.is_free(ep.start.position) || !env.is_free(ep.goal)) continue;
      out.push_back(std::move(ep));
      done = true;
    }
    if (!done) throw Error(ErrorCode::InsufficientGraph, "no node pair " + std::to_string(min_hops) + ".." +
                                                             std::to_string(max_hops) + " hops apart");
  }
  return out;
}

}  // namespace waygraph
