#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "waygraph/environment.hpp"
#include "waygraph/heatmap.hpp"
#include "waygraph/navgraph.hpp"
#include "waygraph/predictor.hpp"

namespace waygraph {

struct SimConfig {
  double forward_step = 0.25;
  double turn_angle_deg = 15.0;       // low-level agents
  double decompose_turn_deg = 3.0;    // waypoint decomposition
  double aligned_turn_deg = 30.0;     // teleport-without-select agents (one camera view)
  double align_tolerance_deg = 15.0;  // half a view
  bool allow_sliding = true;
  double success_dist = 3.0;
  double oracle_stop_dist = 1.5;
  int max_steps_low = 500;
  int max_steps_high = 50;
  int deadlock_decisions = 3;
  double arrive_tolerance = 0.125;
  int turn_lookahead = 1;  // turns looked through when probing a turn option
};

enum class ActionKind { TurnLeft, TurnRight, Forward, Teleport, Escape, Stop };
std::string_view to_string(ActionKind k);

struct ActionRecord {
  ActionKind kind = ActionKind::Stop;
  bool collided = false;
  friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

struct Episode {
  std::string id;
  std::string env_id;
  Pose start;
  Point2 goal;
  std::vector<Point2> gt_path;
  int hops = 0;
};

struct Trajectory {
  std::vector<Pose> poses;
  std::vector<ActionRecord> actions;
  int collisions = 0;
  int decisions = 0;
  double wall_time = 0.0;
  double work_time = 0.0;  // modeled_seconds of the work done, reproducible
  bool timed_out = false;
};

struct PolicyDecision {
  enum class Kind { Stop, LowLevel, HighLevel };
  Kind kind = Kind::Stop;
  ActionKind action = ActionKind::Stop;  // LowLevel
  int index = -1;                        // HighLevel

  static PolicyDecision stop() { return {}; }
  static PolicyDecision low(ActionKind a) { return {Kind::LowLevel, a, -1}; }
  static PolicyDecision high(int i) { return {Kind::HighLevel, ActionKind::Stop, i}; }
  friend bool operator==(const PolicyDecision&, const PolicyDecision&) = default;
};

struct StepResult {
  Pose pose;
  bool collided = false;
};

StepResult step_low(const Environment& env, const Pose& pose, ActionKind action, const SimConfig& cfg);

struct WalkResult {
  Pose pose;
  std::vector<Pose> poses;  // one per action
  std::vector<ActionRecord> actions;
};

/// Turns in decompose_turn_deg increments toward the waypoint bearing, then
/// walks ceil(distance / forward_step) forward steps, stopping early on
/// arrival or on a blocked no-sliding step.
WalkResult decompose_and_walk(const Environment& env, const Pose& pose, const Waypoint& waypoint,
                              const SimConfig& cfg);

/// Throws TeleportBlocked when the waypoint is not free.
Pose teleport(const Environment& env, const Pose& pose, const Waypoint& waypoint);

/// Stop inside oracle_stop_dist, else the waypoint geodesically closest to the
/// goal (lowest index on ties). Throws NoWaypoint on an empty set.
PolicyDecision oracle_action_r2r(const Environment& env, const Pose& pose, std::span<const Waypoint> waypoints,
                                 const GeodesicField& goal_field, const SimConfig& cfg);

struct RxrState {
  std::optional<Point2> sub_goal;
};

/// Point on gt_path where the circle of `radius` around p meets it farthest
/// along the path, if any.
std::optional<Point2> ring_sub_goal(std::span<const Point2> gt_path, Point2 p, double radius = 3.0);

PolicyDecision oracle_action_rxr(const Environment& env, const Pose& pose, std::span<const Waypoint> waypoints,
                                 std::span<const Point2> gt_path, const GeodesicField& goal_field, RxrState& state,
                                 const SimConfig& cfg);

enum class RegimeKind {
  HighTeleport,     // select a predicted waypoint, teleport
  HighDecompose,    // select a predicted waypoint, walk to it
  LowOnly,          // turn / forward 0.25 / stop
  FixedDist,        // select: 120 directions x forward D; no select: turn / forward D / stop
  GraphStep,        // select a graph direction, walk one forward step
  AlignedTeleport,  // turn / teleport along an aligned graph edge / stop
};

struct Regime {
  RegimeKind kind = RegimeKind::HighTeleport;
  double dist = 0.25;  // FixedDist
  bool select = true;  // FixedDist

  bool high_level() const { return kind == RegimeKind::HighTeleport || kind == RegimeKind::HighDecompose; }
  bool teleports() const { return kind == RegimeKind::HighTeleport || kind == RegimeKind::AlignedTeleport; }
  std::string name() const;
};

/// Accepts high_teleport, high_decompose, low_only, graph_step,
/// aligned_teleport, fixed_dist:<D> and fixed_dist_noselect:<D>.
Regime parse_regime(std::string_view text);

enum class PolicyKind { Oracle, OracleRxr, Greedy, Random };
PolicyKind parse_policy(std::string_view text);
std::string_view to_string(PolicyKind p);

enum class PredictorKind { Graph, Geometric, Trained };
PredictorKind parse_predictor(std::string_view text);
std::string_view to_string(PredictorKind p);

/// Shared, read-only inputs of an episode run.
struct EpisodeContext {
  const Environment* env = nullptr;
  const NavGraph* graph = nullptr;
  const RegressorModel* model = nullptr;
};

struct RunOptions {
  PolicyKind policy = PolicyKind::Greedy;
  PredictorKind predictor = PredictorKind::Graph;
  Regime regime;
  bool augment = false;
  std::uint64_t seed = 0;
};

/// Candidate waypoints around `pose` for the chosen predictor; the grid they
/// were extracted from is returned through `grid` when non-null.
WaypointSet predict_waypoints(const EpisodeContext& ctx, PredictorKind kind, const Pose& pose,
                              PolarGrid* grid = nullptr);

Trajectory run_episode(const EpisodeContext& ctx, const Episode& ep, const RunOptions& opt, const SimConfig& cfg);

/// Random shortest graph paths of min_hops..max_hops edges, densified to
/// forward_step spacing. Throws InsufficientGraph when no pair qualifies.
std::vector<Episode> generate_episodes(const Environment& env, const NavGraph& g, int count, std::uint64_t seed,
                                       int min_hops = 4, int max_hops = 7);

}  // namespace waygraph
