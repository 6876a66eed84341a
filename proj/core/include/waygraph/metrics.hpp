#pragma once

#include <span>
#include <string>
#include <vector>

#include "waygraph/environment.hpp"
#include "waygraph/sim.hpp"

namespace waygraph {

struct EvalRecord {
  std::string id;
  double tl = 0.0;
  double ne = 0.0;
  double ne_euclidean = 0.0;
  bool success = false;
  bool oracle_success = false;
  double spl = 0.0;
  double ndtw = 0.0;
  double sdtw = 0.0;
  int decisions = 0;
  int actions = 0;
  int collisions = 0;
  double time_s = 0.0;  // modeled
  double wall_time_s = 0.0;
};

/// Monotone-alignment DTW with Euclidean point cost.
double dtw(std::span<const Point2> a, std::span<const Point2> b);

/// exp(-DTW / (|reference| * threshold)).
double ndtw(std::span<const Point2> path, std::span<const Point2> reference, double threshold = 3.0);

EvalRecord evaluate_trajectory(const Environment& env, const Trajectory& traj, const Episode& ep,
                               const SimConfig& cfg);

struct Summary {
  int episodes = 0;
  double tl = 0.0;
  double ne = 0.0;
  double sr = 0.0;   // percent
  double osr = 0.0;  // percent
  double spl = 0.0;
  double ndtw = 0.0;
  double sdtw = 0.0;
  double decisions = 0.0;
  double actions = 0.0;
  double collisions = 0.0;
  double time_s = 0.0;
  double wall_time_s = 0.0;
};

/// Field means; success rates as percentages. Throws EmptySet.
Summary aggregate(std::span<const EvalRecord> records);

}  // namespace waygraph
