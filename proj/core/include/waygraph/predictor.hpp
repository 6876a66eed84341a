#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "waygraph/environment.hpp"
#include "waygraph/heatmap.hpp"
#include "waygraph/navgraph.hpp"

namespace waygraph {

inline constexpr double kScanRange = 3.25;

/// One ray per angle bin (through the bin center), capped at kScanRange.
using RangeScan = std::array<double, kAngleBins>;

RangeScan take_scan(const Environment& env, const Pose& pose);

/// Graph-adjacent nodes as polar waypoints around `pose`; neighbours beyond the
/// last ring are pulled onto it along their bearing.
WaypointSet neighbor_waypoints(const NavGraph& g, NodeId node_id, const Pose& pose);

/// Target grid over the node's graph neighbours, heading 0.
PolarGrid oracle_predict(const NavGraph& g, NodeId node_id, const GaussianSpec& spec = {});
/// Same, for an arbitrary pose sitting on node_id.
PolarGrid oracle_predict(const NavGraph& g, NodeId node_id, const Pose& pose, const GaussianSpec& spec = {});

struct GeometricConfig {
  double margin = 0.05;
  int reach_window = 3;
  int open_window = 5;
};

PolarGrid geometric_predict(const RangeScan& scan, double agent_radius, const GeometricConfig& cfg = {});

// ---------------------------------------------------------------------------
// Windowed regressor

inline constexpr int kSectorRays = 10;
inline constexpr int kSectorFeatures = 16;

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-6;
  int batch_size = 64;
  int epochs = 60;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Two-layer perceptron shared across all 120 angle shifts. Input: features of
/// the own 30 degree sector and `window_radius` sectors on each side; output:
/// the 12 ring scores of the center angle bin.
class RegressorModel {
 public:
  RegressorModel() = default;
  RegressorModel(int window_radius, int hidden, std::uint64_t seed);

  int window_radius() const { return window_radius_; }
  int hidden() const { return hidden_; }
  int input_size() const { return (2 * window_radius_ + 1) * kSectorFeatures; }
  std::uint64_t seed() const { return seed_; }

  /// Flat parameter vector: W1 (hidden x in), b1, W2 (12 x hidden), b2.
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Raw outputs (may be negative), row a = angle bin a.
  PolarGrid forward_raw(const RangeScan& scan) const;
  /// forward_raw clamped at zero.
  PolarGrid predict(const RangeScan& scan) const;

  /// Mean squared error over all bins and the gradient wrt params (added
  /// into grad, scaled by `scale`).
  double loss_and_grad(const RangeScan& scan, const PolarGrid& target, std::span<double> grad, double scale) const;
  double loss(const RangeScan& scan, const PolarGrid& target) const;

  void round_to_float();

  friend bool operator==(const RegressorModel&, const RegressorModel&) = default;

 private:
  /// Per-row inputs: kAngleBins x input_size.
  std::vector<double> inputs(const RangeScan& scan) const;

  int window_radius_ = 1;
  int hidden_ = 64;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
};

/// The 16 features of ten consecutive rays starting at `start` (wrapping).
std::array<double, kSectorFeatures> sector_features(const RangeScan& scan, int start);

struct Sample {
  std::string env_id;
  NodeId node = 0;
  Pose pose;
  RangeScan scan{};
  PolarGrid target;
  WaypointSet waypoints;  // true neighbour waypoints
};

/// One sample per node in id order: heading-0 scan and oracle target.
std::vector<Sample> build_training_set(const Environment& env, const NavGraph& g);

struct TrainResult {
  RegressorModel model;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

/// Mini-batch AdamW on the mean squared error. Throws Diverged on a
/// non-finite loss. Weights are rounded to float at the end.
TrainResult train(RegressorModel model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& cfg);

double mean_loss(const RegressorModel& model, std::span<const Sample> set);

// ---------------------------------------------------------------------------
// Metrics

struct PredictorReport {
  double delta_abs = 0.0;
  double pct_open = 0.0;
  double chamfer = 0.0;
  double hausdorff = 0.0;
  int samples = 0;
};

double chamfer_distance(std::span<const Point2> p, std::span<const Point2> t);
double hausdorff_distance(std::span<const Point2> p, std::span<const Point2> t);

/// Running sums behind PredictorReport, so samples from several
/// environments can share one report.
class PredictorTally {
 public:
  void add(const WaypointSet& prediction, const WaypointSet& target, const Pose& pose, const Environment& env);
  PredictorReport report() const;

 private:
  int samples_ = 0;
  int n_pred_ = 0;
  int n_open_ = 0;
  int n_dist_ = 0;
  double delta_ = 0.0;
  double chamfer_ = 0.0;
  double hausdorff_ = 0.0;
};

/// Waypoints are converted to world points with poses[i]. Throws
/// AlignmentError when the lists differ in length.
PredictorReport evaluate_predictor(std::span<const WaypointSet> predictions, std::span<const WaypointSet> targets,
                                   std::span<const Pose> poses, const Environment& env);

}  // namespace waygraph
