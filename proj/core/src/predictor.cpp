#include "waygraph/predictor.hpp"
#include "waygraph/workclock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "waygraph/error.hpp"
#include "waygraph/rng.hpp"

namespace waygraph {

RangeScan take_scan(const Environment& env, const Pose& pose) {
  RangeScan s{};
  for (int a = 0; a < kAngleBins; ++a)
    s[static_cast<std::size_t>(a)] = env.raycast(pose.position, pose.heading + bin_angle(a), kScanRange);
  return s;
}

WaypointSet neighbor_waypoints(const NavGraph& g, NodeId node_id, const Pose& pose) {
  WaypointSet out;
  const Point2 c = g.at(node_id);
  for (NodeId nb : g.neighbors(node_id)) {
    const Point2 q = g.at(nb);
    double dist = distance(c, q);
    if (dist < 1e-9) continue;
    dist = std::clamp(dist, kDistStep, kMaxRing);
    out.push_back({normalize_angle(bearing(c, q) - pose.heading), dist});
  }
  return out;
}

PolarGrid oracle_predict(const NavGraph& g, NodeId node_id, const GaussianSpec& spec) {
  return oracle_predict(g, node_id, Pose{g.at(node_id), 0.0}, spec);
}

PolarGrid oracle_predict(const NavGraph& g, NodeId node_id, const Pose& pose, const GaussianSpec& spec) {
  const auto w = neighbor_waypoints(g, node_id, pose);
  return make_target(w, spec);
}

namespace {

double ray(const RangeScan& s, int a) { return s[static_cast<std::size_t>(((a % kAngleBins) + kAngleBins) % kAngleBins)]; }

double window_min(const RangeScan& s, int a, int w) {
  double m = kInf;
  for (int k = -w; k <= w; ++k) m = std::min(m, ray(s, a + k));
  return m;
}

/// Wedge between rays k and k+1 is taken as blocked beyond the nearer of the
/// two hits. The disc of `radius` swept radially from the origin to
/// `ring * unit(theta)` must not reach any blocked wedge region (its arc and
/// its two side rays).
bool sweep_clear(const RangeScan& s, double theta, double ring, double radius) {
  const Point2 o{0.0, 0.0};
  const Point2 w = unit(theta) * ring;
  const double far = ring + radius + 1.0;
  for (int k = 0; k < kAngleBins; ++k) {
    const double m = std::min(ray(s, k), ray(s, k + 1));
    if (m >= kScanRange || m >= ring + radius) continue;
    const double lo = bin_angle(k);
    const double off = normalize_angle(theta - lo);
    if (off <= deg2rad(kAngleBinDeg)) {
      if (ring + radius > m) return false;
      continue;
    }
    const double gap = std::min(off - deg2rad(kAngleBinDeg), kTwoPi - off);
    if (gap >= 0.5 * kPi && m >= radius) continue;
    const Point2 u0 = unit(lo);
    const Point2 u1 = unit(lo + deg2rad(kAngleBinDeg));
    if (point_segment_distance(u0 * m, o, w) < radius) return false;
    if (point_segment_distance(u1 * m, o, w) < radius) return false;
    if (segment_segment_distance(o, w, u0 * m, u0 * far) < radius) return false;
    if (segment_segment_distance(o, w, u1 * m, u1 * far) < radius) return false;
  }
  return true;
}

}  // namespace

PolarGrid geometric_predict(const RangeScan& scan, double agent_radius, const GeometricConfig& cfg) {
  const double pad = agent_radius + cfg.margin;
  std::array<double, kAngleBins> reach{};
  for (int a = 0; a < kAngleBins; ++a)
    reach[static_cast<std::size_t>(a)] = std::max(0.0, window_min(scan, a, cfg.reach_window) - pad);

  // Close rings need a wider angular window for the swept disc.
  std::array<int, kDistBins> wd{};
  for (int d = 0; d < kDistBins; ++d) {
    const double half = rad2deg(std::asin(std::min(1.0, pad / ring_distance(d))));
    wd[static_cast<std::size_t>(d)] = std::max(cfg.reach_window, static_cast<int>(std::ceil(half / kAngleBinDeg)) + 1);
  }

  PolarGrid g;
  for (int a = 0; a < kAngleBins; ++a) {
    double local = 0.0;
    for (int k = -cfg.open_window; k <= cfg.open_window; ++k)
      local = std::max(local, reach[static_cast<std::size_t>(((a + k) % kAngleBins + kAngleBins) % kAngleBins)]);
    const double open = local > 0.0 ? reach[static_cast<std::size_t>(a)] / local : 0.0;
    for (int d = 0; d < kDistBins; ++d) {
      const double ring = ring_distance(d);
      if (ring > window_min(scan, a, wd[static_cast<std::size_t>(d)]) - pad) continue;
      if (!sweep_clear(scan, bin_angle(a), ring, agent_radius)) continue;
      g.at(a, d) = open * ring / kMaxRing;
    }
  }
  const double mx = g.max();
  if (mx > 0.0)
    for (double& v : g.values()) v /= mx;
  return g;
}

// ---------------------------------------------------------------------------
// Regressor

std::array<double, kSectorFeatures> sector_features(const RangeScan& scan, int start) {
  std::array<double, kSectorFeatures> f{};
  double mn = kInf, mx = -kInf, sum = 0.0;
  for (int i = 0; i < kSectorRays; ++i) {
    const double r = ray(scan, start + i) / kScanRange;
    f[static_cast<std::size_t>(i)] = r;
    mn = std::min(mn, r);
    mx = std::max(mx, r);
    sum += r;
  }
  f[10] = mn;
  f[11] = sum / kSectorRays;
  f[12] = mx;
  double dmn = kInf, dmx = -kInf, dabs = 0.0;
  for (int i = 0; i + 1 < kSectorRays; ++i) {
    const double d = f[static_cast<std::size_t>(i + 1)] - f[static_cast<std::size_t>(i)];
    dmn = std::min(dmn, d);
    dmx = std::max(dmx, d);
    dabs += std::fabs(d);
  }
  f[13] = dmn;
  f[14] = dmx;
  f[15] = dabs / (kSectorRays - 1);
  return f;
}

RegressorModel::RegressorModel(int window_radius, int hidden, std::uint64_t seed)
    : window_radius_(window_radius), hidden_(hidden), seed_(seed) {
  if (window_radius < 0 || hidden <= 0) throw Error(ErrorCode::InvalidInput, "bad regressor shape");
  const int in = input_size();
  params_.assign(static_cast<std::size_t>(hidden * in + hidden + kDistBins * hidden + kDistBins), 0.0);
  Rng rng(mix_seed(seed, 0x6d6f64656cULL));
  auto gauss = [&]() {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  };
  double* p = params_.data();
  const double s1 = std::sqrt(2.0 / in);
  for (int i = 0; i < hidden * in; ++i) *p++ = s1 * gauss();
  p += hidden;
  const double s2 = std::sqrt(1.0 / hidden);
  for (int i = 0; i < kDistBins * hidden; ++i) *p++ = s2 * gauss();
}

std::vector<double> RegressorModel::inputs(const RangeScan& scan) const {
  std::array<std::array<double, kSectorFeatures>, kAngleBins> feats{};
  for (int s = 0; s < kAngleBins; ++s) feats[static_cast<std::size_t>(s)] = sector_features(scan, s);
  const int in = input_size();
  std::vector<double> x(static_cast<std::size_t>(kAngleBins * in));
  for (int a = 0; a < kAngleBins; ++a) {
    double* row = x.data() + static_cast<std::ptrdiff_t>(a) * in;
    for (int k = -window_radius_; k <= window_radius_; ++k) {
      const int start = ((a - kSectorRays / 2 + k * kSectorRays) % kAngleBins + kAngleBins) % kAngleBins;
      const auto& f = feats[static_cast<std::size_t>(start)];
      std::copy(f.begin(), f.end(), row + (k + window_radius_) * kSectorFeatures);
    }
  }
  return x;
}

PolarGrid RegressorModel::forward_raw(const RangeScan& scan) const {
  const int in = input_size();
  const int h = hidden_;
  const auto x = inputs(scan);
  const double* W1 = params_.data();
  const double* b1 = W1 + h * in;
  const double* W2 = b1 + h;
  const double* b2 = W2 + kDistBins * h;
  PolarGrid out;
  work_counts().macs += static_cast<std::uint64_t>(kAngleBins) * static_cast<std::uint64_t>(h * in + kDistBins * h);
  std::vector<double> z(static_cast<std::size_t>(h));
  for (int a = 0; a < kAngleBins; ++a) {
    const double* xr = x.data() + static_cast<std::ptrdiff_t>(a) * in;
    for (int j = 0; j < h; ++j) {
      double s = b1[j];
      const double* w = W1 + static_cast<std::ptrdiff_t>(j) * in;
      for (int i = 0; i < in; ++i) s += w[i] * xr[i];
      z[static_cast<std::size_t>(j)] = s > 0.0 ? s : 0.0;
    }
    for (int d = 0; d < kDistBins; ++d) {
      double s = b2[d];
      const double* w = W2 + static_cast<std::ptrdiff_t>(d) * h;
      for (int j = 0; j < h; ++j) s += w[j] * z[static_cast<std::size_t>(j)];
      out.at(a, d) = s;
    }
  }
  return out;
}

PolarGrid RegressorModel::predict(const RangeScan& scan) const {
  PolarGrid g = forward_raw(scan);
  for (double& v : g.values()) v = std::max(0.0, v);
  return g;
}

double RegressorModel::loss(const RangeScan& scan, const PolarGrid& target) const {
  const PolarGrid y = forward_raw(scan);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.values().size(); ++i) {
    const double e = y.values()[i] - target.values()[i];
    acc += e * e;
  }
  return acc / static_cast<double>(kAngleBins * kDistBins);
}

double RegressorModel::loss_and_grad(const RangeScan& scan, const PolarGrid& target, std::span<double> grad,
                                     double scale) const {
  const int in = input_size();
  const int h = hidden_;
  const auto x = inputs(scan);
  const double* W1 = params_.data();
  const double* b1 = W1 + h * in;
  const double* W2 = b1 + h;
  const double* b2 = W2 + kDistBins * h;
  double* gW1 = grad.data();
  double* gb1 = gW1 + h * in;
  double* gW2 = gb1 + h;
  double* gb2 = gW2 + kDistBins * h;
  constexpr double n = kAngleBins * kDistBins;
  std::vector<double> z(static_cast<std::size_t>(h)), dz(static_cast<std::size_t>(h));
  double acc = 0.0;
  for (int a = 0; a < kAngleBins; ++a) {
    const double* xr = x.data() + static_cast<std::ptrdiff_t>(a) * in;
    for (int j = 0; j < h; ++j) {
      double s = b1[j];
      const double* w = W1 + static_cast<std::ptrdiff_t>(j) * in;
      for (int i = 0; i < in; ++i) s += w[i] * xr[i];
      z[static_cast<std::size_t>(j)] = s > 0.0 ? s : 0.0;
      dz[static_cast<std::size_t>(j)] = 0.0;
    }
    for (int d = 0; d < kDistBins; ++d) {
      double s = b2[d];
      const double* w = W2 + static_cast<std::ptrdiff_t>(d) * h;
      for (int j = 0; j < h; ++j) s += w[j] * z[static_cast<std::size_t>(j)];
      const double e = s - target.at(a, d);
      acc += e * e;
      const double dy = scale * 2.0 * e / n;
      gb2[d] += dy;
      double* gw = gW2 + static_cast<std::ptrdiff_t>(d) * h;
      for (int j = 0; j < h; ++j) {
        gw[j] += dy * z[static_cast<std::size_t>(j)];
        dz[static_cast<std::size_t>(j)] += dy * w[j];
      }
    }
    for (int j = 0; j < h; ++j) {
      if (z[static_cast<std::size_t>(j)] <= 0.0) continue;
      const double g = dz[static_cast<std::size_t>(j)];
      gb1[j] += g;
      double* gw = gW1 + static_cast<std::ptrdiff_t>(j) * in;
      for (int i = 0; i < in; ++i) gw[i] += g * xr[i];
    }
  }
  return acc / n;
}

void RegressorModel::round_to_float() {
  for (double& p : params_) p = static_cast<double>(static_cast<float>(p));
}

std::vector<Sample> build_training_set(const Environment& env, const NavGraph& g) {
  std::vector<Sample> out;
  out.reserve(g.nodes.size());
  for (const auto& [id, p] : g.nodes) {
    Sample s;
    s.env_id = g.env_id;
    s.node = id;
    s.pose = Pose{p, 0.0};
    s.scan = take_scan(env, s.pose);
    s.waypoints = neighbor_waypoints(g, id, s.pose);
    s.target = make_target(s.waypoints);
    out.push_back(std::move(s));
  }
  return out;
}

double mean_loss(const RegressorModel& model, std::span<const Sample> set) {
  if (set.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : set) acc += model.loss(s.scan, s.target);
  return acc / static_cast<double>(set.size());
}

TrainResult train(RegressorModel model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw Error(ErrorCode::InvalidInput, "empty training set");
  if (!(cfg.learning_rate > 0.0) || cfg.weight_decay < 0.0 || cfg.batch_size <= 0)
    throw Error(ErrorCode::InvalidInput, "bad training config");
  TrainResult res;
  const std::size_t np = model.param_count();
  std::vector<double> m(np, 0.0), v(np, 0.0), grad(np, 0.0);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x747261696eULL));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1))]);
    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(b1 - b0);
      for (std::size_t k = b0; k < b1; ++k) {
        const auto& s = train_set[order[k]];
        epoch_loss += model.loss_and_grad(s.scan, s.target, grad, scale);
      }
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto p = model.params();
      for (std::size_t i = 0; i < np; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        p[i] -= cfg.learning_rate * ((m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps) + cfg.weight_decay * p[i]);
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw Error(ErrorCode::Diverged, "non-finite training loss at epoch " + std::to_string(epoch));
    res.train_loss.push_back(epoch_loss);
    res.val_loss.push_back(mean_loss(model, val_set));
  }
  model.round_to_float();
  res.model = std::move(model);
  return res;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

double directed_mean(std::span<const Point2> from, std::span<const Point2> to) {
  double acc = 0.0;
  for (const auto& p : from) {
    double best = kInf;
    for (const auto& q : to) best = std::min(best, distance(p, q));
    acc += best;
  }
  return acc / static_cast<double>(from.size());
}

double directed_max(std::span<const Point2> from, std::span<const Point2> to) {
  double worst = 0.0;
  for (const auto& p : from) {
    double best = kInf;
    for (const auto& q : to) best = std::min(best, distance(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<Point2> to_world(const WaypointSet& w, const Pose& pose) {
  std::vector<Point2> out;
  out.reserve(w.size());
  for (const auto& x : w) out.push_back(polar_to_world(pose, x.angle, x.distance));
  return out;
}

}  // namespace

double chamfer_distance(std::span<const Point2> p, std::span<const Point2> t) {
  if (p.empty() || t.empty()) throw Error(ErrorCode::EmptySet, "chamfer of an empty set");
  return 0.5 * (directed_mean(p, t) + directed_mean(t, p));
}

double hausdorff_distance(std::span<const Point2> p, std::span<const Point2> t) {
  if (p.empty() || t.empty()) throw Error(ErrorCode::EmptySet, "hausdorff of an empty set");
  return std::max(directed_max(p, t), directed_max(t, p));
}

void PredictorTally::add(const WaypointSet& prediction, const WaypointSet& target, const Pose& pose,
                         const Environment& env) {
  const auto P = to_world(prediction, pose);
  const auto T = to_world(target, pose);
  ++samples_;
  delta_ += std::fabs(static_cast<double>(P.size()) - static_cast<double>(T.size()));
  for (const auto& p : P) {
    ++n_pred_;
    if (env.is_free(p) && env.segment_free(pose.position, p)) ++n_open_;
  }
  if (P.empty() || T.empty()) return;
  chamfer_ += chamfer_distance(P, T);
  hausdorff_ += hausdorff_distance(P, T);
  ++n_dist_;
}

PredictorReport PredictorTally::report() const {
  PredictorReport r;
  r.samples = samples_;
  if (samples_ == 0) return r;
  r.delta_abs = delta_ / samples_;
  r.pct_open = n_pred_ > 0 ? 100.0 * n_open_ / n_pred_ : 0.0;
  r.chamfer = n_dist_ > 0 ? chamfer_ / n_dist_ : 0.0;
  r.hausdorff = n_dist_ > 0 ? hausdorff_ / n_dist_ : 0.0;
  return r;
}

PredictorReport evaluate_predictor(std::span<const WaypointSet> predictions, std::span<const WaypointSet> targets,
                                   std::span<const Pose> poses, const Environment& env) {
  if (predictions.size() != targets.size() || predictions.size() != poses.size())
    throw Error(ErrorCode::AlignmentError, "prediction/target/pose lists differ in length");
  PredictorTally t;
  for (std::size_t i = 0; i < predictions.size(); ++i) t.add(predictions[i], targets[i], poses[i], env);
  return t.report();
}

}  // namespace waygraph
