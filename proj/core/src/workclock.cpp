#include "waygraph/workclock.hpp"

namespace waygraph {

namespace {

// Nanoseconds per primitive, calibrated on generated environments.
constexpr double kPointNs = 53.0;
constexpr double kSegmentNs = 190.0;
constexpr double kRayNs = 220.0;
constexpr double kCellNs = 135.0;
constexpr double kMacNs = 0.39;

}  // namespace

WorkCounts& work_counts() {
  thread_local WorkCounts counts;
  return counts;
}

double modeled_seconds(const WorkCounts& w) {
  const double ns = kPointNs * static_cast<double>(w.point_checks) +
                    kSegmentNs * static_cast<double>(w.segment_checks) + kRayNs * static_cast<double>(w.rays) +
                    kCellNs * static_cast<double>(w.cells) + kMacNs * static_cast<double>(w.macs);
  return ns * 1e-9;
}

}  // namespace waygraph
