#pragma once

#include <cstdint>

namespace waygraph {

/// Per-thread tallies of the expensive primitives. Deterministic for a given
/// input, unlike wall time, so they back the reported episode time.
struct WorkCounts {
  std::uint64_t point_checks = 0;
  std::uint64_t segment_checks = 0;
  std::uint64_t rays = 0;
  std::uint64_t cells = 0;  // geodesic cells settled
  std::uint64_t macs = 0;   // regressor multiply-adds

  WorkCounts operator-(const WorkCounts& o) const {
    return {point_checks - o.point_checks, segment_checks - o.segment_checks, rays - o.rays, cells - o.cells,
            macs - o.macs};
  }
};

WorkCounts& work_counts();

/// Seconds the counted work takes at fixed per-primitive costs.
double modeled_seconds(const WorkCounts& w);

}  // namespace waygraph
