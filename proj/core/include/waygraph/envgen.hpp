#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "waygraph/environment.hpp"

namespace waygraph {

enum class Profile { Rooms, Corridors, Clutter };

Profile parse_profile(std::string_view name);
std::string_view to_string(Profile p);

struct GenOptions {
  double cell_size = 0.05;
  double agent_radius = 0.10;
  int max_attempts = 100;
};

/// Procedural indoor layout, deterministic in `seed`. Free space is one
/// connected component; throws GenerationFailed after max_attempts layouts.
Environment generate_environment(std::uint64_t seed, Profile profile, const GenOptions& opts = {});

/// Labels connected components of the free raster (same move rules as the
/// geodesic search). Returns the number of components.
int count_free_components(const Environment& env);

}  // namespace waygraph
