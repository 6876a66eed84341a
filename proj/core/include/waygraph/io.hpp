#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "waygraph/environment.hpp"
#include "waygraph/heatmap.hpp"
#include "waygraph/metrics.hpp"
#include "waygraph/navgraph.hpp"
#include "waygraph/predictor.hpp"
#include "waygraph/sim.hpp"

namespace waygraph::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Throws Io on failure.
std::string read_file(const fs::path& p);
/// Writes through a temporary file and renames it into place.
void write_file(const fs::path& p, std::string_view data);
json read_json(const fs::path& p);
void write_json(const fs::path& p, const json& j);

// Environment: {"bounds":[x0,y0,x1,y1],"cell_size":..,"agent_radius":..,"obstacles":[[[x,y],..],..]}
json env_to_json(const Environment& env);
Environment env_from_json(const json& j);
Environment load_env(const fs::path& p);

// Graph: {"env":"<env-file>","nodes":{"<id>":[x,y]},"edges":[["a","b"],..]}
json graph_to_json(const NavGraph& g, const std::string& env_ref);
NavGraph graph_from_json(const json& j, std::string* env_ref = nullptr);
NavGraph load_graph(const fs::path& p, std::string* env_ref = nullptr);

// Heatmap: "PWHM", u32 n_angles, u32 n_dists, little-endian f32 row-major by angle.
std::string encode_pwhm(const PolarGrid& g);
PolarGrid decode_pwhm(std::string_view bytes);
json heatmap_to_json(const PolarGrid& g);

std::string hex_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> hex_decode(std::string_view hex);

// Model: JSON header plus a hex blob of little-endian f32 parameters.
json model_to_json(const RegressorModel& m, const TrainConfig* cfg = nullptr);
RegressorModel model_from_json(const json& j);
RegressorModel load_model(const fs::path& p);

/// Dataset: `<base>.bin` holds per record 120 f32 ranges followed by a PWHM
/// target; `<base>.json` indexes the records. Scans round-trip through f32.
void save_dataset(const fs::path& base, std::span<const Sample> samples);
std::vector<Sample> load_dataset(const fs::path& index);

json episode_to_json(const Episode& ep);
Episode episode_from_json(const json& j);
void save_episodes(const fs::path& p, std::span<const Episode> eps);
std::vector<Episode> load_episodes(const fs::path& p);

/// One line per pose: episode, step, x, y, heading, action (null on the
/// start pose), collided. The start line also carries the episode totals
/// (decisions, timed_out, time_s, wall_time_s).
void write_trajectory(std::ostream& os, const std::string& episode_id, const Trajectory& t);
/// Trajectories by episode id, in order of first appearance.
std::vector<std::pair<std::string, Trajectory>> read_trajectories(std::string_view text);

inline constexpr std::string_view kResultsHeader = "id,tl,ne,sr,osr,spl,ndtw,sdtw,decisions,actions,collisions,time_s";
void write_results_csv(std::ostream& os, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_results_csv(std::string_view text);
json summary_to_json(const Summary& s);

}  // namespace waygraph::io
