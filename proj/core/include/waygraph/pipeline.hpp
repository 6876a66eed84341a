#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "waygraph/envgen.hpp"
#include "waygraph/metrics.hpp"
#include "waygraph/navgraph.hpp"
#include "waygraph/predictor.hpp"
#include "waygraph/sim.hpp"

namespace waygraph {

std::string sha256_hex(std::string_view data);

/// Runs fn(0..n-1) on up to `jobs` threads. Each index runs exactly once;
/// callers write results by index so output order never depends on jobs.
/// The first exception thrown by any task is rethrown.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

/// One row of the regime grid.
struct RunCombo {
  std::string name;
  Regime regime;
  PolicyKind policy = PolicyKind::Greedy;
  PredictorKind predictor = PredictorKind::Graph;
  bool sliding = true;
  bool augment = false;
};

struct ExperimentSpec {
  std::string name = "default";
  std::uint64_t seed = 7;
  std::vector<std::uint64_t> train_envs{0, 1, 2, 3};
  std::vector<std::uint64_t> val_envs{4, 5};
  std::vector<Profile> profiles{Profile::Rooms, Profile::Corridors, Profile::Clutter};
  double graph_spacing = 1.5;
  RefineConfig refine;
  int window_radius = 1;
  int hidden = 64;
  TrainConfig train;
  int episodes_per_env = 10;
  int min_hops = 4;
  int max_hops = 7;
  SimConfig sim;
  std::vector<RunCombo> grid;

  /// Profile of the environment generated from `env_seed`.
  Profile profile_of(std::uint64_t env_seed) const;
};

/// The default grid: the rows behind the ablation tables.
std::vector<RunCombo> default_grid();

/// Throws InvalidInput on malformed specs (unknown keys included).
ExperimentSpec parse_spec(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& s);

struct StageStatus {
  std::string name;
  bool cached = false;
};

struct PipelineResult {
  std::vector<StageStatus> stages;
  std::filesystem::path report_csv;
  std::filesystem::path report_json;
  std::filesystem::path report_svg;
};

using Logger = std::function<void(const std::string&)>;

/// gen-env -> graphs -> dataset -> model -> episodes -> runs -> report. Each
/// stage is keyed by the hash of its config and inputs and skipped when the
/// manifest already holds that key with intact files. A file whose checksum
/// no longer matches the manifest raises ChecksumMismatch naming the stage;
/// any other stage error is rethrown as StageFailure naming the stage.
PipelineResult run_pipeline(const ExperimentSpec& spec, const std::filesystem::path& out_dir, int jobs,
                            const Logger& log = {});

/// Table rows assembled from the per-combo summaries of a pipeline run.
/// Throws StageFailure when a needed combo was not run.
nlohmann::json ablation_tables(const std::filesystem::path& out_dir);
std::string ablation_markdown(const nlohmann::json& tables);

/// Bar charts (SR, SPL, decisions per combo).
std::string report_svg(const std::vector<std::pair<std::string, Summary>>& rows);

}  // namespace waygraph
