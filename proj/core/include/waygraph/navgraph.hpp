#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "waygraph/environment.hpp"

namespace waygraph {

using NodeId = int;
using EdgeKey = std::pair<NodeId, NodeId>;  // first < second

inline EdgeKey make_edge(NodeId a, NodeId b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Undirected connectivity graph over an environment's free space.
struct NavGraph {
  std::map<NodeId, Point2> nodes;
  std::set<EdgeKey> edges;
  std::string env_id;
  NodeId next_id = 0;

  NodeId add_node(Point2 p);
  void remove_node(NodeId id);
  void add_edge(NodeId a, NodeId b);
  void remove_edge(NodeId a, NodeId b) { edges.erase(make_edge(a, b)); }
  bool has_edge(NodeId a, NodeId b) const { return edges.contains(make_edge(a, b)); }
  std::vector<NodeId> neighbors(NodeId id) const;
  Point2 at(NodeId id) const;
  double edge_length(const EdgeKey& e) const { return distance(at(e.first), at(e.second)); }

  /// Component label per node (labels are 0..k-1 in order of smallest node id).
  std::map<NodeId, int> components() const;
  bool connected() const;

  friend bool operator==(const NavGraph&, const NavGraph&) = default;
};

struct RingSpec {
  double radius;
  int samples;
};

struct RefineConfig {
  std::vector<RingSpec> rings{{0.10, 18}, {0.15, 30}, {0.20, 36}, {0.25, 48}, {0.30, 60}, {0.35, 72}};
  double w_clearance = 1.0;
  double w_node_count = 1.0;
  double w_straightness = 1.0;
  double clearance_scale = 0.35;
  double merge_dist = 0.5;
  double fit_dist = 0.8;
  int max_iterations = 20;
  std::vector<double> detour_steps{0.5, 0.75, 1.0, 1.5};
};

/// Candidate positions around a node, ring by ring, angle-major order.
std::vector<Point2> ring_candidates(Point2 center, const RefineConfig& cfg);

struct GraphStats {
  int node_count = 0;
  int edge_count = 0;
  double mean_degree = 0.0;
  double mean_edge_length = 0.0;
  std::vector<int> degree_histogram;       // bin k = degree k
  std::vector<int> edge_length_histogram;  // bin k = [0.25k, 0.25(k+1))
};

/// What keeps a graph from the navigable state.
struct GraphViolations {
  std::vector<NodeId> blocked_nodes;
  std::vector<EdgeKey> blocked_edges;
  std::vector<EdgeKey> short_edges;
  bool connected = true;

  bool ok() const { return blocked_nodes.empty() && blocked_edges.empty() && short_edges.empty() && connected; }
  std::string describe() const;
};

GraphViolations check_navigable(const Environment& env, const NavGraph& g, double min_edge_length);

/// Poisson-disc nodes over the full bounds (obstacles ignored) joined by
/// Delaunay edges no longer than 2 × spacing. Deterministic in seed.
NavGraph seed_graph(const Environment& env, std::uint64_t seed, double target_spacing);

/// Weighted clearance / node-count / straightness score of moving node_id to
/// `candidate`. Higher is better. Throws CandidateBlocked.
double score_candidate(const Environment& env, const NavGraph& g, NodeId node_id, Point2 candidate,
                       const RefineConfig& cfg);

/// Moves the node to its best free ring candidate, or deletes it (rewiring
/// former neighbors through detours) when none is free.
NavGraph adjust_node(const Environment& env, const NavGraph& g, NodeId node_id, const RefineConfig& cfg);

/// Replaces a blocked edge by the best-scoring chain of detour nodes.
NavGraph add_detour(const Environment& env, const NavGraph& g, NodeId a, NodeId b, const RefineConfig& cfg);

/// Greedy closest-pair merging until no two nodes are closer than merge_dist.
NavGraph merge_nodes(const Environment& env, const NavGraph& g, const RefineConfig& cfg);

/// Adds nodes for points farther than fit_dist (geodesic) from every node.
NavGraph fit_endpoints(const Environment& env, const NavGraph& g, std::span<const Point2> points,
                       const RefineConfig& cfg);

struct RefineResult {
  NavGraph graph;
  int iterations = 0;
};

/// Full refinement: adjust / detour / merge until navigable, then fit the
/// endpoints. Throws RefinementDiverged listing the offending nodes/edges.
RefineResult refine(const Environment& env, const NavGraph& g, std::span<const Point2> endpoints,
                    const RefineConfig& cfg);

GraphStats graph_stats(const NavGraph& g);

}  // namespace waygraph
