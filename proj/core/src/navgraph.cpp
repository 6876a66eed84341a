#include "waygraph/navgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <sstream>

#include <boost/polygon/voronoi.hpp>

#include "waygraph/error.hpp"
#include "waygraph/rng.hpp"

namespace waygraph {

// ---------------------------------------------------------------------------
// NavGraph

NodeId NavGraph::add_node(Point2 p) {
  const NodeId id = next_id++;
  nodes.emplace(id, p);
  return id;
}

void NavGraph::remove_node(NodeId id) {
  nodes.erase(id);
  for (auto it = edges.begin(); it != edges.end();) {
    if (it->first == id || it->second == id)
      it = edges.erase(it);
    else
      ++it;
  }
}

void NavGraph::add_edge(NodeId a, NodeId b) {
  if (a == b) return;
  if (!nodes.contains(a) || !nodes.contains(b)) throw Error(ErrorCode::InvalidInput, "edge references missing node");
  edges.insert(make_edge(a, b));
}

std::vector<NodeId> NavGraph::neighbors(NodeId id) const {
  std::vector<NodeId> out;
  for (const auto& [a, b] : edges) {
    if (a == id) out.push_back(b);
    if (b == id) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Point2 NavGraph::at(NodeId id) const {
  const auto it = nodes.find(id);
  if (it == nodes.end()) throw Error(ErrorCode::InvalidInput, "unknown node id " + std::to_string(id));
  return it->second;
}

std::map<NodeId, int> NavGraph::components() const {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& [id, p] : nodes) adj[id];
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::map<NodeId, int> label;
  int next = 0;
  for (const auto& [id, p] : nodes) {
    if (label.contains(id)) continue;
    std::deque<NodeId> q{id};
    label[id] = next;
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop_front();
      for (NodeId v : adj[u]) {
        if (label.contains(v)) continue;
        label[v] = next;
        q.push_back(v);
      }
    }
    ++next;
  }
  return label;
}

bool NavGraph::connected() const {
  const auto lab = components();
  return std::all_of(lab.begin(), lab.end(), [](const auto& kv) { return kv.second == 0; });
}

// ---------------------------------------------------------------------------
// Validity

std::string GraphViolations::describe() const {
  std::ostringstream os;
  os << "blocked nodes [";
  for (std::size_t i = 0; i < blocked_nodes.size(); ++i) os << (i ? "," : "") << blocked_nodes[i];
  os << "] blocked edges [";
  for (std::size_t i = 0; i < blocked_edges.size(); ++i)
    os << (i ? "," : "") << blocked_edges[i].first << "-" << blocked_edges[i].second;
  os << "] short edges [";
  for (std::size_t i = 0; i < short_edges.size(); ++i)
    os << (i ? "," : "") << short_edges[i].first << "-" << short_edges[i].second;
  os << "] connected=" << (connected ? "true" : "false");
  return os.str();
}

GraphViolations check_navigable(const Environment& env, const NavGraph& g, double min_edge_length) {
  GraphViolations v;
  for (const auto& [id, p] : g.nodes)
    if (!env.is_free(p)) v.blocked_nodes.push_back(id);
  for (const auto& e : g.edges) {
    if (!env.segment_free(g.at(e.first), g.at(e.second))) v.blocked_edges.push_back(e);
    if (g.edge_length(e) < min_edge_length - 1e-9) v.short_edges.push_back(e);
  }
  v.connected = g.connected();
  return v;
}

// ---------------------------------------------------------------------------
// Seeding

namespace {

std::vector<Point2> poisson_disc(const Bounds& b, double spacing, Rng& rng) {
  const double cell = spacing / std::numbers::sqrt2;
  const int gx = static_cast<int>(std::ceil(b.width() / cell));
  const int gy = static_cast<int>(std::ceil(b.height() / cell));
  std::vector<int> grid(static_cast<std::size_t>(gx * gy), -1);
  std::vector<Point2> pts;
  std::vector<int> active;
  auto grid_index = [&](Point2 p) {
    const int i = std::clamp(static_cast<int>((p.x - b.x0) / cell), 0, gx - 1);
    const int j = std::clamp(static_cast<int>((p.y - b.y0) / cell), 0, gy - 1);
    return std::pair{i, j};
  };
  auto accept = [&](Point2 p) {
    const auto [i, j] = grid_index(p);
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di) {
        const int ii = i + di;
        const int jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= gx || jj >= gy) continue;
        const int k = grid[static_cast<std::size_t>(jj * gx + ii)];
        if (k >= 0 && distance(pts[static_cast<std::size_t>(k)], p) < spacing) return false;
      }
    return true;
  };
  auto insert = [&](Point2 p) {
    const auto [i, j] = grid_index(p);
    grid[static_cast<std::size_t>(j * gx + i)] = static_cast<int>(pts.size());
    active.push_back(static_cast<int>(pts.size()));
    pts.push_back(p);
  };
  insert({uniform(rng, b.x0, b.x1), uniform(rng, b.y0, b.y1)});
  while (!active.empty()) {
    const std::size_t slot = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(active.size()) - 1));
    const Point2 base = pts[static_cast<std::size_t>(active[slot])];
    bool placed = false;
    for (int k = 0; k < 30; ++k) {
      const double r = uniform(rng, spacing, 2.0 * spacing);
      const Point2 p = base + unit(uniform(rng, 0.0, kTwoPi)) * r;
      if (!b.contains(p) || !accept(p)) continue;
      insert(p);
      placed = true;
      break;
    }
    if (!placed) {
      active[slot] = active.back();
      active.pop_back();
    }
  }
  return pts;
}

}  // namespace

NavGraph seed_graph(const Environment& env, std::uint64_t seed, double target_spacing) {
  if (!(target_spacing > 0.0)) throw Error(ErrorCode::InvalidInput, "target_spacing must be positive");
  Rng rng(mix_seed(seed, 0x5eedULL));
  const auto pts = poisson_disc(env.bounds(), target_spacing, rng);
  NavGraph g;
  for (const auto& p : pts) g.add_node(p);
  if (pts.size() < 2) return g;

  // Delaunay edges are the duals of the Voronoi edges; boost wants integer
  // input, so quantize to 0.1 mm.
  constexpr double kScale = 1e4;
  std::vector<boost::polygon::point_data<int>> ipts;
  ipts.reserve(pts.size());
  for (const auto& p : pts)
    ipts.emplace_back(static_cast<int>(std::lround((p.x - env.bounds().x0) * kScale)),
                      static_cast<int>(std::lround((p.y - env.bounds().y0) * kScale)));
  boost::polygon::voronoi_diagram<double> vd;
  boost::polygon::construct_voronoi(ipts.begin(), ipts.end(), &vd);
  for (const auto& edge : vd.edges()) {
    if (!edge.is_primary()) continue;
    const auto a = static_cast<NodeId>(edge.cell()->source_index());
    const auto b = static_cast<NodeId>(edge.twin()->cell()->source_index());
    if (a >= b) continue;
    if (distance(pts[static_cast<std::size_t>(a)], pts[static_cast<std::size_t>(b)]) <= 2.0 * target_spacing)
      g.add_edge(a, b);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Scoring and detours

std::vector<Point2> ring_candidates(Point2 center, const RefineConfig& cfg) {
  std::vector<Point2> out;
  for (const auto& ring : cfg.rings)
    for (int k = 0; k < ring.samples; ++k) out.push_back(center + unit(kTwoPi * k / ring.samples) * ring.radius);
  return out;
}

namespace {

constexpr int kUnreachablePenalty = 10;

double clearance_term(const Environment& env, Point2 p, const RefineConfig& cfg) {
  return std::clamp(env.clearance(p) / cfg.clearance_scale, 0.0, 1.0);
}

struct Chain {
  std::vector<Point2> interior;
  double length = 0.0;
  double score = 0.0;
};

double chain_score(const Environment& env, Point2 a, Point2 b, const Chain& c, const RefineConfig& cfg) {
  double clear = 1.0;
  if (!c.interior.empty()) {
    clear = 0.0;
    for (const auto& p : c.interior) clear += clearance_term(env, p, cfg);
    clear /= static_cast<double>(c.interior.size());
  }
  const double straight = c.length > 0.0 ? std::min(1.0, distance(a, b) / c.length) : 1.0;
  return cfg.w_clearance * clear + cfg.w_node_count / (1.0 + static_cast<double>(c.interior.size())) +
         cfg.w_straightness * straight;
}

/// Best detour chain from a to the field's source; nullopt when disconnected.
std::optional<Chain> best_chain(const GeodesicField& field_to_b, Point2 a, const RefineConfig& cfg) {
  const Environment& env = field_to_b.environment();
  const Point2 b = field_to_b.source();
  std::vector<Point2> corners;
  try {
    corners = pulled_path(field_to_b, a);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoPath) return std::nullopt;
    throw;
  }
  std::optional<Chain> best;
  for (double step : cfg.detour_steps) {
    const auto pts = resample_polyline(corners, step);
    Chain c;
    c.length = polyline_length(pts);
    if (pts.size() > 2) c.interior.assign(pts.begin() + 1, pts.end() - 1);
    c.score = chain_score(env, a, b, c, cfg);
    if (!best || c.score > best->score + 1e-12) best = std::move(c);
  }
  return best;
}

/// Geodesic fields toward each neighbor of a node, built lazily and bounded
/// to the candidate set being scored.
class NeighborFields {
 public:
  NeighborFields(const Environment& env, std::vector<Point2> targets) : env_(env), targets_(std::move(targets)) {}

  const GeodesicField& get(NodeId id, Point2 pos) {
    auto it = fields_.find(id);
    if (it == fields_.end()) it = fields_.emplace(id, std::make_unique<GeodesicField>(env_, pos, targets_)).first;
    return *it->second;
  }

 private:
  const Environment& env_;
  std::vector<Point2> targets_;
  std::map<NodeId, std::unique_ptr<GeodesicField>> fields_;
};

double score_with_fields(const Environment& env, const NavGraph& g, NodeId node_id, Point2 candidate,
                         const RefineConfig& cfg, NeighborFields& fields) {
  if (!env.is_free(candidate)) throw Error(ErrorCode::CandidateBlocked, "candidate position is blocked");
  const Point2 orig = g.at(node_id);
  double orig_len = 0.0;
  double new_len = 0.0;
  int new_nodes = 0;
  for (NodeId nb : g.neighbors(node_id)) {
    const Point2 q = g.at(nb);
    if (!env.is_free(q)) continue;
    if (env.segment_free(candidate, q)) {
      orig_len += distance(orig, q);
      new_len += distance(candidate, q);
      continue;
    }
    const auto chain = best_chain(fields.get(nb, q), candidate, cfg);
    if (!chain) {
      new_nodes += kUnreachablePenalty;
      continue;
    }
    orig_len += distance(orig, q);
    new_len += chain->length;
    new_nodes += static_cast<int>(chain->interior.size());
  }
  const double straight = new_len > 0.0 ? std::clamp(orig_len / new_len, 0.0, 1.0) : 1.0;
  return cfg.w_clearance * clearance_term(env, candidate, cfg) +
         cfg.w_node_count / (1.0 + static_cast<double>(new_nodes)) + cfg.w_straightness * straight;
}

void insert_chain(NavGraph& g, NodeId a, NodeId b, const Chain& chain) {
  NodeId prev = a;
  for (const auto& p : chain.interior) {
    const NodeId id = g.add_node(p);
    g.add_edge(prev, id);
    prev = id;
  }
  g.add_edge(prev, b);
}

void detour_in_place(const Environment& env, NavGraph& g, NodeId a, NodeId b, const RefineConfig& cfg) {
  if (!g.has_edge(a, b)) return;
  const Point2 pa = g.at(a);
  const Point2 pb = g.at(b);
  if (env.segment_free(pa, pb)) return;
  if (!env.is_free(pa) || !env.is_free(pb)) return;
  g.remove_edge(a, b);
  const std::array<Point2, 1> targets{pa};
  const GeodesicField field(env, pb, targets);
  if (const auto chain = best_chain(field, pa, cfg)) insert_chain(g, a, b, *chain);
}

}  // namespace

double score_candidate(const Environment& env, const NavGraph& g, NodeId node_id, Point2 candidate,
                       const RefineConfig& cfg) {
  NeighborFields fields(env, {candidate});
  return score_with_fields(env, g, node_id, candidate, cfg, fields);
}

NavGraph add_detour(const Environment& env, const NavGraph& g, NodeId a, NodeId b, const RefineConfig& cfg) {
  NavGraph out = g;
  detour_in_place(env, out, a, b, cfg);
  return out;
}

NavGraph adjust_node(const Environment& env, const NavGraph& g, NodeId node_id, const RefineConfig& cfg) {
  NavGraph out = g;
  const Point2 center = g.at(node_id);
  std::vector<Point2> free_cands;
  for (const auto& c : ring_candidates(center, cfg))
    if (env.is_free(c)) free_cands.push_back(c);

  if (!free_cands.empty()) {
    NeighborFields fields(env, free_cands);
    std::size_t best = 0;
    double best_score = -kInf;
    for (std::size_t i = 0; i < free_cands.size(); ++i) {
      const double s = score_with_fields(env, g, node_id, free_cands[i], cfg, fields);
      if (s > best_score + 1e-12) {
        best_score = s;
        best = i;
      }
    }
    out.nodes[node_id] = free_cands[best];
    return out;
  }

  // No free position nearby: drop the node and stitch its former neighbors
  // together in angular order around it.
  auto former = g.neighbors(node_id);
  out.remove_node(node_id);
  std::sort(former.begin(), former.end(), [&](NodeId x, NodeId y) {
    return normalize_angle(bearing(center, g.at(x))) < normalize_angle(bearing(center, g.at(y)));
  });
  std::vector<EdgeKey> added;
  if (former.size() == 2) {
    added.push_back(make_edge(former[0], former[1]));
  } else if (former.size() > 2) {
    for (std::size_t i = 0; i < former.size(); ++i) added.push_back(make_edge(former[i], former[(i + 1) % former.size()]));
  }
  for (const auto& e : added) {
    if (out.has_edge(e.first, e.second)) continue;
    out.add_edge(e.first, e.second);
    detour_in_place(env, out, e.first, e.second, cfg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Merging, fitting, refinement

namespace {

/// Merged position: the midpoint unless it breaks rewired edges, in which case
/// the free position (endpoints first, then the ring pattern around the
/// midpoint) keeping the most rewired edges collision free.
Point2 merge_position(const Environment& env, const NavGraph& g, NodeId keep, NodeId drop,
                      const std::vector<NodeId>& nbs, const RefineConfig& cfg) {
  Point2 mid = lerp(g.at(keep), g.at(drop), 0.5);
  if (!env.is_free(mid)) {
    if (auto snapped = env.nearest_free_point(mid)) mid = *snapped;
  }
  auto valid_edges = [&](Point2 p) {
    int n = 0;
    for (NodeId nb : nbs)
      if (env.segment_free(p, g.at(nb))) ++n;
    return n;
  };
  const int all = static_cast<int>(nbs.size());
  int best_n = env.is_free(mid) ? valid_edges(mid) : -1;
  if (best_n == all) return mid;
  Point2 best = mid;
  std::vector<Point2> cands{g.at(keep), g.at(drop)};
  for (const auto& c : ring_candidates(mid, cfg)) cands.push_back(c);
  for (const auto& c : cands) {
    if (!env.is_free(c)) continue;
    const int n = valid_edges(c);
    if (n > best_n) {
      best_n = n;
      best = c;
      if (n == all) break;
    }
  }
  return best;
}

NavGraph merge_impl(const Environment& env, const NavGraph& g, const RefineConfig& cfg,
                    const std::set<NodeId>& pinned) {
  NavGraph out = g;
  for (;;) {
    double best_d = cfg.merge_dist;
    std::optional<std::pair<NodeId, NodeId>> best;
    for (auto i = out.nodes.begin(); i != out.nodes.end(); ++i) {
      for (auto j = std::next(i); j != out.nodes.end(); ++j) {
        if (pinned.contains(i->first) && pinned.contains(j->first)) continue;
        const double d = distance(i->second, j->second);
        if (d < best_d) {
          best_d = d;
          best = std::pair{i->first, j->first};
        }
      }
    }
    if (!best) return out;
    auto [keep, drop] = *best;
    if (pinned.contains(drop)) std::swap(keep, drop);
    std::vector<NodeId> nbs;
    for (NodeId nb : out.neighbors(keep))
      if (nb != drop) nbs.push_back(nb);
    for (NodeId nb : out.neighbors(drop))
      if (nb != keep && std::find(nbs.begin(), nbs.end(), nb) == nbs.end()) nbs.push_back(nb);
    const Point2 pos = pinned.contains(keep) ? out.at(keep) : merge_position(env, out, keep, drop, nbs, cfg);
    for (NodeId nb : out.neighbors(drop))
      if (nb != keep) out.add_edge(keep, nb);
    out.remove_node(drop);
    out.nodes[keep] = pos;
  }
}

void connect_components(const Environment& env, NavGraph& g, const RefineConfig& cfg) {
  for (;;) {
    const auto label = g.components();
    std::map<int, int> sizes;
    for (const auto& [id, c] : label) ++sizes[c];
    if (sizes.size() <= 1) return;
    int main = 0;
    for (const auto& [c, n] : sizes)
      if (n > sizes[main]) main = c;
    // Smallest-labelled non-main component joins the main one.
    int other = -1;
    for (const auto& [c, n] : sizes)
      if (c != main) {
        other = c;
        break;
      }
    double best_d = kInf;
    NodeId u = -1;
    NodeId v = -1;
    for (const auto& [i, ci] : label) {
      if (ci != other) continue;
      for (const auto& [j, cj] : label) {
        if (cj != main) continue;
        const double d = distance(g.at(i), g.at(j));
        if (d < best_d) {
          best_d = d;
          u = i;
          v = j;
        }
      }
    }
    g.add_edge(u, v);
    detour_in_place(env, g, u, v, cfg);
    if (g.components().at(u) != g.components().at(v)) {
      // Geodesically separated from the main component: nothing can link it.
      std::vector<NodeId> drop;
      for (const auto& [i, ci] : label)
        if (ci == other) drop.push_back(i);
      for (NodeId i : drop) g.remove_node(i);
    }
  }
}

/// Returns the graph plus ids of nodes added for endpoints.
std::pair<NavGraph, std::set<NodeId>> fit_impl(const Environment& env, const NavGraph& g,
                                               std::span<const Point2> points, const RefineConfig& cfg) {
  NavGraph out = g;
  std::set<NodeId> added;
  for (const auto& p : points) {
    if (!env.is_free(p)) throw Error(ErrorCode::InvalidInput, "endpoint is not free");
    const GeodesicField field(env, p);
    double best = kInf;
    NodeId nearest = -1;
    for (const auto& [id, q] : out.nodes) {
      const double d = env.is_free(q) ? field.distance_to(q) : kInf;
      if (d < best) {
        best = d;
        nearest = id;
      }
    }
    if (nearest < 0) {
      if (out.nodes.empty()) {
        added.insert(out.add_node(p));
        continue;
      }
      throw Error(ErrorCode::UnreachableEndpoint, "endpoint is disconnected from every graph node");
    }
    if (best <= cfg.fit_dist) continue;
    const NodeId id = out.add_node(p);
    added.insert(id);
    out.add_edge(id, nearest);
    detour_in_place(env, out, id, nearest, cfg);
  }
  return {std::move(out), std::move(added)};
}

bool settle(const Environment& env, NavGraph& g, const RefineConfig& cfg, const std::set<NodeId>& pinned,
            int& iterations) {
  std::set<EdgeKey> recurring;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    ++iterations;
    std::vector<NodeId> ids;
    for (const auto& [id, p] : g.nodes) ids.push_back(id);
    for (NodeId id : ids) {
      if (g.nodes.contains(id) && !env.is_free(g.at(id))) g = adjust_node(env, g, id, cfg);
    }
    // Edges that a merge blocked again right after their detour are dropped
    // when the graph stays connected without them.
    for (const auto& e : recurring) {
      if (!g.has_edge(e.first, e.second) || env.segment_free(g.at(e.first), g.at(e.second))) continue;
      g.remove_edge(e.first, e.second);
      if (g.connected()) continue;
      g.add_edge(e.first, e.second);
    }
    const std::vector<EdgeKey> snapshot(g.edges.begin(), g.edges.end());
    for (const auto& e : snapshot) detour_in_place(env, g, e.first, e.second, cfg);
    connect_components(env, g, cfg);
    g = merge_impl(env, g, cfg, pinned);
    const auto v = check_navigable(env, g, cfg.merge_dist);
    if (v.ok()) return true;
    recurring = std::set<EdgeKey>(v.blocked_edges.begin(), v.blocked_edges.end());
  }
  return false;
}

}  // namespace

NavGraph merge_nodes(const Environment& env, const NavGraph& g, const RefineConfig& cfg) {
  return merge_impl(env, g, cfg, {});
}

NavGraph fit_endpoints(const Environment& env, const NavGraph& g, std::span<const Point2> points,
                       const RefineConfig& cfg) {
  return fit_impl(env, g, points, cfg).first;
}

RefineResult refine(const Environment& env, const NavGraph& g, std::span<const Point2> endpoints,
                    const RefineConfig& cfg) {
  RefineResult res{g, 0};
  if (!settle(env, res.graph, cfg, {}, res.iterations))
    throw Error(ErrorCode::RefinementDiverged, check_navigable(env, res.graph, cfg.merge_dist).describe());
  if (!endpoints.empty()) {
    auto [fitted, pinned] = fit_impl(env, res.graph, endpoints, cfg);
    res.graph = std::move(fitted);
    if (!settle(env, res.graph, cfg, pinned, res.iterations))
      throw Error(ErrorCode::RefinementDiverged, check_navigable(env, res.graph, cfg.merge_dist).describe());
  }
  return res;
}

GraphStats graph_stats(const NavGraph& g) {
  GraphStats s;
  s.node_count = static_cast<int>(g.nodes.size());
  s.edge_count = static_cast<int>(g.edges.size());
  std::map<NodeId, int> degree;
  for (const auto& [id, p] : g.nodes) degree[id] = 0;
  double total_len = 0.0;
  for (const auto& e : g.edges) {
    ++degree[e.first];
    ++degree[e.second];
    const double len = g.edge_length(e);
    total_len += len;
    const auto bin = static_cast<std::size_t>(std::floor(len / 0.25));
    if (s.edge_length_histogram.size() <= bin) s.edge_length_histogram.resize(bin + 1, 0);
    ++s.edge_length_histogram[bin];
  }
  for (const auto& [id, d] : degree) {
    const auto bin = static_cast<std::size_t>(d);
    if (s.degree_histogram.size() <= bin) s.degree_histogram.resize(bin + 1, 0);
    ++s.degree_histogram[bin];
  }
  if (s.node_count > 0) s.mean_degree = 2.0 * s.edge_count / s.node_count;
  if (s.edge_count > 0) s.mean_edge_length = total_len / s.edge_count;
  return s;
}

}  // namespace waygraph
