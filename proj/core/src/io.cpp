#include "waygraph/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "waygraph/error.hpp"

namespace waygraph::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view data) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + p.string());
  }
  fs::rename(tmp, p);
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(1) + "\n"); }

namespace {

json point(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::InvalidInput, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <class F>
auto guarded(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string(what) + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

json env_to_json(const Environment& env) {
  const auto& b = env.bounds();
  json obs = json::array();
  for (const auto& poly : env.obstacles()) {
    json vs = json::array();
    for (const auto& v : poly.vertices) vs.push_back(point(v));
    obs.push_back(vs);
  }
  return {{"bounds", {b.x0, b.y0, b.x1, b.y1}},
          {"cell_size", env.cell_size()},
          {"agent_radius", env.agent_radius()},
          {"obstacles", obs}};
}

Environment env_from_json(const json& j) {
  return guarded("environment", [&] {
    const auto& b = j.at("bounds");
    if (!b.is_array() || b.size() != 4) throw Error(ErrorCode::InvalidInput, "bounds must be [x0,y0,x1,y1]");
    std::vector<Polygon> obs;
    for (const auto& poly : j.at("obstacles")) {
      Polygon p;
      for (const auto& v : poly) p.vertices.push_back(point_from(v));
      obs.push_back(std::move(p));
    }
    return Environment(Bounds{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()},
                       std::move(obs), j.value("cell_size", 0.05), j.value("agent_radius", 0.10));
  });
}

Environment load_env(const fs::path& p) { return env_from_json(read_json(p)); }

// ---------------------------------------------------------------------------

json graph_to_json(const NavGraph& g, const std::string& env_ref) {
  json nodes = json::object();
  for (const auto& [id, p] : g.nodes) nodes[std::to_string(id)] = point(p);
  json edges = json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({std::to_string(a), std::to_string(b)});
  return {{"env", env_ref}, {"nodes", nodes}, {"edges", edges}};
}

NavGraph graph_from_json(const json& j, std::string* env_ref) {
  return guarded("graph", [&] {
    NavGraph g;
    auto parse_id = [](const std::string& s) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || v < 0) throw Error(ErrorCode::InvalidInput, "node id '" + s + "' is not an integer");
      return v;
    };
    for (const auto& [key, p] : j.at("nodes").items()) {
      const NodeId id = parse_id(key);
      g.nodes[id] = point_from(p);
      g.next_id = std::max(g.next_id, id + 1);
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::InvalidInput, "edge must be [a, b]");
      auto id_of = [&](const json& v) { return v.is_string() ? parse_id(v.get<std::string>()) : v.get<int>(); };
      const NodeId a = id_of(e[0]), b = id_of(e[1]);
      if (!g.nodes.contains(a) || !g.nodes.contains(b) || a == b)
        throw Error(ErrorCode::InvalidInput, "edge references an unknown node");
      g.add_edge(a, b);
    }
    const std::string ref = j.value("env", "");
    if (env_ref) *env_ref = ref;
    g.env_id = fs::path(ref).stem().string();
    return g;
  });
}

NavGraph load_graph(const fs::path& p, std::string* env_ref) { return graph_from_json(read_json(p), env_ref); }

// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, double v) {
  const float f = static_cast<float>(v);
  char b[4];
  std::memcpy(b, &f, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view s, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, s.data() + at, 4);
  return v;
}

float get_f32(std::string_view s, std::size_t at) {
  float v;
  std::memcpy(&v, s.data() + at, 4);
  return v;
}

constexpr std::size_t kPwhmSize = 12 + 4 * kAngleBins * kDistBins;

}  // namespace

std::string encode_pwhm(const PolarGrid& g) {
  std::string out = "PWHM";
  out.reserve(kPwhmSize);
  put_u32(out, kAngleBins);
  put_u32(out, kDistBins);
  for (double v : g.values()) put_f32(out, v);
  return out;
}

PolarGrid decode_pwhm(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "PWHM") throw Error(ErrorCode::InvalidInput, "not a PWHM heatmap");
  const auto na = get_u32(bytes, 4), nd = get_u32(bytes, 8);
  if (na != kAngleBins || nd != kDistBins)
    throw Error(ErrorCode::InvalidInput,
                "heatmap is " + std::to_string(na) + "x" + std::to_string(nd) + ", expected 120x12");
  if (bytes.size() != kPwhmSize) throw Error(ErrorCode::InvalidInput, "heatmap payload has the wrong length");
  PolarGrid g;
  auto v = g.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = get_f32(bytes, 12 + 4 * i);
  return g;
}

json heatmap_to_json(const PolarGrid& g) {
  json rows = json::array();
  for (int a = 0; a < kAngleBins; ++a) {
    json row = json::array();
    for (int d = 0; d < kDistBins; ++d) row.push_back(static_cast<float>(g.at(a, d)));
    rows.push_back(row);
  }
  return {{"n_angles", kAngleBins}, {"n_dists", kDistBins}, {"values", rows}};
}

std::string hex_encode(std::span<const unsigned char> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 15]);
  }
  return out;
}

std::vector<unsigned char> hex_decode(std::string_view hex) {
  if (hex.size() % 2) throw Error(ErrorCode::InvalidInput, "odd-length hex string");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::InvalidInput, "bad hex digit");
  };
  std::vector<unsigned char> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<unsigned char>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
  return out;
}

// ---------------------------------------------------------------------------

json model_to_json(const RegressorModel& m, const TrainConfig* cfg) {
  std::string blob;
  blob.reserve(m.param_count() * 4);
  for (double v : m.params()) put_f32(blob, v);
  json j = {{"format", "waygraph-regressor"},
            {"window_radius", m.window_radius()},
            {"hidden", m.hidden()},
            {"inputs", m.input_size()},
            {"outputs", kDistBins},
            {"param_count", m.param_count()},
            {"seed", m.seed()},
            {"weights", hex_encode({reinterpret_cast<const unsigned char*>(blob.data()), blob.size()})}};
  if (cfg) {
    j["train"] = {{"learning_rate", cfg->learning_rate}, {"weight_decay", cfg->weight_decay},
                  {"batch_size", cfg->batch_size},       {"epochs", cfg->epochs},
                  {"seed", cfg->seed},                   {"beta1", cfg->beta1},
                  {"beta2", cfg->beta2},                 {"eps", cfg->eps}};
  }
  return j;
}

RegressorModel model_from_json(const json& j) {
  return guarded("model", [&] {
    if (j.value("format", "") != "waygraph-regressor") throw Error(ErrorCode::InvalidInput, "not a regressor model");
    RegressorModel m(j.at("window_radius").get<int>(), j.at("hidden").get<int>(), j.at("seed").get<std::uint64_t>());
    const auto bytes = hex_decode(j.at("weights").get<std::string>());
    if (bytes.size() != m.param_count() * 4)
      throw Error(ErrorCode::InvalidInput, "weight blob does not match the model shape");
    const std::string_view sv(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    auto p = m.params();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = get_f32(sv, 4 * i);
    return m;
  });
}

RegressorModel load_model(const fs::path& p) { return model_from_json(read_json(p)); }

// ---------------------------------------------------------------------------

void save_dataset(const fs::path& base, std::span<const Sample> samples) {
  std::string bin;
  json records = json::array();
  fs::path bin_path = base;
  bin_path += ".bin";
  for (const auto& s : samples) {
    const std::size_t offset = bin.size();
    for (double r : s.scan) put_f32(bin, r);
    bin += encode_pwhm(s.target);
    json wps = json::array();
    for (const auto& w : s.waypoints) wps.push_back({w.angle, w.distance});
    records.push_back({{"env_id", s.env_id},
                       {"node", s.node},
                       {"pose", {s.pose.position.x, s.pose.position.y, s.pose.heading}},
                       {"offset", offset},
                       {"size", bin.size() - offset},
                       {"waypoints", wps}});
  }
  write_file(bin_path, bin);
  fs::path idx = base;
  idx += ".json";
  write_json(idx, {{"format", "waygraph-dataset"}, {"data", bin_path.filename().string()}, {"records", records}});
}

std::vector<Sample> load_dataset(const fs::path& index) {
  const json j = read_json(index);
  return guarded("dataset", [&] {
    if (j.value("format", "") != "waygraph-dataset") throw Error(ErrorCode::InvalidInput, "not a dataset index");
    const std::string bin = read_file(index.parent_path() / j.at("data").get<std::string>());
    std::vector<Sample> out;
    for (const auto& r : j.at("records")) {
      const auto offset = r.at("offset").get<std::size_t>();
      const auto size = r.at("size").get<std::size_t>();
      if (offset + size > bin.size() || size != 4 * kAngleBins + kPwhmSize)
        throw Error(ErrorCode::InvalidInput, "dataset record out of range");
      Sample s;
      s.env_id = r.at("env_id").get<std::string>();
      s.node = r.at("node").get<int>();
      const auto& pose = r.at("pose");
      s.pose = Pose{{pose[0].get<double>(), pose[1].get<double>()}, pose[2].get<double>()};
      for (int i = 0; i < kAngleBins; ++i) s.scan[static_cast<std::size_t>(i)] = get_f32(bin, offset + 4 * i);
      s.target = decode_pwhm(std::string_view(bin).substr(offset + 4 * kAngleBins, kPwhmSize));
      for (const auto& w : r.at("waypoints")) s.waypoints.push_back({w[0].get<double>(), w[1].get<double>()});
      out.push_back(std::move(s));
    }
    return out;
  });
}

// ---------------------------------------------------------------------------

json episode_to_json(const Episode& ep) {
  json path = json::array();
  for (const auto& p : ep.gt_path) path.push_back(point(p));
  return {{"id", ep.id},
          {"env_id", ep.env_id},
          {"start", {ep.start.position.x, ep.start.position.y, ep.start.heading}},
          {"goal", point(ep.goal)},
          {"hops", ep.hops},
          {"gt_path", path}};
}

Episode episode_from_json(const json& j) {
  return guarded("episode", [&] {
    Episode ep;
    ep.id = j.at("id").get<std::string>();
    ep.env_id = j.at("env_id").get<std::string>();
    const auto& s = j.at("start");
    ep.start = Pose{{s[0].get<double>(), s[1].get<double>()}, s[2].get<double>()};
    ep.goal = point_from(j.at("goal"));
    ep.hops = j.value("hops", 0);
    for (const auto& p : j.at("gt_path")) ep.gt_path.push_back(point_from(p));
    return ep;
  });
}

void save_episodes(const fs::path& p, std::span<const Episode> eps) {
  std::string out;
  for (const auto& ep : eps) out += episode_to_json(ep).dump() + "\n";
  write_file(p, out);
}

std::vector<Episode> load_episodes(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<Episode> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(episode_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_trajectory(std::ostream& os, const std::string& episode_id, const Trajectory& t) {
  for (std::size_t i = 0; i < t.poses.size(); ++i) {
    json line = {{"episode", episode_id},
                 {"step", i},
                 {"x", t.poses[i].position.x},
                 {"y", t.poses[i].position.y},
                 {"heading", t.poses[i].heading}};
    if (i == 0) {
      line["action"] = nullptr;
      line["collided"] = false;
      line["decisions"] = t.decisions;
      line["timed_out"] = t.timed_out;
      line["time_s"] = t.work_time;
      line["wall_time_s"] = t.wall_time;
    } else {
      line["action"] = std::string(to_string(t.actions[i - 1].kind));
      line["collided"] = t.actions[i - 1].collided;
    }
    os << line.dump() << '\n';
  }
}

std::vector<std::pair<std::string, Trajectory>> read_trajectories(std::string_view text) {
  std::vector<std::pair<std::string, Trajectory>> out;
  std::map<std::string, std::size_t> at;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto id = j.at("episode").get<std::string>();
      const Pose pose{{j.at("x").get<double>(), j.at("y").get<double>()}, j.at("heading").get<double>()};
      if (j.at("step").get<std::size_t>() == 0) {
        if (at.contains(id)) throw Error(ErrorCode::InvalidInput, "episode " + id + " logged twice");
        at[id] = out.size();
        Trajectory t;
        t.poses.push_back(pose);
        t.decisions = j.value("decisions", 0);
        t.timed_out = j.value("timed_out", false);
        t.work_time = j.value("time_s", 0.0);
        t.wall_time = j.value("wall_time_s", 0.0);
        out.emplace_back(id, std::move(t));
        continue;
      }
      if (!at.contains(id)) throw Error(ErrorCode::InvalidInput, "episode " + id + " has no start line");
      Trajectory& t = out[at[id]].second;
      if (j.at("step").get<std::size_t>() != t.poses.size())
        throw Error(ErrorCode::InvalidInput, "episode " + id + " steps out of order");
      static const std::map<std::string, ActionKind, std::less<>> kinds = {
          {"turn_left", ActionKind::TurnLeft}, {"turn_right", ActionKind::TurnRight},
          {"forward", ActionKind::Forward},    {"teleport", ActionKind::Teleport},
          {"escape", ActionKind::Escape},      {"stop", ActionKind::Stop}};
      const auto k = kinds.find(j.at("action").get<std::string>());
      if (k == kinds.end()) throw Error(ErrorCode::InvalidInput, "unknown action");
      const bool collided = j.value("collided", false);
      t.poses.push_back(pose);
      t.actions.push_back({k->second, collided});
      if (collided) ++t.collisions;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, "trajectory line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_results_csv(std::ostream& os, std::span<const EvalRecord> records) {
  os << kResultsHeader << '\n';
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%d,%d,%.6f,%.6f,%.6f,%d,%d,%d,%.6f\n", r.tl, r.ne, r.success ? 1 : 0,
                  r.oracle_success ? 1 : 0, r.spl, r.ndtw, r.sdtw, r.decisions, r.actions, r.collisions, r.time_s);
    os << r.id << buf;
  }
}

std::vector<EvalRecord> read_results_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw Error(ErrorCode::InvalidInput, "results header does not match");
  std::vector<EvalRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 12) throw Error(ErrorCode::InvalidInput, "results row has " + std::to_string(f.size()) + " fields");
    EvalRecord r;
    r.id = f[0];
    r.tl = std::stod(f[1]);
    r.ne = std::stod(f[2]);
    r.success = f[3] == "1";
    r.oracle_success = f[4] == "1";
    r.spl = std::stod(f[5]);
    r.ndtw = std::stod(f[6]);
    r.sdtw = std::stod(f[7]);
    r.decisions = std::stoi(f[8]);
    r.actions = std::stoi(f[9]);
    r.collisions = std::stoi(f[10]);
    r.time_s = std::stod(f[11]);
    out.push_back(r);
  }
  return out;
}

json summary_to_json(const Summary& s) {
  return {{"episodes", s.episodes},   {"tl", s.tl},     {"ne", s.ne},       {"sr", s.sr},
          {"osr", s.osr},             {"spl", s.spl},   {"ndtw", s.ndtw},   {"sdtw", s.sdtw},
          {"decisions", s.decisions}, {"actions", s.actions}, {"collisions", s.collisions},
          {"time_s", s.time_s},       {"wall_time_s", s.wall_time_s}};
}

}  // namespace waygraph::io
