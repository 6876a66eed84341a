#include "waygraph/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "waygraph/error.hpp"
#include "waygraph/io.hpp"
#include "waygraph/rng.hpp"

namespace waygraph {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw Error(ErrorCode::Io, "sha256 failed");
  return io::hex_encode({md, len});
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::clamp(jobs, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------
// Spec

Profile ExperimentSpec::profile_of(std::uint64_t env_seed) const {
  return profiles[static_cast<std::size_t>(env_seed % profiles.size())];
}

std::vector<RunCombo> default_grid() {
  std::vector<RunCombo> g;
  auto add = [&](std::string name, std::string_view regime, PredictorKind pred, bool sliding = true,
                 bool augment = false, PolicyKind pol = PolicyKind::Greedy) {
    g.push_back({std::move(name), parse_regime(regime), pol, pred, sliding, augment});
  };
  add("oracle_graph", "high_teleport", PredictorKind::Graph, true, false, PolicyKind::Oracle);
  add("t1_select_teleport", "high_teleport", PredictorKind::Graph);
  add("t1_select", "graph_step", PredictorKind::Graph);
  add("t1_teleport", "aligned_teleport", PredictorKind::Graph);
  add("t1_low", "low_only", PredictorKind::Graph);
  for (const char* d : {"0.25", "1", "2", "3"}) {
    add(std::string("t2_select_d") + d, std::string("fixed_dist:") + d, PredictorKind::Graph);
    add(std::string("t2_noselect_d") + d, std::string("fixed_dist_noselect:") + d, PredictorKind::Graph);
  }
  add("t3_predictor", "high_teleport", PredictorKind::Trained);
  add("t3_predictor_aug", "high_teleport", PredictorKind::Trained, true, true);
  add("t3_geometric", "high_teleport", PredictorKind::Geometric);
  add("t7_sliding_on", "high_decompose", PredictorKind::Trained, true);
  add("t7_sliding_off", "high_decompose", PredictorKind::Trained, false);
  return g;
}

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw Error(ErrorCode::InvalidInput, "unknown key '" + k + "' in " + std::string(where));
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json combo_to_json(const RunCombo& c) {
  return {{"name", c.name},
          {"regime", c.regime.name()},
          {"policy", std::string(to_string(c.policy))},
          {"predictor", std::string(to_string(c.predictor))},
          {"sliding", c.sliding},
          {"augment", c.augment}};
}

}  // namespace

ExperimentSpec parse_spec(const json& j) {
  ExperimentSpec s;
  try {
    check_keys(j, {"name", "seed", "train_envs", "val_envs", "profiles", "graph", "predictor", "episodes", "sim", "grid"},
               "spec");
    read(j, "name", s.name);
    read(j, "seed", s.seed);
    read(j, "train_envs", s.train_envs);
    read(j, "val_envs", s.val_envs);
    if (j.contains("profiles")) {
      s.profiles.clear();
      for (const auto& p : j.at("profiles")) s.profiles.push_back(parse_profile(p.get<std::string>()));
    }
    if (j.contains("graph")) {
      const auto& g = j.at("graph");
      check_keys(g, {"spacing", "merge_dist", "max_iterations"}, "graph");
      read(g, "spacing", s.graph_spacing);
      read(g, "merge_dist", s.refine.merge_dist);
      read(g, "max_iterations", s.refine.max_iterations);
    }
    if (j.contains("predictor")) {
      const auto& p = j.at("predictor");
      check_keys(p, {"window_radius", "hidden", "epochs", "learning_rate", "weight_decay", "batch_size"}, "predictor");
      read(p, "window_radius", s.window_radius);
      read(p, "hidden", s.hidden);
      read(p, "epochs", s.train.epochs);
      read(p, "learning_rate", s.train.learning_rate);
      read(p, "weight_decay", s.train.weight_decay);
      read(p, "batch_size", s.train.batch_size);
    }
    if (j.contains("episodes")) {
      const auto& e = j.at("episodes");
      check_keys(e, {"per_env", "min_hops", "max_hops"}, "episodes");
      read(e, "per_env", s.episodes_per_env);
      read(e, "min_hops", s.min_hops);
      read(e, "max_hops", s.max_hops);
    }
    if (j.contains("sim")) {
      const auto& m = j.at("sim");
      check_keys(m, {"turn_lookahead", "max_steps_low", "max_steps_high", "deadlock_decisions"}, "sim");
      read(m, "turn_lookahead", s.sim.turn_lookahead);
      read(m, "max_steps_low", s.sim.max_steps_low);
      read(m, "max_steps_high", s.sim.max_steps_high);
      read(m, "deadlock_decisions", s.sim.deadlock_decisions);
    }
    if (j.contains("grid")) {
      for (const auto& c : j.at("grid")) {
        check_keys(c, {"name", "regime", "policy", "predictor", "sliding", "augment"}, "grid entry");
        RunCombo rc;
        rc.name = c.at("name").get<std::string>();
        rc.regime = parse_regime(c.at("regime").get<std::string>());
        rc.policy = parse_policy(c.value("policy", "greedy"));
        rc.predictor = parse_predictor(c.value("predictor", "graph"));
        rc.sliding = c.value("sliding", true);
        rc.augment = c.value("augment", false);
        s.grid.push_back(rc);
      }
    } else {
      s.grid = default_grid();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("spec: ") + e.what());
  }

  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidInput, "spec: " + m); };
  if (s.val_envs.empty()) bad("val_envs is empty");
  if (s.train_envs.empty()) bad("train_envs is empty");
  for (auto v : s.val_envs)
    if (std::find(s.train_envs.begin(), s.train_envs.end(), v) != s.train_envs.end())
      bad("environment " + std::to_string(v) + " is in both train_envs and val_envs");
  if (s.profiles.empty()) bad("profiles is empty");
  if (!(s.graph_spacing > 0.0)) bad("graph.spacing must be positive");
  if (s.episodes_per_env <= 0) bad("episodes.per_env must be positive");
  if (s.min_hops < 1 || s.max_hops < s.min_hops) bad("bad hop range");
  if (s.train.epochs <= 0 || s.train.batch_size <= 0 || !(s.train.learning_rate > 0.0)) bad("bad training config");
  if (s.window_radius < 0 || s.hidden <= 0) bad("bad predictor shape");
  std::set<std::string> names;
  for (const auto& c : s.grid) {
    if (c.name.empty() || c.name.find_first_of("/\\,\n") != std::string::npos) bad("bad combo name '" + c.name + "'");
    if (!names.insert(c.name).second) bad("duplicate combo name '" + c.name + "'");
  }
  if (s.grid.empty()) bad("grid is empty");
  s.train.seed = mix_seed(s.seed, 0x6d6f64656cULL);
  return s;
}

json spec_to_json(const ExperimentSpec& s) {
  json profiles = json::array();
  for (auto p : s.profiles) profiles.push_back(std::string(to_string(p)));
  json grid = json::array();
  for (const auto& c : s.grid) grid.push_back(combo_to_json(c));
  return {{"name", s.name},
          {"seed", s.seed},
          {"train_envs", s.train_envs},
          {"val_envs", s.val_envs},
          {"profiles", profiles},
          {"graph", {{"spacing", s.graph_spacing}, {"merge_dist", s.refine.merge_dist},
                     {"max_iterations", s.refine.max_iterations}}},
          {"predictor", {{"window_radius", s.window_radius}, {"hidden", s.hidden}, {"epochs", s.train.epochs},
                         {"learning_rate", s.train.learning_rate}, {"weight_decay", s.train.weight_decay},
                         {"batch_size", s.train.batch_size}}},
          {"episodes", {{"per_env", s.episodes_per_env}, {"min_hops", s.min_hops}, {"max_hops", s.max_hops}}},
          {"sim", {{"turn_lookahead", s.sim.turn_lookahead}, {"max_steps_low", s.sim.max_steps_low},
                   {"max_steps_high", s.sim.max_steps_high}, {"deadlock_decisions", s.sim.deadlock_decisions}}},
          {"grid", grid}};
}

// ---------------------------------------------------------------------------
// Stages

namespace {

std::string env_name(std::uint64_t seed) { return "env_" + std::to_string(seed); }

class Manifest {
 public:
  explicit Manifest(fs::path out) : out_(std::move(out)), path_(out_ / "manifest.json") {
    if (fs::exists(path_)) data_ = io::read_json(path_);
    if (!data_.contains("stages")) data_["stages"] = json::object();
  }

  /// True when the stage is recorded under `key` with every file present and
  /// intact. Throws ChecksumMismatch when a recorded file was modified.
  bool cached(const std::string& stage, const std::string& key) const {
    const auto& st = data_["stages"];
    if (!st.contains(stage) || st[stage].value("key", "") != key) return false;
    for (const auto& [rel, sum] : st[stage]["files"].items()) {
      const fs::path p = out_ / rel;
      if (!fs::exists(p)) return false;
      if (sha256_hex(io::read_file(p)) != sum.get<std::string>())
        throw Error(ErrorCode::ChecksumMismatch,
                    "stage '" + stage + "': " + rel + " does not match its recorded checksum");
    }
    return true;
  }

  void record(const std::string& stage, const std::string& key, const std::vector<std::string>& files) {
    json f = json::object();
    for (const auto& rel : files) f[rel] = sha256_hex(io::read_file(out_ / rel));
    data_["stages"][stage] = {{"key", key}, {"files", f}};
    io::write_json(path_, data_);
  }

  /// Digest over the checksums of a stage's files (its content address).
  std::string digest(const std::string& stage) const { return sha256_hex(data_["stages"][stage]["files"].dump()); }

 private:
  fs::path out_;
  fs::path path_;
  json data_;
};

struct Ctx {
  const ExperimentSpec& spec;
  fs::path out;
  int jobs;
  const Logger& log;
  Manifest manifest;
  std::vector<StageStatus> stages;

  void say(const std::string& m) const {
    if (log) log(m);
  }

  /// Runs `produce` (returning the files it wrote, relative to out) unless
  /// the stage is cached under the key derived from `config` and `inputs`.
  std::string stage(const std::string& name, const json& config, const std::vector<std::string>& inputs,
                    const std::function<std::vector<std::string>(const std::string& key)>& produce) {
    json k = {{"stage", name}, {"config", config}, {"inputs", json::array()}};
    for (const auto& in : inputs) k["inputs"].push_back(manifest.digest(in));
    const std::string key = sha256_hex(k.dump());
    if (manifest.cached(name, key)) {
      say("[" + name + "] cached");
      stages.push_back({name, true});
      return key;
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> files;
    try {
      files = produce(key);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ChecksumMismatch || e.code() == ErrorCode::StageFailure) throw;
      throw Error(ErrorCode::StageFailure, "stage '" + name + "': " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::StageFailure, "stage '" + name + "': " + e.what());
    }
    manifest.record(name, key, files);
    char buf[64];
    std::snprintf(buf, sizeof buf, " (%.2fs)", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    say("[" + name + "] done" + std::string(buf));
    stages.push_back({name, false});
    return key;
  }

  json meta(const std::string& key) const { return {{"config_hash", key}, {"seed", spec.seed}}; }

  std::vector<std::uint64_t> all_envs() const {
    auto v = spec.train_envs;
    v.insert(v.end(), spec.val_envs.begin(), spec.val_envs.end());
    return v;
  }
};

struct World {
  std::unique_ptr<Environment> env;
  NavGraph graph;
};

World load_world(const fs::path& out, std::uint64_t seed) {
  World w;
  w.env = std::make_unique<Environment>(io::load_env(out / "envs" / (env_name(seed) + ".json")));
  w.graph = io::load_graph(out / "graphs" / (env_name(seed) + ".json"));
  w.graph.env_id = env_name(seed);
  return w;
}

std::vector<std::pair<std::string, Summary>> summaries_of(const fs::path& out, const std::vector<RunCombo>& grid) {
  std::vector<std::pair<std::string, Summary>> rows;
  for (const auto& c : grid) {
    const auto j = io::read_json(out / "runs" / (c.name + ".json"));
    const auto& s = j.at("summary");
    Summary m;
    m.episodes = s.at("episodes");
    m.tl = s.at("tl");
    m.ne = s.at("ne");
    m.sr = s.at("sr");
    m.osr = s.at("osr");
    m.spl = s.at("spl");
    m.ndtw = s.at("ndtw");
    m.sdtw = s.at("sdtw");
    m.decisions = s.at("decisions");
    m.actions = s.at("actions");
    m.collisions = s.at("collisions");
    m.time_s = s.at("time_s");
    m.wall_time_s = s.at("wall_time_s");
    rows.emplace_back(c.name, m);
  }
  return rows;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentSpec& spec, const fs::path& out_dir, int jobs, const Logger& log) {
  fs::create_directories(out_dir);
  Ctx c{spec, out_dir, std::max(1, jobs), log, Manifest(out_dir), {}};
  const json sj = spec_to_json(spec);

  // Environments.
  c.stage("envs", {{"envs", c.all_envs()}, {"profiles", sj["profiles"]}}, {}, [&](const std::string& key) {
    const auto seeds = c.all_envs();
    std::vector<std::string> files(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), c.jobs, [&](int i) {
      const auto s = seeds[static_cast<std::size_t>(i)];
      const auto env = generate_environment(s, spec.profile_of(s));
      auto j = io::env_to_json(env);
      j["meta"] = c.meta(key);
      j["meta"]["profile"] = std::string(to_string(spec.profile_of(s)));
      files[static_cast<std::size_t>(i)] = "envs/" + env_name(s) + ".json";
      io::write_json(out_dir / files[static_cast<std::size_t>(i)], j);
    });
    return files;
  });

  // Graphs.
  c.stage("graphs", sj["graph"], {"envs"}, [&](const std::string& key) {
    const auto seeds = c.all_envs();
    std::vector<std::string> files(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), c.jobs, [&](int i) {
      const auto s = seeds[static_cast<std::size_t>(i)];
      const auto env = io::load_env(out_dir / "envs" / (env_name(s) + ".json"));
      const auto seeded = seed_graph(env, mix_seed(spec.seed, s, 0x6772617068ULL), spec.graph_spacing);
      const auto r = refine(env, seeded, {}, spec.refine);
      const auto st = graph_stats(r.graph);
      auto j = io::graph_to_json(r.graph, "../envs/" + env_name(s) + ".json");
      j["meta"] = c.meta(key);
      j["meta"]["iterations"] = r.iterations;
      j["meta"]["mean_degree"] = st.mean_degree;
      j["meta"]["mean_edge_length"] = st.mean_edge_length;
      files[static_cast<std::size_t>(i)] = "graphs/" + env_name(s) + ".json";
      io::write_json(out_dir / files[static_cast<std::size_t>(i)], j);
    });
    return files;
  });

  // Dataset.
  c.stage("dataset", json::object(), {"envs", "graphs"}, [&](const std::string& key) {
    std::vector<std::string> files;
    for (const auto& [split, seeds] : {std::pair{std::string("train"), spec.train_envs},
                                       std::pair{std::string("val"), spec.val_envs}}) {
      std::vector<std::vector<Sample>> per(seeds.size());
      parallel_for(static_cast<int>(seeds.size()), c.jobs, [&](int i) {
        const auto w = load_world(out_dir, seeds[static_cast<std::size_t>(i)]);
        per[static_cast<std::size_t>(i)] = build_training_set(*w.env, w.graph);
      });
      std::vector<Sample> all;
      for (auto& v : per) all.insert(all.end(), v.begin(), v.end());
      io::save_dataset(out_dir / "dataset" / split, all);
      auto idx = io::read_json(out_dir / "dataset" / (split + ".json"));
      idx["meta"] = c.meta(key);
      io::write_json(out_dir / "dataset" / (split + ".json"), idx);
      files.push_back("dataset/" + split + ".json");
      files.push_back("dataset/" + split + ".bin");
    }
    return files;
  });

  // Predictor.
  c.stage("model", sj["predictor"], {"dataset"}, [&](const std::string& key) {
    const auto tr = io::load_dataset(out_dir / "dataset" / "train.json");
    const auto va = io::load_dataset(out_dir / "dataset" / "val.json");
    const auto result =
        train(RegressorModel(spec.window_radius, spec.hidden, mix_seed(spec.seed, 0x696e6974ULL)), tr, va, spec.train);
    auto mj = io::model_to_json(result.model, &spec.train);
    mj["meta"] = c.meta(key);
    io::write_json(out_dir / "model" / "model.json", mj);

    std::map<std::string, std::unique_ptr<Environment>> envs;
    for (auto s : spec.val_envs)
      envs[env_name(s)] =
          std::make_unique<Environment>(io::load_env(out_dir / "envs" / (env_name(s) + ".json")));
    PredictorTally trained, geometric, oracle;
    double zeros = 0.0, geo_mse = 0.0;
    for (const auto& s : va) {
      const Environment& env = *envs.at(s.env_id);
      trained.add(nms(result.model.predict(s.scan)), s.waypoints, s.pose, env);
      const auto gp = geometric_predict(s.scan, env.agent_radius());
      geometric.add(nms(gp), s.waypoints, s.pose, env);
      oracle.add(nms(s.target), s.waypoints, s.pose, env);
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < s.target.values().size(); ++i) {
        const double t = s.target.values()[i];
        a += t * t;
        b += (gp.values()[i] - t) * (gp.values()[i] - t);
      }
      zeros += a / static_cast<double>(s.target.values().size());
      geo_mse += b / static_cast<double>(s.target.values().size());
    }
    auto rep = [](const PredictorReport& r) {
      return json{{"delta_abs", r.delta_abs}, {"pct_open", r.pct_open}, {"chamfer", r.chamfer},
                  {"hausdorff", r.hausdorff}, {"samples", r.samples}};
    };
    const double n = static_cast<double>(std::max<std::size_t>(1, va.size()));
    json log = {{"meta", c.meta(key)},
                {"train_loss", result.train_loss},
                {"val_loss", result.val_loss},
                {"val_mse", {{"trained", mean_loss(result.model, va)}, {"zeros", zeros / n}, {"geometric", geo_mse / n}}},
                {"val_metrics", {{"trained", rep(trained.report())}, {"geometric", rep(geometric.report())},
                                 {"oracle_nms", rep(oracle.report())}}}};
    io::write_json(out_dir / "model" / "eval.json", log);
    return std::vector<std::string>{"model/model.json", "model/eval.json"};
  });

  // Episodes.
  c.stage("episodes", sj["episodes"], {"envs", "graphs"}, [&](const std::string&) {
    std::vector<Episode> eps;
    for (auto s : spec.val_envs) {
      const auto w = load_world(out_dir, s);
      auto e = generate_episodes(*w.env, w.graph, spec.episodes_per_env, mix_seed(spec.seed, s, 0x657069ULL),
                                 spec.min_hops, spec.max_hops);
      eps.insert(eps.end(), e.begin(), e.end());
    }
    io::save_episodes(out_dir / "episodes" / "episodes.jsonl", eps);
    return std::vector<std::string>{"episodes/episodes.jsonl"};
  });

  // Runs.
  c.stage("runs", {{"grid", sj["grid"]}, {"sim", sj["sim"]}, {"seed", spec.seed}}, {"envs", "graphs", "model", "episodes"},
          [&](const std::string& key) {
            std::map<std::string, World> worlds;
            for (auto s : spec.val_envs) worlds.emplace(env_name(s), load_world(out_dir, s));
            const auto model = io::load_model(out_dir / "model" / "model.json");
            const auto eps = io::load_episodes(out_dir / "episodes" / "episodes.jsonl");
            std::vector<std::string> files;
            for (const auto& combo : spec.grid) {
              SimConfig cfg = spec.sim;
              cfg.allow_sliding = combo.sliding;
              RunOptions opt{combo.policy, combo.predictor, combo.regime, combo.augment, spec.seed};
              std::vector<EvalRecord> recs(eps.size());
              std::vector<std::string> trajs(eps.size());
              parallel_for(static_cast<int>(eps.size()), c.jobs, [&](int i) {
                const auto& ep = eps[static_cast<std::size_t>(i)];
                const World& w = worlds.at(ep.env_id);
                const EpisodeContext ctx{w.env.get(), &w.graph, &model};
                const auto t = run_episode(ctx, ep, opt, cfg);
                recs[static_cast<std::size_t>(i)] = evaluate_trajectory(*w.env, t, ep, cfg);
                std::ostringstream os;
                io::write_trajectory(os, ep.id, t);
                trajs[static_cast<std::size_t>(i)] = os.str();
              });
              std::ostringstream csv;
              io::write_results_csv(csv, recs);
              std::string tj;
              for (const auto& t : trajs) tj += t;
              const std::string base = "runs/" + combo.name;
              io::write_file(out_dir / (base + ".csv"), csv.str());
              io::write_file(out_dir / (base + ".traj.jsonl"), tj);
              io::write_json(out_dir / (base + ".json"), {{"meta", c.meta(key)},
                                                          {"combo", combo_to_json(combo)},
                                                          {"summary", io::summary_to_json(aggregate(recs))}});
              files.insert(files.end(), {base + ".csv", base + ".traj.jsonl", base + ".json"});
              c.say("  " + combo.name + " done");
            }
            return files;
          });

  // Report.
  c.stage("report", json::object(), {"runs", "model"}, [&](const std::string& key) {
    std::string csv(io::kResultsHeader);
    csv += '\n';
    for (const auto& combo : spec.grid) {
      const auto text = io::read_file(out_dir / "runs" / (combo.name + ".csv"));
      std::istringstream in(text);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line))
        if (!line.empty()) csv += combo.name + "/" + line + "\n";
    }
    io::write_file(out_dir / "report.csv", csv);
    const auto rows = summaries_of(out_dir, spec.grid);
    json combos = json::array();
    for (const auto& [name, s] : rows) combos.push_back({{"name", name}, {"summary", io::summary_to_json(s)}});
    json rj = {{"meta", c.meta(key)}, {"spec", sj}, {"combos", combos}};
    try {
      rj["tables"] = ablation_tables(out_dir);
    } catch (const Error& e) {
      rj["tables"] = {{"error", e.what()}};
    }
    rj["predictor"] = io::read_json(out_dir / "model" / "eval.json").at("val_metrics");
    io::write_json(out_dir / "report.json", rj);
    io::write_file(out_dir / "report.svg", report_svg(rows));
    return std::vector<std::string>{"report.csv", "report.json", "report.svg"};
  });

  return {c.stages, out_dir / "report.csv", out_dir / "report.json", out_dir / "report.svg"};
}

// ---------------------------------------------------------------------------
// Tables

json ablation_tables(const fs::path& out_dir) {
  auto summary = [&](const std::string& combo) {
    const fs::path p = out_dir / "runs" / (combo + ".json");
    if (!fs::exists(p)) throw Error(ErrorCode::StageFailure, "stage 'ablation': missing run " + p.string());
    return io::read_json(p).at("summary");
  };
  auto row = [&](const std::string& label, const std::string& combo) {
    const auto s = summary(combo);
    return json{{"row", label},          {"combo", combo},          {"sr", s["sr"]},
                {"spl", s["spl"]},       {"ndtw", s["ndtw"]},       {"decisions", s["decisions"]},
                {"actions", s["actions"]}, {"time_s", s["time_s"]}, {"wall_time_s", s["wall_time_s"]}};
  };
  json t1 = json::array({row("select+teleport", "t1_select_teleport"), row("select", "t1_select"),
                         row("teleport", "t1_teleport"), row("neither", "t1_low")});
  json t2 = json::array();
  for (const char* d : {"0.25", "1", "2", "3"}) {
    t2.push_back(row(std::string("select D=") + d, std::string("t2_select_d") + d));
    t2.push_back(row(std::string("no select D=") + d, std::string("t2_noselect_d") + d));
  }
  json t3 = json::array({row("graph", "t1_select_teleport"), row("predictor", "t3_predictor"),
                         row("predictor+augment", "t3_predictor_aug"), row("low-level", "t1_low")});
  json t7 = json::array({row("sliding on", "t7_sliding_on"), row("sliding off", "t7_sliding_off")});

  auto sr = [](const json& r) { return r["sr"].get<double>(); };
  auto tm = [](const json& r, const char* k) { return r[k].get<double>(); };
  json checks = {
      {"table1_select_teleport_sr_ge_neither", sr(t1[0]) >= sr(t1[3])},
      {"table2_time_decreasing_1_2_3", tm(t2[2], "time_s") > tm(t2[4], "time_s") && tm(t2[4], "time_s") > tm(t2[6], "time_s")},
      {"table2_wall_time_decreasing_1_2_3",
       tm(t2[2], "wall_time_s") > tm(t2[4], "wall_time_s") && tm(t2[4], "wall_time_s") > tm(t2[6], "wall_time_s")},
      {"table7_sr_off_le_on", sr(t7[1]) <= sr(t7[0])}};
  return {{"table1", t1}, {"table2", t2}, {"table3", t3}, {"table7", t7}, {"checks", checks}};
}

std::string ablation_markdown(const json& tables) {
  std::ostringstream os;
  char buf[256];
  for (const auto& [key, title] : {std::pair{"table1", "Select / teleport (graph waypoints)"},
                                   std::pair{"table2", "Fixed forward distance"},
                                   std::pair{"table3", "Graph vs predicted waypoints"},
                                   std::pair{"table7", "Sliding"}}) {
    os << "## " << title << "\n\n| row | SR | SPL | nDTW | decisions | actions | time_s | wall_s |\n"
       << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : tables.at(key)) {
      std::snprintf(buf, sizeof buf, "| %s | %.1f | %.3f | %.3f | %.1f | %.1f | %.4f | %.4f |\n",
                    r["row"].get<std::string>().c_str(), r["sr"].get<double>(), r["spl"].get<double>(),
                    r["ndtw"].get<double>(), r["decisions"].get<double>(), r["actions"].get<double>(),
                    r["time_s"].get<double>(), r["wall_time_s"].get<double>());
      os << buf;
    }
    os << '\n';
  }
  os << "## Checks\n\n";
  for (const auto& [k, v] : tables.at("checks").items()) os << "- " << k << ": " << (v.get<bool>() ? "yes" : "no") << '\n';
  return os.str();
}

std::string report_svg(const std::vector<std::pair<std::string, Summary>>& rows) {
  constexpr int kLabelW = 170, kBarW = 260, kGap = 30, kRowH = 16, kTop = 40;
  const int panels = 3;
  const int width = kLabelW + panels * (kBarW + kGap) + 20;
  const int height = kTop + static_cast<int>(rows.size()) * kRowH + 20;
  double max_dec = 1.0;
  for (const auto& [n, s] : rows) max_dec = std::max(max_dec, s.decisions);
  struct Panel {
    const char* title;
    double scale;
    double (*get)(const Summary&);
    const char* fmt;
  };
  const Panel ps[] = {{"SR (%)", 100.0, [](const Summary& s) { return s.sr; }, "%.1f"},
                      {"SPL", 1.0, [](const Summary& s) { return s.spl; }, "%.3f"},
                      {"decisions", max_dec, [](const Summary& s) { return s.decisions; }, "%.1f"}};
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"monospace\" "
                "font-size=\"11\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                width, height);
  os << buf;
  for (int p = 0; p < panels; ++p) {
    const int x0 = kLabelW + p * (kBarW + kGap);
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" font-weight=\"bold\">%s</text>\n", x0, kTop - 14,
                  ps[p].title);
    os << buf;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double v = ps[p].get(rows[i].second);
      const double w = std::clamp(v / ps[p].scale, 0.0, 1.0) * kBarW;
      const int y = kTop + static_cast<int>(i) * kRowH;
      char val[32];
      std::snprintf(val, sizeof val, ps[p].fmt, v);
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%d\" y=\"%d\" width=\"%.1f\" height=\"%d\" fill=\"#4c78a8\"/>"
                    "<text x=\"%.1f\" y=\"%d\">%s</text>\n",
                    x0, y, w, kRowH - 4, x0 + w + 3, y + kRowH - 6, val);
      os << buf;
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"6\" y=\"%d\">%s</text>\n",
                  kTop + static_cast<int>(i) * kRowH + kRowH - 6, rows[i].first.c_str());
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace waygraph
