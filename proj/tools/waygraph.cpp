// waygraph command line: environment / graph / dataset / predictor / episode
// tooling and the experiment pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "waygraph/envgen.hpp"
#include "waygraph/error.hpp"
#include "waygraph/io.hpp"
#include "waygraph/metrics.hpp"
#include "waygraph/navgraph.hpp"
#include "waygraph/pipeline.hpp"
#include "waygraph/predictor.hpp"
#include "waygraph/rng.hpp"
#include "waygraph/sim.hpp"

namespace fs = std::filesystem;
using namespace waygraph;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Globals {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = ".";
};

fs::path out_path(const Globals& g, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : fs::path(g.out_dir) / q;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

/// Environments and graphs keyed by env id (file stem).
struct Worlds {
  std::map<std::string, std::unique_ptr<Environment>> envs;
  std::map<std::string, NavGraph> graphs;

  void load(const std::vector<std::string>& env_files, const std::vector<std::string>& graph_files) {
    for (const auto& f : env_files) envs[fs::path(f).stem().string()] = std::make_unique<Environment>(io::load_env(f));
    for (const auto& f : graph_files) {
      auto g = io::load_graph(f);
      if (g.env_id.empty()) g.env_id = fs::path(f).stem().string();
      graphs[g.env_id] = std::move(g);
    }
  }

  const Environment& env(const std::string& id) const {
    const auto it = envs.find(id);
    if (it == envs.end()) throw Error(ErrorCode::InvalidInput, "no --env given for environment '" + id + "'");
    return *it->second;
  }

  const NavGraph* graph(const std::string& id) const {
    const auto it = graphs.find(id);
    return it == graphs.end() ? nullptr : &it->second;
  }
};

bool parse_switch(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw Error(ErrorCode::InvalidInput, "expected on/off, got '" + v + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"waygraph: waypoint graphs, polar heatmaps and navigation episodes in 2D"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for relative outputs")->capture_default_str();
  app.fallthrough();

  std::function<int()> action;

  // gen-env
  auto* gen = app.add_subcommand("gen-env", "Generate a procedural environment");
  std::string profile = "rooms", env_out = "env.json";
  double agent_radius = 0.10;
  gen->add_option("--profile", profile, "rooms | corridors | clutter")->capture_default_str();
  gen->add_option("--agent-radius", agent_radius)->capture_default_str();
  gen->add_option("--out", env_out)->capture_default_str();
  gen->callback([&] {
    action = [&] {
      GenOptions o;
      o.agent_radius = agent_radius;
      const auto env = generate_environment(g.seed, parse_profile(profile), o);
      io::write_json(out_path(g, env_out), io::env_to_json(env));
      std::cout << "wrote " << out_path(g, env_out).string() << " (" << env.obstacles().size() << " obstacles)\n";
      return 0;
    };
  });

  // graph seed | refine | stats
  auto* graph = app.add_subcommand("graph", "Seed, refine or inspect a navigation graph");
  graph->require_subcommand(1);
  std::string env_file, graph_in, graph_out = "graph.json", fit_file;
  double spacing = 1.5, merge_dist = 0.5;

  auto* gseed = graph->add_subcommand("seed", "Poisson-disc nodes with Delaunay edges");
  gseed->add_option("--env", env_file)->required();
  gseed->add_option("--spacing", spacing)->capture_default_str();
  gseed->add_option("--out", graph_out)->capture_default_str();
  gseed->callback([&] {
    action = [&] {
      const auto env = io::load_env(env_file);
      const auto gr = seed_graph(env, g.seed, spacing);
      io::write_json(out_path(g, graph_out), io::graph_to_json(gr, env_file));
      std::cout << "seeded " << gr.nodes.size() << " nodes, " << gr.edges.size() << " edges\n";
      return 0;
    };
  });

  auto* grefine = graph->add_subcommand("refine", "Make a graph navigable");
  grefine->add_option("--env", env_file)->required();
  grefine->add_option("--in", graph_in)->required();
  grefine->add_option("--out", graph_out)->capture_default_str();
  grefine->add_option("--merge-dist", merge_dist)->capture_default_str();
  grefine->add_option("--fit", fit_file, "JSON list of [x,y] endpoints to fit");
  grefine->callback([&] {
    action = [&] {
      const auto env = io::load_env(env_file);
      const auto in = io::load_graph(graph_in);
      std::vector<Point2> fit;
      if (!fit_file.empty()) {
        for (const auto& p : io::read_json(fit_file)) fit.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      RefineConfig cfg;
      cfg.merge_dist = merge_dist;
      const auto r = refine(env, in, fit, cfg);
      io::write_json(out_path(g, graph_out), io::graph_to_json(r.graph, env_file));
      const auto st = graph_stats(r.graph);
      std::printf("refined in %d iterations: %d nodes, %d edges, mean degree %.2f, mean edge %.2f m\n", r.iterations,
                  st.node_count, st.edge_count, st.mean_degree, st.mean_edge_length);
      return 0;
    };
  });

  auto* gstats = graph->add_subcommand("stats", "Degree / edge-length statistics");
  gstats->add_option("--in", graph_in)->required();
  gstats->add_option("--env", env_file, "Also check navigability against this environment");
  gstats->callback([&] {
    action = [&] {
      const auto gr = io::load_graph(graph_in);
      const auto st = graph_stats(gr);
      json j = {{"nodes", st.node_count},
                {"edges", st.edge_count},
                {"mean_degree", st.mean_degree},
                {"mean_edge_length", st.mean_edge_length},
                {"degree_histogram", st.degree_histogram},
                {"edge_length_histogram", st.edge_length_histogram},
                {"connected", gr.connected()}};
      if (!env_file.empty()) {
        const auto v = check_navigable(io::load_env(env_file), gr, merge_dist);
        j["navigable"] = v.ok();
        if (!v.ok()) j["violations"] = v.describe();
      }
      print_json(j);
      return 0;
    };
  });

  // dataset build
  auto* dataset = app.add_subcommand("dataset", "Predictor training data");
  dataset->require_subcommand(1);
  std::vector<std::string> env_files, graph_files;
  std::string dataset_out = "dataset";
  auto* dbuild = dataset->add_subcommand("build", "Scans and target heatmaps at every graph node");
  dbuild->add_option("--env", env_files, "Environment files (stem = env id)")->required();
  dbuild->add_option("--graph", graph_files, "Graph files referencing those environments")->required();
  dbuild->add_option("--out", dataset_out, "Output base path (.bin + .json)")->capture_default_str();
  dbuild->callback([&] {
    action = [&] {
      Worlds w;
      w.load(env_files, graph_files);
      std::vector<Sample> all;
      for (const auto& [id, gr] : w.graphs) {
        auto s = build_training_set(w.env(id), gr);
        all.insert(all.end(), s.begin(), s.end());
      }
      io::save_dataset(out_path(g, dataset_out), all);
      std::cout << "wrote " << all.size() << " samples\n";
      return 0;
    };
  });

  // predictor train | eval
  auto* predictor = app.add_subcommand("predictor", "Train or evaluate the waypoint regressor");
  predictor->require_subcommand(1);
  std::string ds_file, val_file, model_file = "model.json";
  TrainConfig tcfg;
  int window_radius = 1, hidden = 64;
  auto* ptrain = predictor->add_subcommand("train", "Fit the regressor");
  ptrain->add_option("--dataset", ds_file, "Dataset index (.json)")->required();
  ptrain->add_option("--val", val_file, "Validation dataset index");
  ptrain->add_option("--model", model_file)->capture_default_str();
  ptrain->add_option("--epochs", tcfg.epochs)->capture_default_str();
  ptrain->add_option("--lr", tcfg.learning_rate)->capture_default_str();
  ptrain->add_option("--batch", tcfg.batch_size)->capture_default_str();
  ptrain->add_option("--window-radius", window_radius)->capture_default_str();
  ptrain->add_option("--hidden", hidden)->capture_default_str();
  ptrain->callback([&] {
    action = [&] {
      const auto tr = io::load_dataset(ds_file);
      const auto va = val_file.empty() ? std::vector<Sample>{} : io::load_dataset(val_file);
      tcfg.seed = g.seed;
      const auto r = train(RegressorModel(window_radius, hidden, g.seed), tr, va, tcfg);
      io::write_json(out_path(g, model_file), io::model_to_json(r.model, &tcfg));
      std::printf("train mse %.5f", r.train_loss.back());
      if (!va.empty()) std::printf(", val mse %.5f", r.val_loss.back());
      std::printf("\n");
      return 0;
    };
  });

  std::string which = "trained";
  auto* peval = predictor->add_subcommand("eval", "|Delta|, %Open, Chamfer and Hausdorff on a dataset");
  peval->add_option("--dataset", ds_file)->required();
  peval->add_option("--model", model_file);
  peval->add_option("--env", env_files, "Environment files of the dataset records")->required();
  peval->add_option("--predictor", which, "trained | geometric | oracle")->capture_default_str();
  peval->callback([&] {
    action = [&] {
      const auto ds = io::load_dataset(ds_file);
      Worlds w;
      w.load(env_files, {});
      RegressorModel model;
      if (which == "trained") model = io::load_model(model_file);
      else if (which != "geometric" && which != "oracle")
        throw Error(ErrorCode::InvalidInput, "unknown predictor '" + which + "'");
      PredictorTally tally;
      for (const auto& s : ds) {
        const auto& env = w.env(s.env_id);
        const PolarGrid grid = which == "trained"     ? model.predict(s.scan)
                               : which == "geometric" ? geometric_predict(s.scan, env.agent_radius())
                                                      : s.target;
        tally.add(nms(grid), s.waypoints, s.pose, env);
      }
      const auto r = tally.report();
      print_json({{"predictor", which},
                  {"samples", r.samples},
                  {"delta_abs", r.delta_abs},
                  {"pct_open", r.pct_open},
                  {"chamfer", r.chamfer},
                  {"hausdorff", r.hausdorff}});
      return 0;
    };
  });

  // episodes gen
  auto* episodes = app.add_subcommand("episodes", "Episode generation");
  episodes->require_subcommand(1);
  int count = 100, min_hops = 4, max_hops = 7;
  std::string episodes_out = "episodes.jsonl";
  auto* egen = episodes->add_subcommand("gen", "Random shortest graph paths");
  egen->add_option("--env", env_files)->required();
  egen->add_option("--graph", graph_files)->required();
  egen->add_option("--count", count, "Episodes per environment")->capture_default_str();
  egen->add_option("--min-hops", min_hops)->capture_default_str();
  egen->add_option("--max-hops", max_hops)->capture_default_str();
  egen->add_option("--out", episodes_out)->capture_default_str();
  egen->callback([&] {
    action = [&] {
      Worlds w;
      w.load(env_files, graph_files);
      std::vector<Episode> all;
      std::uint64_t k = 0;
      for (const auto& [id, gr] : w.graphs) {
        auto e = generate_episodes(w.env(id), gr, count, mix_seed(g.seed, k++), min_hops, max_hops);
        all.insert(all.end(), e.begin(), e.end());
      }
      io::save_episodes(out_path(g, episodes_out), all);
      std::cout << "wrote " << all.size() << " episodes\n";
      return 0;
    };
  });

  // run
  auto* run = app.add_subcommand("run", "Run episodes and log trajectories");
  std::string episodes_file, regime = "high_teleport", pred = "graph", policy = "greedy", sliding = "on",
                             augment = "off", traj_out = "traj.jsonl", results_out;
  run->add_option("--episodes", episodes_file)->required();
  run->add_option("--env", env_files)->required();
  run->add_option("--graph", graph_files);
  std::string run_model;
  run->add_option("--model", run_model);
  run->add_option("--regime", regime)->capture_default_str();
  run->add_option("--predictor", pred, "graph | geometric | trained")->capture_default_str();
  run->add_option("--policy", policy, "oracle | oracle_rxr | greedy | random")->capture_default_str();
  run->add_option("--sliding", sliding)->capture_default_str();
  run->add_option("--augment", augment)->capture_default_str();
  run->add_option("--out", traj_out)->capture_default_str();
  run->add_option("--results", results_out, "Also write the results CSV here");
  run->callback([&] {
    action = [&] {
      Worlds w;
      w.load(env_files, graph_files);
      const auto eps = io::load_episodes(episodes_file);
      RunOptions opt{parse_policy(policy), parse_predictor(pred), parse_regime(regime), parse_switch(augment), g.seed};
      SimConfig cfg;
      cfg.allow_sliding = parse_switch(sliding);
      std::unique_ptr<RegressorModel> model;
      if (opt.predictor == PredictorKind::Trained) {
        if (run_model.empty()) throw Error(ErrorCode::InvalidInput, "--predictor trained needs --model");
        model = std::make_unique<RegressorModel>(io::load_model(run_model));
      }
      std::vector<std::string> logs(eps.size());
      std::vector<EvalRecord> recs(eps.size());
      parallel_for(static_cast<int>(eps.size()), g.jobs, [&](int i) {
        const auto& ep = eps[static_cast<std::size_t>(i)];
        const auto& env = w.env(ep.env_id);
        const EpisodeContext ctx{&env, w.graph(ep.env_id), model.get()};
        const auto t = run_episode(ctx, ep, opt, cfg);
        recs[static_cast<std::size_t>(i)] = evaluate_trajectory(env, t, ep, cfg);
        std::ostringstream os;
        io::write_trajectory(os, ep.id, t);
        logs[static_cast<std::size_t>(i)] = os.str();
      });
      std::string all;
      for (const auto& l : logs) all += l;
      io::write_file(out_path(g, traj_out), all);
      if (!results_out.empty()) {
        std::ostringstream csv;
        io::write_results_csv(csv, recs);
        io::write_file(out_path(g, results_out), csv.str());
      }
      print_json(io::summary_to_json(aggregate(recs)));
      return 0;
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Metrics of logged trajectories");
  std::string traj_file, results_csv = "results.csv", summary_json = "summary.json";
  eval->add_option("--episodes", episodes_file)->required();
  eval->add_option("--traj", traj_file)->required();
  eval->add_option("--env", env_files)->required();
  eval->add_option("--out", results_csv)->capture_default_str();
  eval->add_option("--summary", summary_json)->capture_default_str();
  eval->callback([&] {
    action = [&] {
      Worlds w;
      w.load(env_files, {});
      std::map<std::string, Episode> by_id;
      for (auto& ep : io::load_episodes(episodes_file)) by_id[ep.id] = ep;
      SimConfig cfg;
      std::vector<EvalRecord> recs;
      for (const auto& [id, t] : io::read_trajectories(io::read_file(traj_file))) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::InvalidInput, "trajectory for unknown episode " + id);
        recs.push_back(evaluate_trajectory(w.env(it->second.env_id), t, it->second, cfg));
      }
      std::ostringstream csv;
      io::write_results_csv(csv, recs);
      io::write_file(out_path(g, results_csv), csv.str());
      const auto s = io::summary_to_json(aggregate(recs));
      io::write_json(out_path(g, summary_json), s);
      print_json(s);
      return 0;
    };
  });

  // ablation
  auto* ablation = app.add_subcommand("ablation", "Ablation tables from a pipeline run in --out-dir");
  ablation->callback([&] {
    action = [&] {
      const auto t = ablation_tables(g.out_dir);
      io::write_json(fs::path(g.out_dir) / "ablation.json", t);
      const auto md = ablation_markdown(t);
      io::write_file(fs::path(g.out_dir) / "ablation.md", md);
      std::cout << md;
      return 0;
    };
  });

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage from a spec file");
  std::string spec_file;
  pipeline->add_option("--spec", spec_file, "Experiment spec (JSON); defaults when omitted");
  pipeline->callback([&] {
    action = [&] {
      json sj = json::object();
      if (!spec_file.empty()) sj = io::read_json(spec_file);
      if (app.get_option("--seed")->count() > 0) sj["seed"] = g.seed;
      const auto spec = parse_spec(sj);
      const auto r = run_pipeline(spec, g.out_dir, g.jobs, [](const std::string& m) { std::cerr << m << '\n'; });
      int cached = 0;
      for (const auto& s : r.stages) cached += s.cached;
      std::cout << "stages: " << r.stages.size() << " (" << cached << " cached)\n"
                << "report: " << r.report_csv.string() << "\n";
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    return action ? action() : 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::InvalidInput:
      case ErrorCode::Io:
        return kExitConfig;
      default:
        return kExitStage;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
}
