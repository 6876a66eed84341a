#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "waygraph/envgen.hpp"
#include "waygraph/error.hpp"
#include "waygraph/io.hpp"

using namespace waygraph;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("waygraph_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("environment round trip") {
    const auto env = generate_environment(3, Profile::Clutter);
    const auto j = io::env_to_json(env);
    CHECK(j.at("bounds").size() == 4);
    CHECK(j.at("cell_size").get<double>() == env.cell_size());
    const auto back = io::env_from_json(j);
    CHECK(back.obstacles() == env.obstacles());
    CHECK(back.bounds() == env.bounds());
    CHECK(back.agent_radius() == env.agent_radius());
    CHECK_THROWS_AS(io::env_from_json(nlohmann::json{{"bounds", {0, 1}}, {"obstacles", nlohmann::json::array()}}),
                    Error);
  }

  TEST_CASE("graph round trip with string ids") {
    NavGraph g;
    const auto a = g.add_node({1, 2}), b = g.add_node({3.25, 4.5});
    g.add_node({0.1, 0.2});
    g.add_edge(a, b);
    g.remove_node(2);
    const auto j = io::graph_to_json(g, "envs/room_3.json");
    CHECK(j.at("nodes").contains("0"));
    CHECK(j.at("edges")[0][0] == "0");
    std::string ref;
    auto back = io::graph_from_json(j, &ref);
    CHECK(ref == "envs/room_3.json");
    CHECK(back.env_id == "room_3");
    CHECK(back.nodes == g.nodes);
    CHECK(back.edges == g.edges);
    CHECK(back.add_node({0, 0}) >= 2);
    auto bad = j;
    bad["edges"].push_back({"0", "9"});
    CHECK_THROWS_AS(io::graph_from_json(bad), Error);
  }

  TEST_CASE("PWHM layout") {
    PolarGrid g;
    g.at(0, 0) = 1.0;
    g.at(0, 1) = 0.5;
    g.at(119, 11) = 0.25;
    const auto bytes = io::encode_pwhm(g);
    REQUIRE(bytes.size() == 12 + 4 * 1440);
    CHECK(bytes.substr(0, 4) == "PWHM");
    const unsigned char* u = reinterpret_cast<const unsigned char*>(bytes.data());
    CHECK(u[4] == 120);
    CHECK(u[5] == 0);
    CHECK(u[8] == 12);
    float f = 0;
    std::memcpy(&f, bytes.data() + 12 + 4, 4);
    CHECK(f == 0.5f);
    CHECK(u[12 + 3] == 0x3f);  // 1.0f = 0x3f800000 little endian
    CHECK(u[12 + 2] == 0x80);
    std::memcpy(&f, bytes.data() + 12 + 4 * 1439, 4);
    CHECK(f == 0.25f);
    CHECK(io::decode_pwhm(bytes) == g);
    CHECK_THROWS_AS(io::decode_pwhm(bytes.substr(0, 100)), Error);
    auto wrong = bytes;
    wrong[0] = 'X';
    CHECK_THROWS_AS(io::decode_pwhm(wrong), Error);
    auto shape = bytes;
    shape[4] = 60;
    CHECK_THROWS_AS(io::decode_pwhm(shape), Error);
    CHECK(io::heatmap_to_json(g).at("values")[119][11] == 0.25);
  }

  TEST_CASE("hex") {
    const std::vector<unsigned char> b{0x00, 0x7f, 0xff, 0x10};
    CHECK(io::hex_encode(b) == "007fff10");
    CHECK(io::hex_decode("007FFF10") == b);
    CHECK_THROWS_AS(io::hex_decode("abc"), Error);
    CHECK_THROWS_AS(io::hex_decode("zz"), Error);
  }

  TEST_CASE("model round trip") {
    RegressorModel m(1, 8, 4);
    m.round_to_float();
    TrainConfig cfg;
    cfg.epochs = 7;
    const auto j = io::model_to_json(m, &cfg);
    CHECK(j.at("format") == "waygraph-regressor");
    const auto back = io::model_from_json(j);
    CHECK(back == m);
    RangeScan s;
    s.fill(1.5);
    CHECK(back.predict(s) == m.predict(s));
    auto bad = j;
    bad["weights"] = "00";
    CHECK_THROWS_AS(io::model_from_json(bad), Error);
  }

  TEST_CASE("dataset round trip") {
    const auto dir = scratch_dir("dataset");
    const auto env = generate_environment(6, Profile::Rooms);
    auto g = refine(env, seed_graph(env, 6, 1.5), {}, {}).graph;
    g.env_id = "env_6";
    const auto set = build_training_set(env, g);
    io::save_dataset(dir / "ds", set);
    CHECK(fs::exists(dir / "ds.bin"));
    CHECK(fs::file_size(dir / "ds.bin") == set.size() * (120 * 4 + 12 + 1440 * 4));
    const auto back = io::load_dataset(dir / "ds.json");
    REQUIRE(back.size() == set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK(back[i].env_id == "env_6");
      CHECK(back[i].node == set[i].node);
      CHECK(back[i].pose == set[i].pose);
      CHECK(back[i].waypoints == set[i].waypoints);
      for (int a = 0; a < kAngleBins; ++a)
        CHECK(back[i].scan[static_cast<std::size_t>(a)] ==
              static_cast<double>(static_cast<float>(set[i].scan[static_cast<std::size_t>(a)])));
      CHECK(io::encode_pwhm(back[i].target) == io::encode_pwhm(set[i].target));
    }
    fs::remove_all(dir);
  }

  TEST_CASE("episodes and trajectories round trip") {
    const auto dir = scratch_dir("episodes");
    Episode e;
    e.id = "env_1/0003";
    e.env_id = "env_1";
    e.start = Pose{{1.5, 2.25}, 0.3};
    e.goal = {7.125, 3.0};
    e.gt_path = {{1.5, 2.25}, {1.6, 2.4}, {7.125, 3.0}};
    e.hops = 5;
    const std::vector<Episode> eps{e, e};
    io::save_episodes(dir / "e.jsonl", eps);
    const auto text = io::read_file(dir / "e.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    const auto back = io::load_episodes(dir / "e.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == e.id);
    CHECK(back[0].start == e.start);
    CHECK(back[0].goal == e.goal);
    CHECK(back[0].gt_path == e.gt_path);
    CHECK(back[0].hops == 5);

    Trajectory t;
    t.poses = {Pose{{1, 1}, 0}, Pose{{1, 1}, 0.2}, Pose{{1.2, 1.1}, 0.2}};
    t.actions = {{ActionKind::TurnLeft, false}, {ActionKind::Forward, true}};
    t.collisions = 1;
    t.decisions = 2;
    t.work_time = 0.125;
    std::ostringstream os;
    io::write_trajectory(os, "a", t);
    io::write_trajectory(os, "b", t);
    const auto rt = io::read_trajectories(os.str());
    REQUIRE(rt.size() == 2);
    CHECK(rt[1].first == "b");
    CHECK(rt[0].second.poses == t.poses);
    CHECK(rt[0].second.actions == t.actions);
    CHECK(rt[0].second.collisions == 1);
    CHECK(rt[0].second.decisions == 2);
    CHECK(rt[0].second.work_time == 0.125);
    CHECK_THROWS_AS(io::read_trajectories("{\"episode\":\"a\",\"step\":1,\"x\":0,\"y\":0,\"heading\":0}\n"), Error);
    fs::remove_all(dir);
  }

  TEST_CASE("results csv") {
    EvalRecord r;
    r.id = "env_2/0001";
    r.tl = 4.5;
    r.ne = 1.25;
    r.success = true;
    r.spl = 0.75;
    r.ndtw = 0.5;
    r.sdtw = 0.5;
    r.decisions = 3;
    r.actions = 3;
    r.collisions = 0;
    r.time_s = 0.001;
    std::ostringstream os;
    io::write_results_csv(os, std::vector<EvalRecord>{r});
    const auto s = os.str();
    CHECK(s.substr(0, s.find('\n')) == "id,tl,ne,sr,osr,spl,ndtw,sdtw,decisions,actions,collisions,time_s");
    CHECK(s.find("env_2/0001,4.500000,1.250000,1,0,0.750000,0.500000,0.500000,3,3,0,0.001000") != std::string::npos);
    const auto back = io::read_results_csv(s);
    REQUIRE(back.size() == 1);
    CHECK(back[0].spl == 0.75);
    CHECK(back[0].success);
    CHECK_THROWS_AS(io::read_results_csv("id,tl\n"), Error);
  }

  TEST_CASE("file errors") {
    CHECK_THROWS_AS(io::read_file("/nonexistent/dir/file.json"), Error);
    const auto dir = scratch_dir("files");
    io::write_file(dir / "bad.json", "{not json");
    try {
      io::read_json(dir / "bad.json");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Io);
    }
    io::write_file(dir / "sub/dir/ok.txt", "x");
    CHECK(io::read_file(dir / "sub/dir/ok.txt") == "x");
    fs::remove_all(dir);
  }
}
