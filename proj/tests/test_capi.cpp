#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pilesort/pilesort.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  const fs::path p = fs::temp_directory_path() / (std::string("pilesort_capi_") + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ps_heightmap* box_map() {
  std::vector<float> v(40 * 40, 0.0f);
  for (int y = 16; y < 24; ++y) {
    for (int x = 15; x < 23; ++x) v[y * 40 + x] = 30.0f;
  }
  ps_heightmap* m = nullptr;
  REQUIRE(ps_heightmap_create(40, 40, 5.0, v.data(), &m) == PS_OK);
  return m;
}

}  // namespace

TEST_CASE("status strings and last error") {
  CHECK(std::strlen(ps_version()) > 0);
  CHECK(std::string(ps_status_string(PS_OK)) == "ok");
  ps_heightmap* m = nullptr;
  CHECK(ps_heightmap_load("/nonexistent/map.hmap", &m) == PS_ERR_IO);
  CHECK(m == nullptr);
  CHECK(std::string(ps_last_error()).find("/nonexistent/map.hmap") != std::string::npos);
  CHECK(ps_heightmap_create(0, 4, 5.0, nullptr, &m) == PS_ERR_INVALID_ARGUMENT);
  ps_heightmap_free(nullptr);
  ps_grasp_list_free(nullptr);
  ps_forest_free(nullptr);
}

TEST_CASE("planning an isolated box") {
  ps_heightmap* m = box_map();
  int w = 0, h = 0;
  double res = 0;
  REQUIRE(ps_heightmap_info(m, &w, &h, &res) == PS_OK);
  CHECK(w == 40);
  CHECK(res == 5.0);

  ps_gripper* g = nullptr;
  REQUIRE(ps_gripper_default(&g) == PS_OK);
  ps_plan_options opt;
  ps_plan_options_init(&opt);
  ps_grasp_list* list = nullptr;
  REQUIRE(ps_plan_grasps(m, g, &opt, &list) == PS_OK);
  REQUIRE(ps_grasp_list_size(list) > 0);
  ps_grasp first;
  REQUIRE(ps_grasp_list_get(list, 0, &first) == PS_OK);
  CHECK(first.z == 0.0);
  CHECK(first.inner_span >= 40.0 - 1e-9);
  CHECK(ps_grasp_list_get(list, ps_grasp_list_size(list), &first) == PS_ERR_OUT_OF_RANGE);

  const fs::path dir = scratch("plan");
  REQUIRE(ps_grasp_list_write_csv(list, (dir / "g.csv").c_str()) == PS_OK);
  const std::string csv = slurp(dir / "g.csv");
  CHECK(csv.rfind("center_x,center_y,angle,inner_span,extra_opening,z,value\n", 0) == 0);

  REQUIRE(ps_grasp_list_dump_features(list, m, g, (dir / "f.csv").c_str()) == PS_OK);
  std::ifstream f(dir / "f.csv");
  std::string line;
  std::getline(f, line);
  CHECK(line.rfind("0,", 0) == 0);
  std::getline(f, line);
  CHECK(line.rfind("1,", 0) == 0);

  // Sampling is deterministic for a seed.
  opt.sample = 3;
  opt.seed = 7;
  ps_grasp_list* a = nullptr;
  ps_grasp_list* b = nullptr;
  REQUIRE(ps_plan_grasps(m, g, &opt, &a) == PS_OK);
  REQUIRE(ps_plan_grasps(m, g, &opt, &b) == PS_OK);
  REQUIRE(ps_grasp_list_size(a) == 3);
  for (size_t i = 0; i < 3; ++i) {
    ps_grasp ga, gb;
    ps_grasp_list_get(a, i, &ga);
    ps_grasp_list_get(b, i, &gb);
    CHECK(std::memcmp(&ga, &gb, sizeof ga) == 0);
  }
  ps_grasp_list_free(a);
  ps_grasp_list_free(b);
  ps_grasp_list_free(list);
  ps_gripper_free(g);
  ps_heightmap_free(m);
  fs::remove_all(dir);
}

TEST_CASE("forest fit, predict and checkpoint") {
  std::vector<float> x;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    x.push_back(static_cast<float>(i) / 40.0f);
    labels.push_back(i >= 20 ? 1 : 0);
  }
  ps_forest_params p{10, 0, 2, 3};
  ps_forest* f = nullptr;
  REQUIRE(ps_forest_fit_classifier(x.data(), 40, 1, labels.data(), 2, &p, &f) == PS_OK);
  CHECK(ps_forest_num_features(f) == 1);
  CHECK(ps_forest_output_dim(f) == 2);
  double out[2];
  const float q = 0.9f;
  REQUIRE(ps_forest_predict(f, &q, 1, out, 2) == PS_OK);
  CHECK(out[1] == doctest::Approx(1.0));
  CHECK(ps_forest_predict(f, &q, 2, out, 2) == PS_ERR_INVALID_ARGUMENT);

  const fs::path dir = scratch("forest");
  REQUIRE(ps_forest_save(f, (dir / "f.json").c_str()) == PS_OK);
  ps_forest* back = nullptr;
  REQUIRE(ps_forest_load((dir / "f.json").c_str(), &back) == PS_OK);
  double again[2];
  REQUIRE(ps_forest_predict(back, &q, 1, again, 2) == PS_OK);
  CHECK(again[0] == out[0]);
  CHECK(again[1] == out[1]);
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\"version\": 99}";
  }
  ps_forest* nope = nullptr;
  CHECK(ps_forest_load((dir / "bad.json").c_str(), &nope) == PS_ERR_FORMAT);
  ps_forest_free(back);
  ps_forest_free(f);
  fs::remove_all(dir);
}

TEST_CASE("config parse errors map to the config status") {
  ps_experiment_config* c = nullptr;
  CHECK(ps_experiment_config_parse("bogus_key = 1\n", &c) == PS_ERR_CONFIG);
  REQUIRE(ps_experiment_config_parse("pick_budget = 3\n", &c) == PS_OK);
  char* text = nullptr;
  REQUIRE(ps_experiment_config_format(c, &text) == PS_OK);
  CHECK(std::string(text).find("pick_budget = 3") != std::string::npos);
  ps_string_free(text);
  ps_experiment_config_free(c);
}

TEST_CASE("simulated scene, capture and drop zone round trip") {
  ps_experiment_config* c = nullptr;
  REQUIRE(ps_experiment_config_load(nullptr, &c) == PS_OK);
  const fs::path dir = scratch("sim");
  const std::string scene = (dir / "pile.scene").string();
  REQUIRE(ps_sim_generate_pile(c, 4, scene.c_str()) == PS_OK);
  REQUIRE(ps_sim_capture(c, scene.c_str(), (dir / "top.hmap").c_str(), (dir / "top.ppm").c_str(),
                         (dir / "top.pbm").c_str()) == PS_OK);
  ps_heightmap* m = nullptr;
  REQUIRE(ps_heightmap_load((dir / "top.hmap").c_str(), &m) == PS_OK);
  CHECK(ps_heightmap_attach_rgb(m, (dir / "top.ppm").c_str()) == PS_OK);
  CHECK(ps_heightmap_attach_unknown(m, (dir / "top.pbm").c_str()) == PS_OK);
  ps_heightmap_free(m);

  ps_counts truth{};
  REQUIRE(ps_sim_dropzone(c, scene.c_str(), 9, (dir / "frames").c_str(), &truth) == PS_OK);
  ps_counts seen{};
  REQUIRE(ps_feedback_process_dir((dir / "frames").c_str(), nullptr, &seen) == PS_OK);
  const double want = static_cast<double>(truth.red + truth.yellow + truth.bluegreen);
  const double got = static_cast<double>(seen.red + seen.yellow + seen.bluegreen + seen.unknown);
  CHECK(want > 0);
  CHECK(std::abs(got - want) <= 0.25 * want);
  ps_experiment_config_free(c);
  fs::remove_all(dir);
}

TEST_CASE("a tiny experiment runs and replays") {
  ps_experiment_config* c = nullptr;
  REQUIRE(ps_experiment_config_parse("pick_budget = 3\nsample_size = 100\nnum_angles = 4\n"
                                     "success_trees = 5\ncolor_trees = 5\n",
                                     &c) == PS_OK);
  const fs::path dir = scratch("run");
  int calls = 0;
  ps_run_summary s{};
  REQUIRE(ps_experiment_run(
              c, 2, dir.c_str(),
              [](const ps_tick_info*, void* user) { ++*static_cast<int*>(user); }, &calls,
              &s) == PS_OK);
  CHECK(s.picks == 3);
  CHECK(calls == s.ticks);
  CHECK(s.blocks == 0);
  CHECK(s.first_success_rate == -1.0);
  CHECK(fs::exists(dir / "log.csv"));
  ps_run_summary r{};
  REQUIRE(ps_experiment_replay((dir / "log.csv").c_str(), 1, (dir / "again.csv").c_str(), &r) ==
          PS_OK);
  CHECK(r.blocks == 3);
  CHECK(ps_experiment_replay((dir / "missing.csv").c_str(), 25, nullptr, &r) == PS_ERR_IO);
  ps_experiment_config_free(c);
  fs::remove_all(dir);
}
