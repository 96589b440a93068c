#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pilesort/config.hpp"
#include "pilesort/experiment.hpp"

using namespace pilesort;

namespace {

PickRecord pick(int tick, ColorClass target, std::array<std::int64_t, 4> counts) {
  PickRecord r;
  r.tick = tick;
  r.decision = TickDecision::Execute;
  r.target = target;
  r.counts.counts = counts;
  return r;
}

TrainingExample example(Rng& rng, std::array<std::int64_t, 4> counts) {
  TrainingExample e;
  e.success_features.values.resize(kSuccessLength);
  e.color_features.layout = FeatureLayout::Color;
  e.color_features.values.resize(kColorLength);
  for (auto& v : e.success_features.values) v = static_cast<float>(uniform01(rng));
  for (auto& v : e.color_features.values) v = static_cast<float>(uniform01(rng));
  e.counts.counts = counts;
  return e;
}

ExperimentConfig small_config(int budget) {
  ExperimentConfig cfg;
  cfg.pick_budget = budget;
  cfg.sample_size = 200;
  cfg.num_angles = 8;
  cfg.success_forest.num_trees = 10;
  cfg.color_forest.num_trees = 10;
  return cfg;
}

std::string log_text(const RunResult& r) {
  std::ostringstream os;
  write_log_csv(os, r.log);
  return os.str();
}

}  // namespace

TEST_CASE("block metrics: worked logs") {
  std::vector<PickRecord> pure;
  for (int i = 0; i < 25; ++i) pure.push_back(pick(i, ColorClass::Red, {100, 0, 0, 0}));
  auto m = block_metrics(pure, 25);
  REQUIRE(m.size() == 1);
  CHECK(m[0].success_rate == 1.0);
  CHECK(*m[0].purity == 1.0);

  std::vector<PickRecord> failures;
  for (int i = 0; i < 25; ++i) failures.push_back(pick(i, ColorClass::Red, {0, 0, 0, 0}));
  m = block_metrics(failures, 25);
  CHECK(m[0].success_rate == 0.0);
  CHECK(!m[0].purity.has_value());

  std::vector<PickRecord> mixed;
  for (int i = 0; i < 20; ++i) mixed.push_back(pick(i, ColorClass::Yellow, {0, 450, 50, 0}));
  for (int i = 20; i < 25; ++i) mixed.push_back(pick(i, ColorClass::Yellow, {0, 0, 0, 0}));
  m = block_metrics(mixed, 25);
  CHECK(m[0].success_rate == doctest::Approx(0.8));
  CHECK(*m[0].purity == doctest::Approx(0.9));
  CHECK(m[0].target_pixels == 9000);
  CHECK(m[0].total_pixels == 10000);

  // Skips do not count and partial blocks are dropped.
  std::vector<PickRecord> with_skips = mixed;
  PickRecord skip;
  skip.decision = TickDecision::Skip;
  with_skips.insert(with_skips.begin() + 3, skip);
  with_skips.push_back(pick(30, ColorClass::Red, {1, 0, 0, 0}));
  CHECK(block_metrics(with_skips, 25).size() == 1);
}

TEST_CASE("train: null, failures only and pure successes") {
  Rng rng(1);
  TrainParams p;
  p.success.num_trees = 5;
  p.color.num_trees = 5;
  CHECK(!train({}, p, rng).success);
  CHECK(!train({}, p, rng).color);

  std::vector<TrainingExample> fails;
  for (int i = 0; i < 6; ++i) fails.push_back(example(rng, {0, 0, 0, 0}));
  const auto m1 = train(fails, p, rng);
  CHECK(m1.success);
  CHECK(!m1.color);

  std::vector<TrainingExample> reds;
  for (int i = 0; i < 6; ++i) reds.push_back(example(rng, {1000 + 10 * i, 0, 0, 0}));
  const auto m2 = train(reds, p, rng);
  REQUIRE(m2.color);
  const auto pred = m2.color->predict(reds[2].color_features.values);
  CHECK(pred[0] == doctest::Approx(1.0));
  CHECK(pred[1] == doctest::Approx(0.0));
}

TEST_CASE("model store versions increase") {
  ModelStore store;
  CHECK(store.latest()->version == 0);
  CHECK(store.publish({}) == 1);
  CHECK(store.publish({}) == 2);
  CHECK(store.latest()->version == 2);
}

TEST_CASE("proposals: empty scene and a single object") {
  WorldConfig world;
  Rng rng(2);
  Scene empty;
  empty.belt_width_mm = world.belt_width_mm;
  empty.belt_height_mm = world.belt_height_mm;
  CHECK(proposed_grasps(empty, world, 2000, 16, rng).proposals.empty());

  Scene one = empty;
  SimObject o;
  o.id = -1;
  o.size_x = 80;
  o.size_y = 50;
  o.thickness = 30;
  o.pose.x = 500;
  o.pose.y = 375;
  o.color = palette_color(ColorClass::Red);
  drop_object(one, o);
  const auto set = proposed_grasps(one, world, 2000, 16, rng);
  REQUIRE(!set.proposals.empty());
  const int max_variants =
      static_cast<int>((world.gripper.max_opening - world.gripper.min_opening) /
                       world.capture.resolution_mm) + 1;
  CHECK(set.proposals.size() <= 2000u * max_variants);
  for (const auto& p : set.proposals) {
    CHECK(p.grasp.z < o.thickness);
    CHECK(p.slices != nullptr);
  }
}

TEST_CASE("experiment config: parse, reject unknown keys, format round trip") {
  const auto cfg = parse_experiment_config("pick_budget = 7\nlearning = false\nmix_red = 0.2\n"
                                           "mix_yellow = 0.7\nmix_bluegreen = 0.1\n");
  CHECK(cfg.pick_budget == 7);
  CHECK(!cfg.learning);
  CHECK(cfg.fallback_target() == ColorClass::Yellow);
  CHECK_THROWS_AS(parse_experiment_config("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS(parse_experiment_config("pick_budget = lots\n"));
  const auto again = parse_experiment_config(format_experiment_config(cfg));
  CHECK(format_experiment_config(again) == format_experiment_config(cfg));
}

TEST_CASE("run: zero budget gives an empty log") {
  CHECK(run(small_config(0), 1).log.empty());
}

TEST_CASE("run: identical seeds give identical logs") {
  const auto cfg = small_config(12);
  const auto a = run(cfg, 99);
  const auto b = run(cfg, 99);
  CHECK(log_text(a) == log_text(b));
  int executed = 0;
  for (const auto& r : a.log) executed += r.executed();
  CHECK(executed == 12);
  const auto c = run(cfg, 100);
  CHECK(log_text(a) != log_text(c));
}

TEST_CASE("run: learning disabled keeps the null model") {
  auto cfg = small_config(6);
  cfg.learning = false;
  const auto r = run(cfg, 5);
  for (const auto& rec : r.log) {
    CHECK(rec.model_version == 0);
    if (rec.executed()) CHECK(rec.p_success == 1.0);
  }
}

TEST_CASE("log csv round trip and replay") {
  const auto r = run(small_config(8), 3);
  std::stringstream ss;
  write_log_csv(ss, r.log);
  const auto back = read_log_csv(ss);
  REQUIRE(back.size() == r.log.size());
  std::ostringstream again;
  write_log_csv(again, back);
  CHECK(again.str() == log_text(r));

  std::stringstream bad("tick,decision\n1,explode\n");
  CHECK_THROWS(read_log_csv(bad));
}

TEST_CASE("run_to_directory writes the artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "pilesort_run_test";
  std::filesystem::remove_all(dir);
  run_to_directory(small_config(5), 4, dir);
  CHECK(std::filesystem::exists(dir / "log.csv"));
  CHECK(std::filesystem::exists(dir / "curves.csv"));
  CHECK(std::filesystem::exists(dir / "config.txt"));
  CHECK(std::filesystem::exists(dir / "models" / "success_final.json"));
  std::ifstream curves(dir / "curves.csv");
  std::string header;
  std::getline(curves, header);
  CHECK(header == "block,first_tick,last_tick,picks,success_rate,purity");
  std::filesystem::remove_all(dir);
}
