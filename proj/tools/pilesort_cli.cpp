// Command-line front end over the pilesort C API.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "pilesort/pilesort.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

struct Failure {
  ps_status status;
};

// Aborts the current command on a failing status.
void check(ps_status s) {
  if (s != PS_OK) throw Failure{s};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Heightmap = Handle<ps_heightmap, ps_heightmap_free>;
using Gripper = Handle<ps_gripper, ps_gripper_free>;
using GraspList = Handle<ps_grasp_list, ps_grasp_list_free>;
using Config = Handle<ps_experiment_config, ps_experiment_config_free>;

const char* opt_path(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void load_config(const std::string& path, Config& cfg) {
  check(ps_experiment_config_load(opt_path(path), &cfg.p));
}

struct GraspPlanArgs {
  std::string heightmap, gripper, rgb, unknown, out, dump_features;
  int sample = 0;
  int angles = 16;
  std::uint64_t seed = 0;
  bool openings = false;
};

void grasp_plan(const GraspPlanArgs& a) {
  Heightmap map;
  check(ps_heightmap_load(a.heightmap.c_str(), &map.p));
  if (!a.rgb.empty()) check(ps_heightmap_attach_rgb(map.p, a.rgb.c_str()));
  if (!a.unknown.empty()) check(ps_heightmap_attach_unknown(map.p, a.unknown.c_str()));
  Gripper gripper;
  if (a.gripper.empty()) {
    check(ps_gripper_default(&gripper.p));
  } else {
    check(ps_gripper_load(a.gripper.c_str(), &gripper.p));
  }
  ps_plan_options opt;
  ps_plan_options_init(&opt);
  opt.num_angles = a.angles;
  opt.sample = a.sample;
  opt.seed = a.seed;
  opt.apply_openings = a.openings ? 1 : 0;
  GraspList list;
  check(ps_plan_grasps(map.p, gripper.p, &opt, &list.p));
  check(ps_grasp_list_write_csv(list.p, opt_path(a.out)));
  if (!a.dump_features.empty()) {
    check(ps_grasp_list_dump_features(list.p, map.p, gripper.p, a.dump_features.c_str()));
  }
}

void feedback_process(const std::string& dir, const std::vector<int>& roi) {
  ps_counts c{};
  check(ps_feedback_process_dir(dir.c_str(), roi.empty() ? nullptr : roi.data(), &c));
  std::printf("red,yellow,bluegreen,unknown\n%lld,%lld,%lld,%lld\n",
              static_cast<long long>(c.red), static_cast<long long>(c.yellow),
              static_cast<long long>(c.bluegreen), static_cast<long long>(c.unknown));
}

void print_summary(const ps_run_summary& s) {
  std::fprintf(stderr, "ticks %d, picks %d, successes %d, blocks %d\n", s.ticks, s.picks,
               s.successes, s.blocks);
  if (s.blocks > 0) {
    std::fprintf(stderr, "first block: success %.3f purity %.3f\n", s.first_success_rate,
                 s.first_purity);
    std::fprintf(stderr, "last block:  success %.3f purity %.3f\n", s.last_success_rate,
                 s.last_purity);
  }
}

void on_tick(const ps_tick_info* info, void* user) {
  const bool quiet = *static_cast<bool*>(user);
  if (!quiet && info->executed && info->picks % 25 == 0) {
    std::fprintf(stderr, "pick %d (tick %d, model v%llu)\n", info->picks, info->tick,
                 static_cast<unsigned long long>(info->model_version));
  }
}

void experiment_run(const std::string& config_path, std::uint64_t seed, const std::string& out,
                    bool quiet) {
  Config cfg;
  load_config(config_path, cfg);
  ps_run_summary s{};
  check(ps_experiment_run(cfg.p, seed, out.c_str(), on_tick, &quiet, &s));
  if (!quiet) print_summary(s);
}

void experiment_replay(const std::string& log, int block_size, const std::string& out) {
  ps_run_summary s{};
  check(ps_experiment_replay(log.c_str(), block_size, opt_path(out), &s));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned grasp planning and sorting of piled material"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ps_version()));

  // grasp
  auto* grasp = app.add_subcommand("grasp", "Grasp planning")->require_subcommand(1);
  auto* plan = grasp->add_subcommand("plan", "Closed-grasp candidates of a heightmap as CSV");
  GraspPlanArgs gp;
  plan->add_option("--heightmap", gp.heightmap, "HMAP heightmap file")->required();
  plan->add_option("--gripper", gp.gripper, "Gripper config (default geometry if omitted)");
  plan->add_option("--sample", gp.sample, "Weighted sample size (0 keeps all)")
      ->check(CLI::NonNegativeNumber);
  plan->add_option("--seed", gp.seed, "Sampling seed");
  plan->add_option("--angles", gp.angles, "Number of closing directions")
      ->check(CLI::PositiveNumber);
  plan->add_option("--rgb", gp.rgb, "PPM color map for feature dumps");
  plan->add_option("--unknown", gp.unknown, "PBM unknown mask for feature dumps");
  plan->add_flag("--openings", gp.openings, "Expand extra-opening variants");
  plan->add_option("--out", gp.out, "Output CSV (stdout if omitted)");
  plan->add_option("--dump-features", gp.dump_features, "Write feature rows to this CSV");

  // feedback
  auto* feedback = app.add_subcommand("feedback", "Drop-zone feedback")->require_subcommand(1);
  auto* process = feedback->add_subcommand("process", "Per-class pixel counts of a frame stack");
  std::string frames;
  std::vector<int> roi;
  process->add_option("--frames", frames, "Directory of frame_NNNN.hmap/.ppm")->required();
  process->add_option("--roi", roi, "x0 y0 x1 y1 (half-open)")->expected(4);

  // experiment
  auto* experiment =
      app.add_subcommand("experiment", "Closed-loop learning runs")->require_subcommand(1);
  auto* run = experiment->add_subcommand("run", "Run the pick loop and write logs");
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  run->add_option("--config", config_path, "Flat key = value config (defaults if omitted)");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--quiet,-q", quiet, "No progress output");

  auto* replay = experiment->add_subcommand("replay", "Recompute block curves from a log");
  std::string log_path, curves_out;
  int block_size = 25;
  replay->add_option("--log", log_path, "log.csv of a run")->required();
  replay->add_option("--block-size", block_size, "Executed picks per block")
      ->check(CLI::PositiveNumber);
  replay->add_option("--out", curves_out, "Output CSV (stdout if omitted)");

  // sim
  auto* sim = app.add_subcommand("sim", "Simulator utilities")->require_subcommand(1);
  std::string sim_config, scene_path, hmap_out, ppm_out, pbm_out, frames_out;
  std::uint64_t sim_seed = 0;
  auto* pile = sim->add_subcommand("pile", "Generate a random pile as scene lines");
  pile->add_option("--config", sim_config, "Experiment config for the world");
  pile->add_option("--seed", sim_seed, "Seed");
  pile->add_option("--out", scene_path, "Scene file (stdout if omitted)");
  auto* cap = sim->add_subcommand("capture", "Top camera images of a scene");
  cap->add_option("--config", sim_config, "Experiment config for the world");
  cap->add_option("--scene", scene_path, "Scene file")->required();
  cap->add_option("--hmap", hmap_out, "Heightmap output");
  cap->add_option("--ppm", ppm_out, "Color output");
  cap->add_option("--pbm", pbm_out, "Unknown-mask output");
  auto* drop = sim->add_subcommand("dropzone", "Drop-zone frames of a scene landing at once");
  drop->add_option("--config", sim_config, "Experiment config for the world");
  drop->add_option("--scene", scene_path, "Scene file")->required();
  drop->add_option("--seed", sim_seed, "Seed");
  drop->add_option("--out", frames_out, "Frame directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*plan) {
      grasp_plan(gp);
    } else if (*process) {
      feedback_process(frames, roi);
    } else if (*run) {
      experiment_run(config_path, seed, out_dir, quiet);
    } else if (*replay) {
      experiment_replay(log_path, block_size, curves_out);
    } else if (*pile) {
      Config cfg;
      load_config(sim_config, cfg);
      check(ps_sim_generate_pile(cfg.p, sim_seed, opt_path(scene_path)));
    } else if (*cap) {
      Config cfg;
      load_config(sim_config, cfg);
      check(ps_sim_capture(cfg.p, scene_path.c_str(), opt_path(hmap_out), opt_path(ppm_out),
                           opt_path(pbm_out)));
    } else if (*drop) {
      Config cfg;
      load_config(sim_config, cfg);
      ps_counts truth{};
      check(ps_sim_dropzone(cfg.p, scene_path.c_str(), sim_seed, frames_out.c_str(), &truth));
      std::printf("red,yellow,bluegreen,unknown\n%lld,%lld,%lld,%lld\n",
                  static_cast<long long>(truth.red), static_cast<long long>(truth.yellow),
                  static_cast<long long>(truth.bluegreen), static_cast<long long>(truth.unknown));
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", ps_status_string(f.status), ps_last_error());
    return f.status == PS_ERR_INVALID_ARGUMENT || f.status == PS_ERR_CONFIG ? kExitUsage
                                                                             : kExitError;
  }
  return 0;
}
