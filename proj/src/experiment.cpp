#include "pilesort/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pilesort/config.hpp"
#include "pilesort/grasp.hpp"

namespace pilesort {

namespace {

enum Stream : std::uint64_t {
  kPileStream = 1,
  kPlanStream,
  kSelectStream,
  kGraspStream,
  kDropStream,
  kTrainStream,
  kFaultStream,
};

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

void WorldConfig::validate() const {
  if (!(belt_width_mm > 0.0 && belt_height_mm > 0.0)) {
    throw std::invalid_argument("belt dimensions must be positive");
  }
  if (capture.width < 1 || capture.height < 1 || !(capture.resolution_mm > 0.0)) {
    throw std::invalid_argument("capture grid must be non-empty");
  }
  if (!(capture.camera_height_mm > 0.0)) throw std::invalid_argument("camera height must be positive");
  gripper.validate();
  pile.validate();
  grasp_sim.validate();
  dropzone.validate();
}

ColorClass ExperimentConfig::fallback_target() const {
  if (default_target) return *default_target;
  int best = 0;
  for (int k = 1; k < kNumMaterialClasses; ++k) {
    if (world.pile.class_mix[k] > world.pile.class_mix[best]) best = k;
  }
  return static_cast<ColorClass>(best);
}

void ExperimentConfig::validate() const {
  world.validate();
  policy.validate();
  feedback.validate();
  if (pick_budget < 0) throw std::invalid_argument("pick_budget must be nonnegative");
  if (max_ticks < 0) throw std::invalid_argument("max_ticks must be nonnegative");
  if (sample_size < 1) throw std::invalid_argument("sample_size must be positive");
  if (num_angles < 1) throw std::invalid_argument("num_angles must be positive");
  if (retrain_every < 1) throw std::invalid_argument("retrain_every must be positive");
  if (refresh_min_objects < 0) throw std::invalid_argument("refresh_min_objects must be nonnegative");
  if (refresh_after_skips < 1) throw std::invalid_argument("refresh_after_skips must be positive");
  if (!(robot_fault_probability >= 0.0 && robot_fault_probability <= 1.0)) {
    throw std::invalid_argument("robot_fault_probability must lie in [0, 1]");
  }
  if (block_size < 1) throw std::invalid_argument("block_size must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be nonnegative");
  if (default_target && *default_target == ColorClass::Unknown) {
    throw std::invalid_argument("default_target must be a material class");
  }
  for (const ForestParams* p : {&success_forest, &color_forest}) {
    if (p->num_trees < 1 || p->max_features < 0 || p->min_samples_split < 0) {
      throw std::invalid_argument("forest parameters are invalid");
    }
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ConfigReader r = ConfigReader::parse(text);
  ExperimentConfig c;
  WorldConfig& w = c.world;

  c.pick_budget = r.get("pick_budget", c.pick_budget);
  c.max_ticks = r.get("max_ticks", c.max_ticks);
  c.sample_size = r.get("sample_size", c.sample_size);
  c.num_angles = r.get("num_angles", c.num_angles);
  c.retrain_every = r.get("retrain_every", c.retrain_every);
  c.learning = r.get("learning", c.learning);
  c.refresh_min_objects = r.get("refresh_min_objects", c.refresh_min_objects);
  c.refresh_after_skips = r.get("refresh_after_skips", c.refresh_after_skips);
  c.robot_fault_probability = r.get("robot_fault_probability", c.robot_fault_probability);
  c.block_size = r.get("block_size", c.block_size);
  c.checkpoint_every = r.get("checkpoint_every", c.checkpoint_every);
  const std::string target = r.get("default_target", std::string("auto"));
  if (target != "auto") {
    const auto cls = parse_class(target);
    if (!cls || *cls == ColorClass::Unknown) {
      throw ConfigError("config key 'default_target': expected red, yellow, bluegreen or auto");
    }
    c.default_target = cls;
  }

  c.success_forest.num_trees = r.get("success_trees", c.success_forest.num_trees);
  c.success_forest.max_features = r.get("success_max_features", c.success_forest.max_features);
  c.success_forest.min_samples_split =
      r.get("success_min_samples_split", c.success_forest.min_samples_split);
  c.color_forest.num_trees = r.get("color_trees", c.color_forest.num_trees);
  c.color_forest.max_features = r.get("color_max_features", c.color_forest.max_features);
  c.color_forest.min_samples_split =
      r.get("color_min_samples_split", c.color_forest.min_samples_split);

  c.policy.purity_center = r.get("purity_center", c.policy.purity_center);
  c.policy.purity_slope = r.get("purity_slope", c.policy.purity_slope);
  c.policy.skip_threshold = r.get("skip_threshold", c.policy.skip_threshold);
  c.policy.skip_probability = r.get("skip_probability", c.policy.skip_probability);
  c.policy.expected_pixel_scale = r.get("expected_pixel_scale", c.policy.expected_pixel_scale);

  c.feedback.foreground_step_mm = r.get("foreground_step_mm", c.feedback.foreground_step_mm);
  c.feedback.min_filter_window = r.get("min_filter_window", c.feedback.min_filter_window);
  c.feedback.background_percentile =
      r.get("background_percentile", c.feedback.background_percentile);
  c.feedback.open_mask = r.get("mask_opening", c.feedback.open_mask);

  w.belt_width_mm = r.get("belt_width_mm", w.belt_width_mm);
  w.belt_height_mm = r.get("belt_height_mm", w.belt_height_mm);
  w.capture.resolution_mm = r.get("capture_resolution_mm", w.capture.resolution_mm);
  w.capture.camera_height_mm = r.get("camera_height_mm", w.capture.camera_height_mm);
  w.capture.occlusion_depth_step_mm =
      r.get("occlusion_depth_step_mm", w.capture.occlusion_depth_step_mm);
  if (!(w.capture.resolution_mm > 0.0)) throw ConfigError("capture_resolution_mm must be positive");
  w.capture.width = static_cast<int>(std::ceil(w.belt_width_mm / w.capture.resolution_mm - 1e-9));
  w.capture.height = static_cast<int>(std::ceil(w.belt_height_mm / w.capture.resolution_mm - 1e-9));

  GripperGeometry& g = w.gripper;
  g.finger_thickness = r.get("finger_thickness", g.finger_thickness);
  g.finger_width = r.get("finger_width", g.finger_width);
  g.min_opening = r.get("min_opening", g.min_opening);
  g.max_opening = r.get("max_opening", g.max_opening);
  const double lift_ratio = r.get("lift_ratio", 0.15);
  if (g.max_opening > g.min_opening && g.min_opening >= 0.0) {
    g.opening_curve = OpeningCurve::linear(g.min_opening, g.max_opening, lift_ratio);
  }

  PileConfig& p = w.pile;
  p.min_objects = r.get("pile_min_objects", p.min_objects);
  p.max_objects = r.get("pile_max_objects", p.max_objects);
  p.min_size_mm = r.get("pile_min_size_mm", p.min_size_mm);
  p.max_size_mm = r.get("pile_max_size_mm", p.max_size_mm);
  p.min_thickness_mm = r.get("pile_min_thickness_mm", p.min_thickness_mm);
  p.max_thickness_mm = r.get("pile_max_thickness_mm", p.max_thickness_mm);
  p.disc_fraction = r.get("pile_disc_fraction", p.disc_fraction);
  p.min_density = r.get("pile_min_density", p.min_density);
  p.max_density = r.get("pile_max_density", p.max_density);
  p.class_mix[0] = r.get("mix_red", p.class_mix[0]);
  p.class_mix[1] = r.get("mix_yellow", p.class_mix[1]);
  p.class_mix[2] = r.get("mix_bluegreen", p.class_mix[2]);
  p.color_jitter = r.get("color_jitter", p.color_jitter);

  GraspSimConfig& s = w.grasp_sim;
  s.base_slip = r.get("base_slip", s.base_slip);
  s.mass_slip_per_kg = r.get("mass_slip_per_kg", s.mass_slip_per_kg);
  s.max_slip = r.get("max_slip", s.max_slip);
  s.shallow_contact_mm = r.get("shallow_contact_mm", s.shallow_contact_mm);
  s.shallow_slip = r.get("shallow_slip", s.shallow_slip);
  s.off_axis_slip = r.get("off_axis_slip", s.off_axis_slip);
  s.disturb_mm = r.get("disturb_mm", s.disturb_mm);
  s.slip_enabled = r.get("slip_enabled", s.slip_enabled);
  s.contact_tolerance_mm = r.get("contact_tolerance_mm", s.contact_tolerance_mm);

  DropZoneConfig& d = w.dropzone;
  d.frames = r.get("dropzone_frames", d.frames);
  d.noise_sigma_mm = r.get("dropzone_noise_sigma_mm", d.noise_sigma_mm);
  d.background_depth_mm = r.get("dropzone_background_depth_mm", d.background_depth_mm);

  r.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string format_experiment_config(const ExperimentConfig& c) {
  const WorldConfig& w = c.world;
  std::ostringstream o;
  auto kv = [&](const char* key, const std::string& v) { o << key << " = " << v << '\n'; };
  auto num = [&](const char* key, double v) { kv(key, fmt_double(v)); };
  auto flag = [&](const char* key, bool v) { kv(key, v ? "true" : "false"); };
  num("pick_budget", c.pick_budget);
  num("max_ticks", c.max_ticks);
  num("sample_size", c.sample_size);
  num("num_angles", c.num_angles);
  num("retrain_every", c.retrain_every);
  flag("learning", c.learning);
  num("refresh_min_objects", c.refresh_min_objects);
  num("refresh_after_skips", c.refresh_after_skips);
  num("robot_fault_probability", c.robot_fault_probability);
  num("block_size", c.block_size);
  num("checkpoint_every", c.checkpoint_every);
  kv("default_target", c.default_target ? std::string(class_name(*c.default_target)) : "auto");
  num("success_trees", c.success_forest.num_trees);
  num("success_max_features", c.success_forest.max_features);
  num("success_min_samples_split", c.success_forest.min_samples_split);
  num("color_trees", c.color_forest.num_trees);
  num("color_max_features", c.color_forest.max_features);
  num("color_min_samples_split", c.color_forest.min_samples_split);
  num("purity_center", c.policy.purity_center);
  num("purity_slope", c.policy.purity_slope);
  num("skip_threshold", c.policy.skip_threshold);
  num("skip_probability", c.policy.skip_probability);
  num("expected_pixel_scale", c.policy.expected_pixel_scale);
  num("foreground_step_mm", c.feedback.foreground_step_mm);
  num("min_filter_window", c.feedback.min_filter_window);
  num("background_percentile", c.feedback.background_percentile);
  flag("mask_opening", c.feedback.open_mask);
  num("belt_width_mm", w.belt_width_mm);
  num("belt_height_mm", w.belt_height_mm);
  num("capture_resolution_mm", w.capture.resolution_mm);
  num("camera_height_mm", w.capture.camera_height_mm);
  num("occlusion_depth_step_mm", w.capture.occlusion_depth_step_mm);
  num("finger_thickness", w.gripper.finger_thickness);
  num("finger_width", w.gripper.finger_width);
  num("min_opening", w.gripper.min_opening);
  num("max_opening", w.gripper.max_opening);
  const auto& table = w.gripper.opening_curve.table();
  const double ratio = table.size() >= 2 && table.back().offset > 0.0
                           ? table.back().lift / table.back().offset
                           : 0.15;
  num("lift_ratio", ratio);
  num("pile_min_objects", w.pile.min_objects);
  num("pile_max_objects", w.pile.max_objects);
  num("pile_min_size_mm", w.pile.min_size_mm);
  num("pile_max_size_mm", w.pile.max_size_mm);
  num("pile_min_thickness_mm", w.pile.min_thickness_mm);
  num("pile_max_thickness_mm", w.pile.max_thickness_mm);
  num("pile_disc_fraction", w.pile.disc_fraction);
  num("pile_min_density", w.pile.min_density);
  num("pile_max_density", w.pile.max_density);
  num("mix_red", w.pile.class_mix[0]);
  num("mix_yellow", w.pile.class_mix[1]);
  num("mix_bluegreen", w.pile.class_mix[2]);
  num("color_jitter", w.pile.color_jitter);
  num("base_slip", w.grasp_sim.base_slip);
  num("mass_slip_per_kg", w.grasp_sim.mass_slip_per_kg);
  num("max_slip", w.grasp_sim.max_slip);
  num("shallow_contact_mm", w.grasp_sim.shallow_contact_mm);
  num("shallow_slip", w.grasp_sim.shallow_slip);
  num("off_axis_slip", w.grasp_sim.off_axis_slip);
  num("disturb_mm", w.grasp_sim.disturb_mm);
  flag("slip_enabled", w.grasp_sim.slip_enabled);
  num("contact_tolerance_mm", w.grasp_sim.contact_tolerance_mm);
  num("dropzone_frames", w.dropzone.frames);
  num("dropzone_noise_sigma_mm", w.dropzone.noise_sigma_mm);
  num("dropzone_background_depth_mm", w.dropzone.background_depth_mm);
  return o.str();
}

ModelPair train(std::span<const TrainingExample> data, const TrainParams& params, Rng& rng) {
  ModelPair m;
  // Draw both sub-seeds up front so each model's randomness is independent
  // of whether the other one is trained.
  Rng success_rng(rng());
  Rng color_rng(rng());
  if (data.empty()) return m;

  std::vector<std::vector<float>> xs;
  std::vector<int> labels;
  xs.reserve(data.size());
  for (const auto& ex : data) {
    xs.push_back(ex.success_features.values);
    labels.push_back(ex.succeeded() ? 1 : 0);
  }
  m.success = std::make_shared<const Forest>(
      Forest::fit_classifier(xs, labels, 2, params.success, success_rng));

  std::vector<std::vector<float>> xc;
  std::vector<std::vector<double>> yc;
  for (const auto& ex : data) {
    if (!ex.succeeded()) continue;
    const double total = static_cast<double>(ex.counts.total());
    std::vector<double> prop(kNumColorBins);
    for (int k = 0; k < kNumColorBins; ++k) prop[k] = ex.counts.counts[k] / total;
    xc.push_back(ex.color_features.values);
    yc.push_back(std::move(prop));
  }
  if (!xc.empty()) {
    m.color = std::make_shared<const Forest>(Forest::fit_regressor(xc, yc, params.color, color_rng));
  }
  return m;
}

ModelStore::ModelStore() : current_(std::make_shared<const ModelPair>()) {}

std::shared_ptr<const ModelPair> ModelStore::latest() const {
  std::lock_guard lock(mutex_);
  return current_;
}

std::uint64_t ModelStore::publish(ModelPair models) {
  std::lock_guard lock(mutex_);
  models.version = current_->version + 1;
  current_ = std::make_shared<const ModelPair>(std::move(models));
  return current_->version;
}

ProposalSet proposed_grasps(const Scene& scene, const WorldConfig& world, std::size_t sample_size,
                            int num_angles, Rng& rng) {
  ProposalSet set;
  set.capture = capture(scene, 0.5 * world.belt_width_mm, world.capture);
  const auto closed = closed_grasps(set.capture.height, world.gripper, num_angles);
  set.closed_count = closed.size();
  if (closed.empty()) return set;
  const auto sampled = weighted_sample(closed, sample_size, rng);

  FeatureConfig fcfg;
  fcfg.finger_thickness_mm = world.gripper.finger_thickness;
  const auto variants = apply_openings(sampled, set.capture.height, world.gripper);
  set.proposals.reserve(variants.size());
  std::shared_ptr<const GraspSlices> slices;
  const GraspRectangle* owner = nullptr;
  for (const auto& v : variants) {
    // Variants of one closed grasp are contiguous and share its frame.
    if (!owner || owner->center_x != v.center_x || owner->center_y != v.center_y ||
        owner->angle != v.angle || owner->inner_span != v.inner_span) {
      slices = std::make_shared<const GraspSlices>(GraspSlices::compute(
          v, set.capture.height, set.capture.rgb, &set.capture.unknown, fcfg));
      owner = &v;
    }
    set.proposals.push_back({v, slices});
  }
  return set;
}

RunResult run(const ExperimentConfig& cfg, std::uint64_t seed, const TickObserver& observer,
              const std::function<void(const ModelPair&)>& on_publish) {
  cfg.validate();
  const WorldConfig& world = cfg.world;
  Rng pile_rng(derive_seed(seed, kPileStream));
  Rng plan_rng(derive_seed(seed, kPlanStream));
  Rng select_rng(derive_seed(seed, kSelectStream));
  Rng grasp_rng(derive_seed(seed, kGraspStream));
  Rng drop_rng(derive_seed(seed, kDropStream));
  Rng train_rng(derive_seed(seed, kTrainStream));
  Rng fault_rng(derive_seed(seed, kFaultStream));

  RunResult result;
  if (cfg.pick_budget == 0) return result;

  const TrainParams params{cfg.success_forest, cfg.color_forest};
  const ColorClass fallback = cfg.fallback_target();
  ModelStore store;
  std::vector<TrainingExample> dataset;
  Scene scene = generate_pile(world.pile, pile_rng, world.belt_width_mm, world.belt_height_mm);

  int picks = 0;
  int consecutive_skips = 0;
  for (int tick = 0; picks < cfg.pick_budget && tick < cfg.tick_limit(); ++tick) {
    if (static_cast<int>(scene.objects.size()) < cfg.refresh_min_objects ||
        consecutive_skips >= cfg.refresh_after_skips) {
      // Stepping the feed conveyor: the remainder moves on, a new pile arrives.
      scene = generate_pile(world.pile, pile_rng, world.belt_width_mm, world.belt_height_mm);
      consecutive_skips = 0;
    }

    PickRecord rec;
    rec.tick = tick;
    rec.scene_objects = static_cast<int>(scene.objects.size());
    rec.dataset_size = static_cast<int>(dataset.size());
    const auto models = store.latest();
    rec.model_version = models->version;

    const ProposalSet set = proposed_grasps(scene, world, static_cast<std::size_t>(cfg.sample_size),
                                            cfg.num_angles, plan_rng);
    rec.proposals = static_cast<int>(set.proposals.size());
    const auto evaluated = evaluate(*models, set.proposals, cfg.policy);
    const Decision decision = select(evaluated, select_rng, cfg.policy);

    if (decision.index >= 0) {
      const EvaluatedGrasp& best = evaluated[decision.index];
      rec.grasp = best.grasp;
      rec.p_success = best.p_success;
      rec.predicted = best.expected_colors;
      rec.predicted_target = best.target;
      rec.target = best.target == ColorClass::Unknown ? fallback : best.target;
    }
    if (!decision.execute) {
      rec.decision = decision.index < 0 ? TickDecision::NoGrasp : TickDecision::Skip;
      ++consecutive_skips;
      result.log.push_back(rec);
      if (observer) observer(rec);
      continue;
    }

    rec.decision = TickDecision::Execute;
    consecutive_skips = 0;
    ++picks;
    const Proposal& chosen = set.proposals[decision.index];
    const GraspOutcome outcome = execute_grasp(scene, chosen.grasp, world.gripper, grasp_rng,
                                               world.grasp_sim);
    rec.collided = outcome.collided;
    rec.robot_fault = uniform01(fault_rng) < cfg.robot_fault_probability;
    // The drop zone is filmed for every pick so its random stream does not
    // depend on earlier outcomes.
    const FrameStack frames = synthesize_dropzone(outcome, world.dropzone, drop_rng);
    if (!rec.robot_fault && outcome.gripper_closed_to > 0.0) {
      rec.counts = pilesort::result(frames, cfg.hsv_boxes, cfg.feedback);
    }

    if (!rec.robot_fault) {
      dataset.push_back({chosen.success_features(), chosen.color_features(), rec.counts});
      if (cfg.learning && dataset.size() % static_cast<std::size_t>(cfg.retrain_every) == 0) {
        const std::uint64_t version = store.publish(train(dataset, params, train_rng));
        if (on_publish) {
          if (cfg.checkpoint_every > 0 &&
              version % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0) {
            on_publish(*store.latest());
          }
        }
      }
    }
    result.log.push_back(rec);
    if (observer) observer(rec);
  }
  result.final_models = *store.latest();
  result.dataset_size = dataset.size();
  return result;
}

std::vector<BlockMetrics> block_metrics(std::span<const PickRecord> log, int block_size) {
  if (block_size < 1) throw std::invalid_argument("block size must be positive");
  std::vector<BlockMetrics> out;
  BlockMetrics cur;
  for (const PickRecord& r : log) {
    if (!r.executed()) continue;
    if (cur.picks == 0) cur.first_tick = r.tick;
    cur.last_tick = r.tick;
    ++cur.picks;
    if (r.success()) {
      ++cur.successes;
      cur.total_pixels += r.counts.total();
      if (r.target != ColorClass::Unknown) cur.target_pixels += r.counts[r.target];
    }
    if (cur.picks == block_size) {
      cur.block = static_cast<int>(out.size());
      cur.success_rate = static_cast<double>(cur.successes) / block_size;
      if (cur.total_pixels > 0) {
        cur.purity = static_cast<double>(cur.target_pixels) / static_cast<double>(cur.total_pixels);
      }
      out.push_back(cur);
      cur = BlockMetrics{};
    }
  }
  return out;
}

namespace {

const char* decision_name(TickDecision d) {
  switch (d) {
    case TickDecision::Execute: return "execute";
    case TickDecision::Skip: return "skip";
    case TickDecision::NoGrasp: return "none";
  }
  return "none";
}

constexpr const char* kLogHeader =
    "tick,decision,model_version,dataset_size,scene_objects,proposals,center_x,center_y,angle,"
    "inner_span,extra_opening,z,p_success,pred_red,pred_yellow,pred_bluegreen,pred_unknown,"
    "pred_target,target,count_red,count_yellow,count_bluegreen,count_unknown,success,collided,"
    "robot_fault";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

template <class T>
T parse_number(const std::string& s, int line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("log line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

ColorClass parse_class_field(const std::string& s, int line) {
  const auto c = parse_class(s);
  if (!c) throw std::runtime_error("log line " + std::to_string(line) + ": bad class '" + s + "'");
  return *c;
}

}  // namespace

void write_log_csv(std::ostream& out, std::span<const PickRecord> log) {
  out << kLogHeader << '\n';
  char buf[512];
  for (const PickRecord& r : log) {
    const GraspRectangle& g = r.grasp;
    std::snprintf(buf, sizeof buf,
                  "%d,%s,%llu,%d,%d,%d,%.3f,%.3f,%.6f,%.3f,%.3f,%.3f,%.6f,%.3f,%.3f,%.3f,%.3f,%s,%s,"
                  "%lld,%lld,%lld,%lld,%d,%d,%d",
                  r.tick, decision_name(r.decision),
                  static_cast<unsigned long long>(r.model_version), r.dataset_size,
                  r.scene_objects, r.proposals, g.center_x, g.center_y, g.angle, g.inner_span,
                  g.extra_opening, g.z, r.p_success, r.predicted[0], r.predicted[1],
                  r.predicted[2], r.predicted[3],
                  std::string(class_name(r.predicted_target)).c_str(),
                  std::string(class_name(r.target)).c_str(),
                  static_cast<long long>(r.counts.counts[0]),
                  static_cast<long long>(r.counts.counts[1]),
                  static_cast<long long>(r.counts.counts[2]),
                  static_cast<long long>(r.counts.counts[3]), r.success() ? 1 : 0,
                  r.collided ? 1 : 0, r.robot_fault ? 1 : 0);
    out << buf << '\n';
  }
}

std::vector<PickRecord> read_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("log is empty");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"tick", "decision", "target", "count_red", "count_yellow",
                           "count_bluegreen", "count_unknown"}) {
    if (!col.count(need)) throw std::runtime_error(std::string("log lacks column '") + need + "'");
  }
  auto opt = [&](const char* name) -> std::optional<std::size_t> {
    const auto it = col.find(name);
    return it == col.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  };

  std::vector<PickRecord> log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw std::runtime_error("log line " + std::to_string(line_no) + ": wrong field count");
    }
    PickRecord r;
    r.tick = parse_number<int>(f[col["tick"]], line_no);
    const std::string& d = f[col["decision"]];
    if (d == "execute") {
      r.decision = TickDecision::Execute;
    } else if (d == "skip") {
      r.decision = TickDecision::Skip;
    } else if (d == "none") {
      r.decision = TickDecision::NoGrasp;
    } else {
      throw std::runtime_error("log line " + std::to_string(line_no) + ": bad decision '" + d + "'");
    }
    r.target = parse_class_field(f[col["target"]], line_no);
    r.counts.counts[0] = parse_number<std::int64_t>(f[col["count_red"]], line_no);
    r.counts.counts[1] = parse_number<std::int64_t>(f[col["count_yellow"]], line_no);
    r.counts.counts[2] = parse_number<std::int64_t>(f[col["count_bluegreen"]], line_no);
    r.counts.counts[3] = parse_number<std::int64_t>(f[col["count_unknown"]], line_no);
    if (auto c = opt("p_success")) r.p_success = parse_number<double>(f[*c], line_no);
    if (auto c = opt("pred_target")) r.predicted_target = parse_class_field(f[*c], line_no);
    if (auto c = opt("model_version")) r.model_version = parse_number<std::uint64_t>(f[*c], line_no);
    if (auto c = opt("dataset_size")) r.dataset_size = parse_number<int>(f[*c], line_no);
    if (auto c = opt("scene_objects")) r.scene_objects = parse_number<int>(f[*c], line_no);
    if (auto c = opt("proposals")) r.proposals = parse_number<int>(f[*c], line_no);
    if (auto c = opt("center_x")) r.grasp.center_x = parse_number<double>(f[*c], line_no);
    if (auto c = opt("center_y")) r.grasp.center_y = parse_number<double>(f[*c], line_no);
    if (auto c = opt("angle")) r.grasp.angle = parse_number<double>(f[*c], line_no);
    if (auto c = opt("inner_span")) r.grasp.inner_span = parse_number<double>(f[*c], line_no);
    if (auto c = opt("extra_opening")) r.grasp.extra_opening = parse_number<double>(f[*c], line_no);
    if (auto c = opt("z")) r.grasp.z = parse_number<double>(f[*c], line_no);
    const char* pred_cols[4] = {"pred_red", "pred_yellow", "pred_bluegreen", "pred_unknown"};
    for (int k = 0; k < 4; ++k) {
      if (auto c = opt(pred_cols[k])) r.predicted[k] = parse_number<double>(f[*c], line_no);
    }
    if (auto c = opt("collided")) r.collided = parse_number<int>(f[*c], line_no) != 0;
    if (auto c = opt("robot_fault")) r.robot_fault = parse_number<int>(f[*c], line_no) != 0;
    log.push_back(r);
  }
  return log;
}

void write_curves_csv(std::ostream& out, std::span<const BlockMetrics> curves) {
  out << "block,first_tick,last_tick,picks,success_rate,purity\n";
  char buf[160];
  for (const BlockMetrics& b : curves) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.4f,", b.block, b.first_tick, b.last_tick,
                  b.picks, b.success_rate);
    out << buf;
    if (b.purity) {
      std::snprintf(buf, sizeof buf, "%.4f", *b.purity);
      out << buf;
    }
    out << '\n';
  }
}

void save_models(const std::filesystem::path& dir, const ModelPair& models,
                 const std::string& suffix) {
  std::filesystem::create_directories(dir);
  auto save = [&](const std::shared_ptr<const Forest>& f, const std::string& name) {
    if (!f) return;
    std::ofstream out(dir / (name + suffix + ".json"));
    if (!out) throw std::runtime_error("cannot write model checkpoint in " + dir.string());
    f->save(out);
  };
  save(models.success, "success");
  save(models.color, "color");
}

RunResult run_to_directory(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& dir, const TickObserver& observer) {
  std::filesystem::create_directories(dir);
  const auto model_dir = dir / "models";
  char tag[32];
  RunResult res = run(cfg, seed, observer, [&](const ModelPair& m) {
    std::snprintf(tag, sizeof tag, "_v%06llu", static_cast<unsigned long long>(m.version));
    save_models(model_dir, m, tag);
  });
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("log.csv");
    write_log_csv(out, res.log);
  }
  {
    auto out = open("curves.csv");
    write_curves_csv(out, block_metrics(res.log, cfg.block_size));
  }
  {
    auto out = open("config.txt");
    out << "# seed = " << seed << '\n' << format_experiment_config(cfg);
  }
  save_models(model_dir, res.final_models, "_final");
  return res;
}

}  // namespace pilesort
