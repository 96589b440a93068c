#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pilesort/feedback.hpp"
#include "pilesort/heightmap.hpp"
#include "pilesort/policy.hpp"
#include "pilesort/simworld.hpp"

namespace pilesort {

/// The simulated cell: belt, top camera, gripper, pile feeder, grasp physics
/// and drop zone.
struct WorldConfig {
  double belt_width_mm = 1000.0;
  double belt_height_mm = 750.0;
  CaptureConfig capture{200, 150, kDefaultResolutionMm, 2000.0, 20.0};
  GripperGeometry gripper{15.0, 45.0, 20.0, 200.0, OpeningCurve::linear(20.0, 200.0)};
  PileConfig pile;
  GraspSimConfig grasp_sim{0.03, 0.05, 0.9, 15.0, 0.5, 0.5, 20.0, true};
  DropZoneConfig dropzone;
  void validate() const;
};

struct ExperimentConfig {
  WorldConfig world;
  PolicyConfig policy;
  FeedbackConfig feedback;
  std::vector<HsvBox> hsv_boxes = default_hsv_boxes();
  ForestParams success_forest;
  ForestParams color_forest;

  int pick_budget = 500;
  /// Safety stop on loop iterations; 0 means 10 x pick_budget + 100.
  int max_ticks = 0;
  int sample_size = 2000;
  int num_angles = 16;
  int retrain_every = 1;
  /// false keeps the null model for the whole run.
  bool learning = true;
  int refresh_min_objects = 3;
  int refresh_after_skips = 5;
  double robot_fault_probability = 0.0;
  int block_size = 25;
  /// Where material goes when the best grasp's predicted class is unknown;
  /// nullopt means the majority class of the pile mix.
  std::optional<ColorClass> default_target;
  /// Model checkpoints every this many published versions (0: final only).
  int checkpoint_every = 0;

  ColorClass fallback_target() const;
  int tick_limit() const { return max_ticks > 0 ? max_ticks : 10 * pick_budget + 100; }
  void validate() const;
};

/// Flat `key = value` text; unknown keys are errors.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);
/// The effective configuration in the same format.
std::string format_experiment_config(const ExperimentConfig& cfg);

struct TrainingExample {
  FeatureVector success_features;
  FeatureVector color_features;
  ColorCounts counts;
  bool succeeded() const { return counts.total() > 0; }
};

struct TrainParams {
  ForestParams success;
  ForestParams color;
};

/// Classifier on every example, proportion regressor on successes only; no
/// data leaves the corresponding model null.
ModelPair train(std::span<const TrainingExample> data, const TrainParams& params, Rng& rng);

/// Latest published models. Readers get a complete, immutable pair; versions
/// strictly increase with every publish.
class ModelStore {
 public:
  ModelStore();
  std::shared_ptr<const ModelPair> latest() const;
  /// Stamps the next version and publishes; returns that version.
  std::uint64_t publish(ModelPair models);

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ModelPair> current_;
};

struct ProposalSet {
  Capture capture;
  std::vector<Proposal> proposals;
  std::size_t closed_count = 0;
};

/// capture -> closed grasps -> weighted sample -> openings -> slices.
ProposalSet proposed_grasps(const Scene& scene, const WorldConfig& world,
                            std::size_t sample_size, int num_angles, Rng& rng);

enum class TickDecision { Execute, Skip, NoGrasp };

struct PickRecord {
  int tick = 0;
  TickDecision decision = TickDecision::NoGrasp;
  std::uint64_t model_version = 0;
  int dataset_size = 0;
  int scene_objects = 0;
  int proposals = 0;
  GraspRectangle grasp;
  double p_success = 0.0;
  ColorVector predicted{};
  ColorClass predicted_target = ColorClass::Unknown;
  /// Destination actually used: the predicted class, or the fallback when
  /// the prediction is unknown.
  ColorClass target = ColorClass::Unknown;
  ColorCounts counts;
  bool collided = false;
  bool robot_fault = false;

  bool executed() const { return decision == TickDecision::Execute; }
  bool success() const { return counts.total() > 0; }
};

/// Called after every tick (for progress output).
using TickObserver = std::function<void(const PickRecord&)>;

struct RunResult {
  std::vector<PickRecord> log;
  ModelPair final_models;
  std::size_t dataset_size = 0;
};

RunResult run(const ExperimentConfig& cfg, std::uint64_t seed,
              const TickObserver& observer = {},
              const std::function<void(const ModelPair&)>& on_publish = {});

struct BlockMetrics {
  int block = 0;
  int first_tick = 0;
  int last_tick = 0;
  int picks = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::int64_t target_pixels = 0;
  std::int64_t total_pixels = 0;
  std::optional<double> purity;
};

/// Consecutive full blocks of executed picks.
std::vector<BlockMetrics> block_metrics(std::span<const PickRecord> log, int block_size = 25);

void write_log_csv(std::ostream& out, std::span<const PickRecord> log);
std::vector<PickRecord> read_log_csv(std::istream& in);
void write_curves_csv(std::ostream& out, std::span<const BlockMetrics> curves);

/// Runs and writes log.csv, curves.csv, config.txt and models/ under `dir`.
RunResult run_to_directory(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& dir,
                           const TickObserver& observer = {});

void save_models(const std::filesystem::path& dir, const ModelPair& models,
                 const std::string& suffix);

}  // namespace pilesort
