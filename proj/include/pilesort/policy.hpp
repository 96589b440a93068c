#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pilesort/color.hpp"
#include "pilesort/features.hpp"
#include "pilesort/forest.hpp"
#include "pilesort/grasp.hpp"
#include "pilesort/rng.hpp"

namespace pilesort {

struct PolicyConfig {
  double purity_center = 0.8;
  double purity_slope = 20.0;
  double skip_threshold = 0.1;
  double skip_probability = 0.95;
  /// Predicted color proportions are multiplied by this nominal pixel count.
  double expected_pixel_scale = 5000.0;
  void validate() const;
};

/// Logistic preference for grasps above the purity center.
double purity_value(double purity, double center = 0.8, double slope = 20.0);

/// Success classifier and color-proportion regressor. A missing forest acts
/// as the null model: success probability 1 and all expected pixels unknown.
struct ModelPair {
  std::shared_ptr<const Forest> success;
  std::shared_ptr<const Forest> color;
  std::uint64_t version = 0;

  bool success_is_null() const { return !success; }
  bool color_is_null() const { return !color; }
};

/// A grasp plus the pooled slices its features are built from. Opening
/// variants of one closed grasp share the same slices.
struct Proposal {
  GraspRectangle grasp;
  std::shared_ptr<const GraspSlices> slices;

  FeatureVector success_features() const { return slices->success_vector(grasp); }
  FeatureVector color_features() const { return slices->color_vector(grasp); }
};

struct EvaluatedGrasp {
  GraspRectangle grasp;
  double p_success = 0.0;
  ColorVector expected_colors{};
  ColorClass target = ColorClass::Unknown;
  double purity = 0.0;
  double recovered = 0.0;
  double value = 0.0;
};

/// The utility chain for one grasp given its model outputs.
EvaluatedGrasp evaluate_one(const GraspRectangle& grasp, double p_success,
                            const ColorVector& expected_colors,
                            const PolicyConfig& cfg = {});

/// Evaluates proposals against the models. Consecutive proposals that share
/// slices and z differ only in extra opening and are predicted in one sweep.
std::vector<EvaluatedGrasp> evaluate(const ModelPair& models,
                                     std::span<const Proposal> proposals,
                                     const PolicyConfig& cfg = {});

/// Same, from precomputed feature vectors.
std::vector<EvaluatedGrasp> evaluate(const ModelPair& models,
                                     std::span<const GraspRectangle> grasps,
                                     std::span<const FeatureVector> success_features,
                                     std::span<const FeatureVector> color_features,
                                     const PolicyConfig& cfg = {});

struct Decision {
  bool execute = false;
  int index = -1;  // best grasp, -1 when there was nothing to choose from
};

/// Index of the highest value, lowest index on ties; -1 when empty.
int choose_max(std::span<const EvaluatedGrasp> evaluated);

/// Picks the best grasp; when its success probability is below the
/// threshold it is skipped with the configured probability. Draws exactly
/// one uniform number when the list is non-empty.
Decision select(std::span<const EvaluatedGrasp> evaluated, Rng& rng,
                const PolicyConfig& cfg = {});

}  // namespace pilesort
