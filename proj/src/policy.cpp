#include "pilesort/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pilesort {

void PolicyConfig::validate() const {
  if (!(purity_center >= 0.0 && purity_center <= 1.0)) {
    throw std::invalid_argument("purity_center must lie in [0, 1]");
  }
  if (!(purity_slope > 0.0)) throw std::invalid_argument("purity_slope must be positive");
  if (!(skip_threshold >= 0.0 && skip_threshold <= 1.0)) {
    throw std::invalid_argument("skip_threshold must lie in [0, 1]");
  }
  if (!(skip_probability >= 0.0 && skip_probability <= 1.0)) {
    throw std::invalid_argument("skip_probability must lie in [0, 1]");
  }
  if (!(expected_pixel_scale > 0.0)) {
    throw std::invalid_argument("expected_pixel_scale must be positive");
  }
}

double purity_value(double purity, double center, double slope) {
  return 1.0 / (1.0 + std::exp(-slope * (purity - center)));
}

EvaluatedGrasp evaluate_one(const GraspRectangle& grasp, double p_success,
                            const ColorVector& expected_colors, const PolicyConfig& cfg) {
  EvaluatedGrasp e;
  e.grasp = grasp;
  e.p_success = std::clamp(p_success, 0.0, 1.0);
  double total = 0.0;
  int target = 0;
  for (int k = 0; k < kNumColorBins; ++k) {
    e.expected_colors[k] = std::max(0.0, expected_colors[k]);
    total += e.expected_colors[k];
    if (e.expected_colors[k] > e.expected_colors[target]) target = k;
  }
  e.target = static_cast<ColorClass>(target);
  if (total <= 0.0) return e;
  e.purity = e.expected_colors[target] / total;
  e.recovered = e.expected_colors[target] * e.p_success;
  e.value = purity_value(e.purity, cfg.purity_center, cfg.purity_slope) * e.recovered;
  return e;
}

namespace {

ColorVector null_colors(const PolicyConfig& cfg) {
  ColorVector c{};
  c[static_cast<int>(ColorClass::Unknown)] = cfg.expected_pixel_scale;
  return c;
}

ColorVector scaled(const double* proportions, const PolicyConfig& cfg) {
  ColorVector c{};
  for (int k = 0; k < kNumColorBins; ++k) c[k] = proportions[k] * cfg.expected_pixel_scale;
  return c;
}

void check_model(const Forest& f, int features, int outputs, const char* what) {
  if (f.num_features() != features) {
    throw std::invalid_argument(std::string(what) + " model expects a different feature length");
  }
  if (f.output_dim() != outputs) {
    throw std::invalid_argument(std::string(what) + " model has the wrong output dimension");
  }
}

// Success probability from a two-class frequency vector.
double success_of(const double* freq) { return freq[1]; }

}  // namespace

std::vector<EvaluatedGrasp> evaluate(const ModelPair& models, std::span<const Proposal> proposals,
                                     const PolicyConfig& cfg) {
  if (models.success) check_model(*models.success, kSuccessLength, 2, "success");
  if (models.color) check_model(*models.color, kColorLength, kNumColorBins, "color");

  std::vector<EvaluatedGrasp> out;
  out.reserve(proposals.size());
  std::vector<float> sbase(kSuccessLength), cbase(kColorLength), openings;
  std::vector<double> sp, cp;
  std::size_t i = 0;
  while (i < proposals.size()) {
    const Proposal& first = proposals[i];
    if (!first.slices) throw std::invalid_argument("proposal has no feature slices");
    // Group variants that differ only in extra opening (ascending).
    std::size_t j = i + 1;
    while (j < proposals.size() && proposals[j].slices == first.slices &&
           proposals[j].grasp.z == first.grasp.z &&
           proposals[j].grasp.extra_opening >= proposals[j - 1].grasp.extra_opening) {
      ++j;
    }
    const std::size_t n = j - i;
    openings.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      openings[r] = static_cast<float>(proposals[i + r].grasp.extra_opening);
    }

    if (models.success) {
      first.slices->success_features(first.grasp, sbase);
      sp.resize(n * 2);
      models.success->predict_sweep(sbase, kSuccessLength - kScalarCount + kExtraOpening,
                                    openings, sp);
    }
    if (models.color) {
      first.slices->color_features(first.grasp, cbase);
      cp.resize(n * kNumColorBins);
      models.color->predict_sweep(cbase, kColorLength - kScalarCount + kExtraOpening, openings,
                                  cp);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const double p = models.success ? success_of(&sp[r * 2]) : 1.0;
      const ColorVector c = models.color ? scaled(&cp[r * kNumColorBins], cfg) : null_colors(cfg);
      out.push_back(evaluate_one(proposals[i + r].grasp, p, c, cfg));
    }
    i = j;
  }
  return out;
}

std::vector<EvaluatedGrasp> evaluate(const ModelPair& models,
                                     std::span<const GraspRectangle> grasps,
                                     std::span<const FeatureVector> success_features,
                                     std::span<const FeatureVector> color_features,
                                     const PolicyConfig& cfg) {
  if (success_features.size() != grasps.size() || color_features.size() != grasps.size()) {
    throw std::invalid_argument("one feature vector per grasp is required");
  }
  if (models.success) check_model(*models.success, kSuccessLength, 2, "success");
  if (models.color) check_model(*models.color, kColorLength, kNumColorBins, "color");
  std::vector<EvaluatedGrasp> out;
  out.reserve(grasps.size());
  std::vector<double> sp(2), cp(kNumColorBins);
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    if (success_features[i].values.size() != static_cast<std::size_t>(kSuccessLength) ||
        color_features[i].values.size() != static_cast<std::size_t>(kColorLength)) {
      throw std::invalid_argument("feature vector length mismatch");
    }
    double p = 1.0;
    if (models.success) {
      models.success->predict_into(success_features[i].values, sp);
      p = success_of(sp.data());
    }
    ColorVector c = null_colors(cfg);
    if (models.color) {
      models.color->predict_into(color_features[i].values, cp);
      c = scaled(cp.data(), cfg);
    }
    out.push_back(evaluate_one(grasps[i], p, c, cfg));
  }
  return out;
}

int choose_max(std::span<const EvaluatedGrasp> evaluated) {
  int best = -1;
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    if (best < 0 || evaluated[i].value > evaluated[best].value) best = static_cast<int>(i);
  }
  return best;
}

Decision select(std::span<const EvaluatedGrasp> evaluated, Rng& rng, const PolicyConfig& cfg) {
  Decision d;
  d.index = choose_max(evaluated);
  if (d.index < 0) return d;
  const double u = uniform01(rng);
  d.execute = !(evaluated[d.index].p_success < cfg.skip_threshold && u < cfg.skip_probability);
  return d;
}

}  // namespace pilesort
