#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pilesort/rng.hpp"

namespace pilesort {

enum class ForestKind { Classifier, Regressor };

struct ForestParams {
  int num_trees = 100;
  /// Candidate features per node; 0 picks ceil(sqrt(d)) for classifiers and
  /// d for regressors.
  int max_features = 0;
  /// Nodes with fewer samples become leaves; 0 picks 5 for classifiers and
  /// 2 for regressors.
  int min_samples_split = 0;
};

/// Extremely randomized trees (Geurts et al.): every tree sees the full
/// training set, each node scores K random features with one uniform random
/// threshold each and keeps the best impurity decrease. Classification uses
/// one-hot targets, so the same sum-of-squares score is the Gini decrease for
/// classifiers and the variance decrease for regressors, and leaves store
/// class frequencies or mean targets respectively.
class Forest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // samples with x < threshold go left
    int left = -1;
    int right = -1;
    int leaf = -1;  // leaf ordinal; values start at leaf * output_dim
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<double> leaf_values;
  };

  Forest() = default;

  static Forest fit_classifier(const std::vector<std::vector<float>>& x,
                               std::span<const int> labels, int num_classes,
                               const ForestParams& params, Rng& rng);
  static Forest fit_regressor(const std::vector<std::vector<float>>& x,
                              const std::vector<std::vector<double>>& y,
                              const ForestParams& params, Rng& rng);

  std::vector<double> predict(std::span<const float> x) const;
  void predict_into(std::span<const float> x, std::span<double> out) const;

  /// Predictions for rows equal to `base` except at `vary_feature`, which takes
  /// each of `values` (ascending) in turn. Shared branches are walked once per
  /// tree. Results match predict() bit for bit; `out` is row-major
  /// values.size() x output_dim().
  void predict_sweep(std::span<const float> base, int vary_feature,
                     std::span<const float> values, std::span<double> out) const;

  ForestKind kind() const { return kind_; }
  int output_dim() const { return output_dim_; }
  int num_features() const { return num_features_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }

  /// Versioned JSON document (format "pilesort-forest", version 1).
  void save(std::ostream& out) const;
  static Forest load(std::istream& in);
  std::string to_json() const;
  static Forest from_json(const std::string& text);

  friend bool operator==(const Forest& a, const Forest& b);

 private:
  static Forest fit(const std::vector<std::vector<float>>& x,
                    const std::vector<double>& targets, int dim, ForestKind kind,
                    const ForestParams& params, Rng& rng);

  ForestKind kind_ = ForestKind::Regressor;
  int output_dim_ = 0;
  int num_features_ = 0;
  ForestParams params_;
  std::vector<Tree> trees_;
};

bool operator==(const Forest::Node& a, const Forest::Node& b);

}  // namespace pilesort
