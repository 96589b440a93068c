#include "pilesort/forest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace pilesort {

namespace {

constexpr std::uint64_t kTreeStream = 0x7472656573ull;
constexpr int kFormatVersion = 1;

struct Resolved {
  int max_features;
  int min_samples_split;
};

Resolved resolve(const ForestParams& p, ForestKind kind, int d) {
  if (p.num_trees < 1) throw std::invalid_argument("forest needs at least one tree");
  if (p.max_features < 0 || p.min_samples_split < 0) {
    throw std::invalid_argument("forest parameters must be nonnegative");
  }
  Resolved r{};
  if (p.max_features > 0) {
    r.max_features = std::min(p.max_features, d);
  } else if (kind == ForestKind::Classifier) {
    r.max_features = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))));
  } else {
    r.max_features = d;
  }
  if (p.min_samples_split > 0) {
    r.min_samples_split = p.min_samples_split;
  } else {
    r.min_samples_split = kind == ForestKind::Classifier ? 5 : 2;
  }
  return r;
}

// Column-major copy so per-feature scans over a node stay contiguous.
struct Columns {
  int n = 0;
  int d = 0;
  std::vector<float> data;
  const float* col(int f) const { return data.data() + static_cast<std::size_t>(f) * n; }
};

class TreeBuilder {
 public:
  TreeBuilder(const Columns& x, const std::vector<double>& y, int dim, Resolved r)
      : x_(x), y_(y), dim_(dim), r_(r) {}

  Forest::Tree build(Rng& rng) {
    Forest::Tree tree;
    std::vector<int> idx(x_.n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> perm(x_.d);
    std::iota(perm.begin(), perm.end(), 0);

    struct Work {
      int node, begin, end;
    };
    std::vector<Work> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, x_.n});
    std::vector<double> total(dim_), left(dim_);

    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      const int n = w.end - w.begin;
      const int* ids = idx.data() + w.begin;

      std::fill(total.begin(), total.end(), 0.0);
      for (int i = 0; i < n; ++i) {
        const double* yi = &y_[static_cast<std::size_t>(ids[i]) * dim_];
        for (int k = 0; k < dim_; ++k) total[k] += yi[k];
      }

      int best_feature = -1;
      double best_threshold = 0.0;
      if (n >= r_.min_samples_split && !targets_constant(ids, n)) {
        double best_score = -std::numeric_limits<double>::infinity();
        int valid = 0;
        // Draw features without replacement until K non-constant ones have
        // been scored or every feature has been tried.
        for (int t = 0; t < x_.d && valid < r_.max_features; ++t) {
          const auto j = static_cast<int>(uniform_int(rng, t, x_.d - 1));
          std::swap(perm[t], perm[j]);
          const int f = perm[t];
          const float* col = x_.col(f);
          float lo = col[ids[0]];
          float hi = lo;
          for (int i = 1; i < n; ++i) {
            lo = std::min(lo, col[ids[i]]);
            hi = std::max(hi, col[ids[i]]);
          }
          if (!(lo < hi)) continue;
          ++valid;
          double thr = uniform(rng, lo, hi);
          if (!(thr > lo)) thr = 0.5 * (static_cast<double>(lo) + hi);

          std::fill(left.begin(), left.end(), 0.0);
          int nl = 0;
          for (int i = 0; i < n; ++i) {
            if (col[ids[i]] < thr) {
              ++nl;
              const double* yi = &y_[static_cast<std::size_t>(ids[i]) * dim_];
              for (int k = 0; k < dim_; ++k) left[k] += yi[k];
            }
          }
          const int nr = n - nl;
          // Impurity decrease up to terms shared by all candidates.
          double score = 0.0;
          for (int k = 0; k < dim_; ++k) {
            const double sr = total[k] - left[k];
            score += left[k] * left[k] / nl + sr * sr / nr;
          }
          if (score > best_score) {
            best_score = score;
            best_feature = f;
            best_threshold = thr;
          }
        }
      }

      if (best_feature < 0) {
        Forest::Node& leaf = tree.nodes[w.node];
        leaf.leaf = static_cast<int>(tree.leaf_values.size()) / dim_;
        for (int k = 0; k < dim_; ++k) tree.leaf_values.push_back(total[k] / n);
        continue;
      }

      const float* col = x_.col(best_feature);
      int* first = idx.data() + w.begin;
      int* mid = std::stable_partition(first, first + n,
                                       [&](int i) { return col[i] < best_threshold; });
      const int split = w.begin + static_cast<int>(mid - first);
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      Forest::Node& node = tree.nodes[w.node];
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.left = l;
      node.right = l + 1;
      stack.push_back({l + 1, split, w.end});
      stack.push_back({l, w.begin, split});
    }
    return tree;
  }

 private:
  bool targets_constant(const int* ids, int n) const {
    const double* y0 = &y_[static_cast<std::size_t>(ids[0]) * dim_];
    for (int i = 1; i < n; ++i) {
      const double* yi = &y_[static_cast<std::size_t>(ids[i]) * dim_];
      if (!std::equal(y0, y0 + dim_, yi)) return false;
    }
    return true;
  }

  const Columns& x_;
  const std::vector<double>& y_;
  int dim_;
  Resolved r_;
};

const double* leaf_for(const Forest::Tree& tree, std::span<const float> x, int dim) {
  const Forest::Node* node = &tree.nodes[0];
  while (node->feature >= 0) {
    node = &tree.nodes[x[node->feature] < node->threshold ? node->left : node->right];
  }
  return &tree.leaf_values[static_cast<std::size_t>(node->leaf) * dim];
}

void sweep_tree(const Forest::Tree& tree, int node_index, std::span<const float> base,
                int vary, std::span<const float> values, int lo, int hi, int dim,
                double* out) {
  while (lo < hi) {
    const Forest::Node& node = tree.nodes[node_index];
    if (node.feature < 0) {
      const double* leaf = &tree.leaf_values[static_cast<std::size_t>(node.leaf) * dim];
      for (int r = lo; r < hi; ++r) {
        for (int k = 0; k < dim; ++k) out[static_cast<std::size_t>(r) * dim + k] += leaf[k];
      }
      return;
    }
    if (node.feature != vary) {
      node_index = base[node.feature] < node.threshold ? node.left : node.right;
      continue;
    }
    // values are ascending, so rows [lo, mid) go left and [mid, hi) go right.
    const auto it = std::lower_bound(values.begin() + lo, values.begin() + hi, node.threshold,
                                     [](float v, double t) { return v < t; });
    const int mid = static_cast<int>(it - values.begin());
    sweep_tree(tree, node.left, base, vary, values, lo, mid, dim, out);
    node_index = node.right;
    lo = mid;
  }
}

}  // namespace

bool operator==(const Forest::Node& a, const Forest::Node& b) {
  return a.feature == b.feature && a.threshold == b.threshold && a.left == b.left &&
         a.right == b.right && a.leaf == b.leaf;
}

bool operator==(const Forest& a, const Forest& b) {
  if (a.kind_ != b.kind_ || a.output_dim_ != b.output_dim_ ||
      a.num_features_ != b.num_features_ || a.trees_.size() != b.trees_.size()) {
    return false;
  }
  for (std::size_t t = 0; t < a.trees_.size(); ++t) {
    if (a.trees_[t].nodes != b.trees_[t].nodes ||
        a.trees_[t].leaf_values != b.trees_[t].leaf_values) {
      return false;
    }
  }
  return true;
}

Forest Forest::fit_classifier(const std::vector<std::vector<float>>& x,
                              std::span<const int> labels, int num_classes,
                              const ForestParams& params, Rng& rng) {
  if (num_classes < 1) throw std::invalid_argument("classifier needs at least one class");
  if (labels.size() != x.size()) throw std::invalid_argument("feature and label counts differ");
  std::vector<double> targets(x.size() * num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("class label out of range");
    }
    targets[i * num_classes + labels[i]] = 1.0;
  }
  return fit(x, targets, num_classes, ForestKind::Classifier, params, rng);
}

Forest Forest::fit_regressor(const std::vector<std::vector<float>>& x,
                             const std::vector<std::vector<double>>& y,
                             const ForestParams& params, Rng& rng) {
  if (y.size() != x.size()) throw std::invalid_argument("feature and target counts differ");
  if (y.empty()) throw std::invalid_argument("cannot fit a forest on an empty dataset");
  const std::size_t dim = y[0].size();
  if (dim == 0) throw std::invalid_argument("targets must be non-empty");
  std::vector<double> targets;
  targets.reserve(y.size() * dim);
  for (const auto& row : y) {
    if (row.size() != dim) throw std::invalid_argument("inconsistent target lengths");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("targets must be finite");
    }
    targets.insert(targets.end(), row.begin(), row.end());
  }
  return fit(x, targets, static_cast<int>(dim), ForestKind::Regressor, params, rng);
}

Forest Forest::fit(const std::vector<std::vector<float>>& x, const std::vector<double>& targets,
                   int dim, ForestKind kind, const ForestParams& params, Rng& rng) {
  if (x.empty()) throw std::invalid_argument("cannot fit a forest on an empty dataset");
  const auto d = static_cast<int>(x[0].size());
  if (d == 0) throw std::invalid_argument("feature rows must be non-empty");
  const Resolved r = resolve(params, kind, d);

  Columns cols;
  cols.n = static_cast<int>(x.size());
  cols.d = d;
  cols.data.resize(static_cast<std::size_t>(cols.n) * d);
  for (int i = 0; i < cols.n; ++i) {
    if (static_cast<int>(x[i].size()) != d) throw std::invalid_argument("inconsistent row lengths");
    for (int f = 0; f < d; ++f) {
      const float v = x[i][f];
      if (!std::isfinite(v)) throw std::invalid_argument("features must be finite");
      cols.data[static_cast<std::size_t>(f) * cols.n + i] = v;
    }
  }

  Forest forest;
  forest.kind_ = kind;
  forest.output_dim_ = dim;
  forest.num_features_ = d;
  forest.params_ = params;
  forest.trees_.reserve(params.num_trees);
  const std::uint64_t master = rng();
  TreeBuilder builder(cols, targets, dim, r);
  for (int t = 0; t < params.num_trees; ++t) {
    Rng tree_rng(derive_seed(master, kTreeStream, static_cast<std::uint64_t>(t)));
    forest.trees_.push_back(builder.build(tree_rng));
  }
  return forest;
}

void Forest::predict_into(std::span<const float> x, std::span<double> out) const {
  if (trees_.empty()) throw std::logic_error("forest has not been fitted");
  if (static_cast<int>(x.size()) != num_features_) {
    throw std::invalid_argument("feature vector length does not match the forest");
  }
  if (static_cast<int>(out.size()) != output_dim_) {
    throw std::invalid_argument("output buffer length does not match the forest");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (const Tree& tree : trees_) {
    const double* leaf = leaf_for(tree, x, output_dim_);
    for (int k = 0; k < output_dim_; ++k) out[k] += leaf[k];
  }
  const double m = static_cast<double>(trees_.size());
  for (double& v : out) v /= m;
}

std::vector<double> Forest::predict(std::span<const float> x) const {
  std::vector<double> out(output_dim_);
  predict_into(x, out);
  return out;
}

void Forest::predict_sweep(std::span<const float> base, int vary_feature,
                           std::span<const float> values, std::span<double> out) const {
  if (trees_.empty()) throw std::logic_error("forest has not been fitted");
  if (static_cast<int>(base.size()) != num_features_) {
    throw std::invalid_argument("feature vector length does not match the forest");
  }
  if (vary_feature < 0 || vary_feature >= num_features_) {
    throw std::invalid_argument("swept feature index out of range");
  }
  if (out.size() != values.size() * output_dim_) {
    throw std::invalid_argument("output buffer length does not match the sweep");
  }
  if (!std::is_sorted(values.begin(), values.end())) {
    throw std::invalid_argument("swept values must be ascending");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const int rows = static_cast<int>(values.size());
  for (const Tree& tree : trees_) {
    sweep_tree(tree, 0, base, vary_feature, values, 0, rows, output_dim_, out.data());
  }
  const double m = static_cast<double>(trees_.size());
  for (double& v : out) v /= m;
}

std::string Forest::to_json() const {
  using nlohmann::json;
  json doc;
  doc["format"] = "pilesort-forest";
  doc["version"] = kFormatVersion;
  doc["kind"] = kind_ == ForestKind::Classifier ? "classifier" : "regressor";
  doc["output_dim"] = output_dim_;
  doc["num_features"] = num_features_;
  doc["params"] = {{"num_trees", params_.num_trees},
                   {"max_features", params_.max_features},
                   {"min_samples_split", params_.min_samples_split}};
  json trees = json::array();
  for (const Tree& tree : trees_) {
    std::vector<int> feature, left, right, leaf;
    std::vector<double> threshold;
    for (const Node& n : tree.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      leaf.push_back(n.leaf);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"leaf", leaf},
                     {"values", tree.leaf_values}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

Forest Forest::from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("forest file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "pilesort-forest") {
      throw std::runtime_error("not a forest file");
    }
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw std::runtime_error("unsupported forest file version");
    }
    Forest f;
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "classifier") {
      f.kind_ = ForestKind::Classifier;
    } else if (kind == "regressor") {
      f.kind_ = ForestKind::Regressor;
    } else {
      throw std::runtime_error("unknown forest kind '" + kind + "'");
    }
    f.output_dim_ = doc.at("output_dim").get<int>();
    f.num_features_ = doc.at("num_features").get<int>();
    const json& p = doc.at("params");
    f.params_.num_trees = p.at("num_trees").get<int>();
    f.params_.max_features = p.at("max_features").get<int>();
    f.params_.min_samples_split = p.at("min_samples_split").get<int>();
    if (f.output_dim_ < 1 || f.num_features_ < 1) throw std::runtime_error("bad forest shape");

    for (const json& jt : doc.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<int>>();
      const auto right = jt.at("right").get<std::vector<int>>();
      const auto leaf = jt.at("leaf").get<std::vector<int>>();
      Tree tree;
      tree.leaf_values = jt.at("values").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
          leaf.size() != n || tree.leaf_values.size() % f.output_dim_ != 0) {
        throw std::runtime_error("malformed tree");
      }
      const auto num_leaves = static_cast<int>(tree.leaf_values.size() / f.output_dim_);
      const auto num_nodes = static_cast<int>(n);
      tree.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        Node& node = tree.nodes[i];
        node = {feature[i], threshold[i], left[i], right[i], leaf[i]};
        const bool ok = node.feature < 0
                            ? node.leaf >= 0 && node.leaf < num_leaves
                            : node.feature < f.num_features_ && std::isfinite(node.threshold) &&
                                  node.left > static_cast<int>(i) && node.left < num_nodes &&
                                  node.right > static_cast<int>(i) && node.right < num_nodes;
        if (!ok) throw std::runtime_error("malformed tree node");
      }
      f.trees_.push_back(std::move(tree));
    }
    if (f.trees_.empty()) throw std::runtime_error("forest has no trees");
    return f;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed forest file: ") + e.what());
  }
}

void Forest::save(std::ostream& out) const { out << to_json() << '\n'; }

Forest Forest::load(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return from_json(text);
}

}  // namespace pilesort
