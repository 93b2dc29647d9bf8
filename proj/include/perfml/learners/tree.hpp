#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "perfml/encoder.hpp"
#include "perfml/error.hpp"

namespace perfml {

/// Binary regression tree with variance-reduction splits and a linear model
/// in every leaf. A leaf falls back to its mean when the local regression is
/// singular or does not beat the mean once training errors are inflated by
/// (n + v) / (n - v) for v parameters. The only structural constraint is the
/// minimum number of training instances per leaf.
class RegressionTree {
public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::size_t count = 0;
    double mean = 0.0;
    std::vector<double> coef;  // leaf: intercept followed by one weight per feature; empty = mean
  };

  RegressionTree() = default;

  static RegressionTree fit(std::span<const EncodedInstance> train, std::size_t min_instances);

  std::size_t width() const { return width_; }
  std::size_t min_instances() const { return min_instances_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  std::size_t leaf_of(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0)
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes_[i].feature)] <= nodes_[i].threshold
                                       ? nodes_[i].left
                                       : nodes_[i].right);
    return i;
  }

  double predict(std::span<const double> x) const {
    const Node& leaf = nodes_[leaf_of(x)];
    if (leaf.coef.empty()) return leaf.mean;
    double y = leaf.coef[0];
    for (std::size_t j = 0; j < width_; ++j) y += leaf.coef[j + 1] * x[j];
    return y;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
  }

  nlohmann::json to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_)
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                       {"count", n.count}, {"mean", n.mean}, {"coef", n.coef}});
    return {{"width", width_}, {"min_instances", min_instances_}, {"nodes", nodes}};
  }

  static RegressionTree from_json(const nlohmann::json& j) {
    RegressionTree t;
    t.width_ = j.at("width").get<std::size_t>();
    t.min_instances_ = j.at("min_instances").get<std::size_t>();
    for (const auto& jn : j.at("nodes")) {
      Node n;
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
      n.count = jn.at("count").get<std::size_t>();
      n.mean = jn.at("mean").get<double>();
      n.coef = jn.at("coef").get<std::vector<double>>();
      t.nodes_.push_back(std::move(n));
    }
    if (t.nodes_.empty()) throw Error("tree model has no nodes");
    return t;
  }

private:
  struct Builder;

  std::vector<Node> nodes_;
  std::size_t width_ = 0;
  std::size_t min_instances_ = 1;
};

struct RegressionTree::Builder {
  std::vector<EncodedInstance> rows;  // canonical order
  std::size_t width;
  std::size_t min_leaf;
  std::vector<Node>& nodes;

  static double sse(const std::vector<EncodedInstance>& rows, std::span<const std::size_t> idx, double& mean) {
    mean = 0.0;
    for (auto i : idx) mean += rows[i].target;
    mean /= static_cast<double>(idx.size());
    double s = 0.0;
    for (auto i : idx) s += (rows[i].target - mean) * (rows[i].target - mean);
    return s;
  }

  /// Rows in idx that differ in features or target; exact repeats sit next
  /// to each other in canonical order.
  std::size_t distinct_rows(std::span<const std::size_t> idx) const {
    std::size_t d = idx.empty() ? 0 : 1;
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const auto& a = rows[idx[k - 1]];
      const auto& b = rows[idx[k]];
      d += a.features != b.features || a.target != b.target;
    }
    return d;
  }

  void fit_leaf(Node& node, std::span<const std::size_t> idx) const {
    const std::size_t distinct = distinct_rows(idx);
    std::vector<std::size_t> varying;
    for (std::size_t j = 0; j < width; ++j) {
      const double first = rows[idx[0]].features[j];
      if (std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return rows[i].features[j] != first; }))
        varying.push_back(j);
    }
    if (varying.empty() || distinct <= varying.size()) return;  // mean leaf

    const auto n = static_cast<Eigen::Index>(idx.size());
    const auto p = static_cast<Eigen::Index>(varying.size());
    Eigen::MatrixXd design(n, p + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = rows[idx[static_cast<std::size_t>(r)]];
      design(r, 0) = 1.0;
      for (Eigen::Index c = 0; c < p; ++c) design(r, c + 1) = row.features[varying[static_cast<std::size_t>(c)]];
      y(r) = row.target;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p + 1) return;
    const Eigen::VectorXd beta = qr.solve(y);
    if (!beta.allFinite()) return;

    // Keep the regression only if its training error, inflated by
    // (n + v) / (n - v) for v fitted parameters, beats the mean's. n counts
    // distinct rows so that repeating the data changes nothing.
    const double nd = static_cast<double>(distinct), v = static_cast<double>(p + 1);
    if (nd <= v) return;
    const Eigen::VectorXd fitted = design * beta;
    double err_linear = 0.0, err_mean = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      err_linear += std::abs(y(r) - fitted(r));
      err_mean += std::abs(y(r) - node.mean);
    }
    if (err_linear * (nd + v) / (nd - v) >= err_mean * (nd + 1.0) / (nd - 1.0)) return;
    node.coef.assign(width + 1, 0.0);
    node.coef[0] = beta(0);
    for (Eigen::Index c = 0; c < p; ++c) node.coef[varying[static_cast<std::size_t>(c)] + 1] = beta(c + 1);
  }

  int build(std::vector<std::size_t> idx) {
    const int self = static_cast<int>(nodes.size());
    nodes.emplace_back();
    double mean = 0.0;
    const double parent_sse = sse(rows, idx, mean);
    nodes[static_cast<std::size_t>(self)].count = idx.size();
    nodes[static_cast<std::size_t>(self)].mean = mean;

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    if (idx.size() >= 2 * min_leaf && parent_sse > 0.0) {
      std::vector<std::size_t> order;
      double total = 0.0, total_sq = 0.0;
      for (auto i : idx) {
        total += rows[i].target;
        total_sq += rows[i].target * rows[i].target;
      }
      for (std::size_t f = 0; f < width; ++f) {
        // idx is ascending, so stable_sort keeps canonical order within equal values
        order = idx;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rows[a].features[f] < rows[b].features[f]; });
        double left = 0.0, left_sq = 0.0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
          const double t = rows[order[k]].target;
          left += t;
          left_sq += t * t;
          const std::size_t nl = k + 1, nr = order.size() - nl;
          const double a = rows[order[k]].features[f], b = rows[order[k + 1]].features[f];
          if (a == b || nl < min_leaf || nr < min_leaf) continue;
          const double right = total - left, right_sq = total_sq - left_sq;
          const double child_sse = (left_sq - left * left / static_cast<double>(nl)) +
                                   (right_sq - right * right / static_cast<double>(nr));
          const double gain = parent_sse - child_sse;
          // gains equal up to rounding keep the earlier candidate
          if (gain > best_gain + 1e-9 * parent_sse) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = a + (b - a) / 2.0;
          }
        }
      }
    }

    if (best_feature < 0 || best_gain <= 1e-12 * parent_sse) {
      fit_leaf(nodes[static_cast<std::size_t>(self)], idx);
      return self;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (auto i : idx)
      (rows[i].features[static_cast<std::size_t>(best_feature)] <= best_threshold ? left_idx : right_idx).push_back(i);
    const int l = build(std::move(left_idx));
    const int r = build(std::move(right_idx));
    Node& node = nodes[static_cast<std::size_t>(self)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return self;
  }
};

inline RegressionTree RegressionTree::fit(std::span<const EncodedInstance> train, std::size_t min_instances) {
  if (train.empty()) throw Error("regression tree: empty training set");
  if (min_instances < 1) throw Error("regression tree: minimum instances per leaf must be >= 1");
  RegressionTree tree;
  tree.width_ = train.front().features.size();
  tree.min_instances_ = min_instances;
  for (const auto& r : train)
    if (r.features.size() != tree.width_) throw Error("regression tree: inconsistent feature widths");

  // Canonical row order makes the fitted tree independent of input order.
  std::vector<EncodedInstance> rows(train.begin(), train.end());
  std::sort(rows.begin(), rows.end(), [](const EncodedInstance& a, const EncodedInstance& b) {
    if (a.features != b.features) return a.features < b.features;
    if (a.target != b.target) return a.target < b.target;
    return a.source_id < b.source_id;
  });

  Builder builder{std::move(rows), tree.width_, min_instances, tree.nodes_};
  std::vector<std::size_t> all(builder.rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  builder.build(std::move(all));
  return tree;
}

inline RegressionTree train_tree(std::span<const EncodedInstance> train, std::size_t min_instances) {
  return RegressionTree::fit(train, min_instances);
}

} // namespace perfml
