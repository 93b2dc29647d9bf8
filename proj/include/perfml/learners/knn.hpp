#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "perfml/encoder.hpp"
#include "perfml/error.hpp"

namespace perfml {

/// Lazy K-nearest-neighbours regressor: unweighted mean target of the K
/// closest training instances under Euclidean distance. Equal distances are
/// ordered by ascending source id.
class KnnRegressor {
public:
  KnnRegressor() = default;

  static KnnRegressor fit(std::span<const EncodedInstance> train, std::size_t k) {
    if (k < 1) throw Error("knn: K must be >= 1");
    if (train.empty()) throw Error("knn: empty training set");
    if (k > train.size())
      throw Error("knn: K=" + std::to_string(k) + " exceeds training size " + std::to_string(train.size()));
    KnnRegressor m;
    m.k_ = k;
    m.width_ = train.front().features.size();
    for (const auto& r : train) {
      if (r.features.size() != m.width_) throw Error("knn: inconsistent feature widths");
      m.features_.insert(m.features_.end(), r.features.begin(), r.features.end());
      m.targets_.push_back(r.target);
      m.ids_.push_back(r.source_id);
    }
    return m;
  }

  std::size_t k() const { return k_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return targets_.size(); }

  /// Indices of the K nearest stored instances, closest first.
  std::vector<std::size_t> neighbors(std::span<const double> x) const {
    std::vector<std::pair<double, std::size_t>> dist(size());
    for (std::size_t i = 0; i < size(); ++i) {
      const double* row = features_.data() + i * width_;
      double d = 0.0;
      for (std::size_t j = 0; j < width_; ++j) d += (row[j] - x[j]) * (row[j] - x[j]);
      dist[i] = {d, i};
    }
    const auto closer = [this](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return ids_[a.second] < ids_[b.second];
    };
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end(), closer);
    std::vector<std::size_t> out(k_);
    for (std::size_t i = 0; i < k_; ++i) out[i] = dist[i].second;
    return out;
  }

  double predict(std::span<const double> x) const {
    double sum = 0.0;
    for (auto i : neighbors(x)) sum += targets_[i];
    return sum / static_cast<double>(k_);
  }

  nlohmann::json to_json() const {
    return {{"k", k_}, {"width", width_}, {"features", features_}, {"targets", targets_}, {"ids", ids_}};
  }

  static KnnRegressor from_json(const nlohmann::json& j) {
    KnnRegressor m;
    m.k_ = j.at("k").get<std::size_t>();
    m.width_ = j.at("width").get<std::size_t>();
    m.features_ = j.at("features").get<std::vector<double>>();
    m.targets_ = j.at("targets").get<std::vector<double>>();
    m.ids_ = j.at("ids").get<std::vector<std::int64_t>>();
    if (m.features_.size() != m.width_ * m.targets_.size() || m.ids_.size() != m.targets_.size() ||
        m.k_ < 1 || m.k_ > m.targets_.size())
      throw Error("knn model: inconsistent stored training set");
    return m;
  }

private:
  std::size_t k_ = 1;
  std::size_t width_ = 0;
  std::vector<double> features_;  // row-major
  std::vector<double> targets_;
  std::vector<std::int64_t> ids_;
};

inline KnnRegressor train_knn(std::span<const EncodedInstance> train, std::size_t k) {
  return KnnRegressor::fit(train, k);
}

} // namespace perfml
