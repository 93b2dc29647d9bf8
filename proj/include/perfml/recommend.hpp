#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <sstream>
#include <string>
#include <vector>

#include "perfml/dataset.hpp"
#include "perfml/encoder.hpp"
#include "perfml/error.hpp"
#include "perfml/kmeans.hpp"
#include "perfml/modeling.hpp"
#include "perfml/parallel.hpp"
#include "perfml/random.hpp"
#include "perfml/text.hpp"

namespace perfml {

struct RecommendParams {
  std::vector<std::size_t> k_values{10, 20, 30, 40, 50, 60};
  std::size_t kmeans_max_iter = 100;
  std::size_t kmeans_restarts = 10;
  std::uint64_t seed = 1;
  double cost_rate = 6.85;  // currency per hour of execution
  double reference_fraction = 0.25;
  /// Selections at least this large choose hyperparameters on an internal
  /// split; smaller ones use the published best settings.
  std::size_t min_search_size = 10;

  void validate() const {
    if (k_values.empty()) throw UsageError("k_values is empty");
    for (std::size_t i = 0; i < k_values.size(); ++i) {
      if (k_values[i] < 1) throw UsageError("k values must be positive");
      if (i && k_values[i] <= k_values[i - 1]) throw UsageError("k values must be strictly increasing");
    }
    if (!(cost_rate >= 0.0)) throw UsageError("cost rate must be non-negative");
    if (!(reference_fraction > 0.0 && reference_fraction < 1.0))
      throw UsageError("reference fraction must lie in (0,1)");
  }
};

/// Executions recommended for one k, densest cluster first.
struct KRecommendation {
  std::size_t k = 0;
  std::vector<std::int64_t> ids;
  std::vector<std::size_t> cluster_sizes;
  double rae = 0.0;
  double mae = 0.0;
  HyperParams params;
  double estimated_seconds = 0.0;
  double estimated_hours = 0.0;
  double estimated_cost = 0.0;
};

struct RecommendationPlan {
  LearnerKind learner = LearnerKind::tree;
  std::vector<KRecommendation> groups;
  /// Recommendations of every k in ascending order with repeated
  /// configurations removed.
  std::vector<std::int64_t> cumulative;
  std::vector<std::int64_t> reference_ids;
  std::vector<std::string> notes;
};

/// Pool of candidate executions plus the held-out reference used to score
/// every model built from a selection of the pool.
struct Holdout {
  Dataset pool;
  Dataset reference;
};

inline Holdout holdout(const Dataset& data, double reference_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_ref = static_cast<std::size_t>(std::floor(reference_fraction * static_cast<double>(data.size()) + 1e-9));
  if (n_ref < 2 || n_ref >= data.size()) throw Error("dataset too small for a held-out reference split");
  std::vector<std::size_t> ref(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_ref));
  std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(n_ref), order.end());
  std::sort(ref.begin(), ref.end());
  std::sort(pool.begin(), pool.end());
  return {subset(data, pool), subset(data, ref)};
}

/// Total estimated cost of running `records` at `rate` per hour.
inline double estimated_cost(const Dataset& records, double rate) {
  double seconds = 0.0;
  for (const auto& r : records.records) seconds += r.exe_time;
  return seconds * rate / 3600.0;
}

/// Builds a model from a selected set of executions. Selections of at least
/// `min_search_size` records choose their hyperparameters on an internal
/// split holding out 15% for validation and are then refitted on the whole selection; smaller ones (or
/// ones where no candidate trains) use the published best settings.
/// Independent of the order of `selected`.
inline TrainedModel fit_on_selection(Dataset selected, const SearchGrid& grid, std::uint64_t seed,
                                     std::size_t min_search_size = 10) {
  if (selected.empty()) throw Error("no executions selected");
  std::sort(selected.records.begin(), selected.records.end(),
            [](const ExecutionRecord& a, const ExecutionRecord& b) { return a.id < b.id; });
  if (selected.size() >= std::max<std::size_t>(min_search_size, 3)) {
    try {
      const auto idx = split_indices(selected.size(), {0.7, 0.15, 0.15, seed});
      std::vector<std::size_t> fit_rows = idx.train;
      fit_rows.insert(fit_rows.end(), idx.test.begin(), idx.test.end());
      const auto chosen = search(grid, subset(selected, fit_rows), subset(selected, idx.validation));
      return train_model(grid.kind, chosen.model.params(), selected);
    } catch (const Error&) {
      // fall through to the published settings
    }
  }
  HyperParams p = grid.candidates.empty() ? HyperParams{} : grid.candidates.front();
  const HyperParams winners;
  p.tree_min_instances = winners.tree_min_instances;
  p.knn_k = std::min(winners.knn_k, selected.size());
  p.nn_hidden = winners.nn_hidden;
  p.nn_max_iter = winners.nn_max_iter;
  p.nn_decay = winners.nn_decay;
  p.poly_degree = winners.poly_degree;
  return train_model(grid.kind, p, selected);
}

namespace detail {

inline std::vector<Point> feature_points(const Encoder& encoder, const Dataset& data) {
  std::vector<Point> pts;
  pts.reserve(data.size());
  for (const auto& r : data.records) pts.push_back(encoder.encode(r).features);
  return pts;
}

struct Clustering {
  std::vector<std::size_t> rows;  // snapped pool rows, densest cluster first
  std::vector<std::size_t> sizes;
};

inline Clustering recommend_rows(const std::vector<Point>& points, const std::vector<std::int64_t>& ids,
                                 std::size_t k, const RecommendParams& params, std::vector<std::string>& notes) {
  const auto km = kmeans(points, k, {params.kmeans_max_iter, params.kmeans_restarts, derive_seed(params.seed, k)});
  const auto sizes = km.cluster_sizes();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
  std::vector<Point> centroids;
  Clustering out;
  for (auto c : order) {
    centroids.push_back(km.centroids[c]);
    out.sizes.push_back(sizes[c]);
  }
  std::vector<std::string> snap_notes;
  out.rows = snap_centroids(centroids, points, ids, &snap_notes);
  for (auto& n : snap_notes) notes.push_back("k=" + std::to_string(k) + ": " + n);
  return out;
}

} // namespace detail

/// For each k: cluster the pool's configurations (target excluded), snap the
/// centroids to real executions, model from those executions alone and score
/// the model on the held-out reference.
inline RecommendationPlan plan(const Dataset& data, const SearchGrid& grid, const RecommendParams& params) {
  params.validate();
  grid.validate();
  const auto parts = holdout(data, params.reference_fraction, params.seed);
  const Encoder encoder = Encoder::fit(parts.pool);
  const auto points = detail::feature_points(encoder, parts.pool);
  const auto ids = parts.pool.ids();
  const std::size_t distinct = count_distinct(points);

  RecommendationPlan out;
  out.learner = grid.kind;
  out.reference_ids = parts.reference.ids();
  std::vector<Point> seen;
  for (auto k : params.k_values) {
    if (k > distinct) {
      out.notes.push_back("k=" + std::to_string(k) + " skipped: pool has only " + std::to_string(distinct) +
                          " distinct configurations");
      continue;
    }
    const auto clustering = detail::recommend_rows(points, ids, k, params, out.notes);
    KRecommendation group;
    group.k = k;
    group.cluster_sizes = clustering.sizes;
    const Dataset selected = subset(parts.pool, clustering.rows);
    for (auto row : clustering.rows) {
      group.ids.push_back(ids[row]);
      group.estimated_seconds += parts.pool.records[row].exe_time;
      if (std::find(seen.begin(), seen.end(), points[row]) == seen.end()) {
        seen.push_back(points[row]);
        out.cumulative.push_back(ids[row]);
      }
    }
    group.estimated_hours = group.estimated_seconds / 3600.0;
    group.estimated_cost = group.estimated_hours * params.cost_rate;
    const auto model = fit_on_selection(selected, grid, params.seed, params.min_search_size);
    const auto report = evaluate(model, parts.reference);
    group.rae = report.rae;
    group.mae = report.mae;
    group.params = model.params();
    out.groups.push_back(std::move(group));
  }
  return out;
}

struct CurvePoint {
  std::size_t budget = 0;
  double rae_recommended = 0.0;
  double rae_random_mean = 0.0;
  double rae_random_stddev = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  /// Pool ids in recommendation order: the plan's cumulative list, then the
  /// rest of the pool in seeded random order.
  std::vector<std::int64_t> recommended_order;
  std::vector<std::int64_t> reference_ids;
  std::vector<std::string> notes;
};

/// Model accuracy on the held-out reference as executions are added in
/// recommendation order versus uniformly random order. Each budget m trains
/// on the first m executions of an order; the random side reports the mean
/// and standard deviation over `random_orders` seeded shuffles of the pool.
inline LearningCurve learning_curve(const Dataset& data, const SearchGrid& grid, const RecommendParams& params,
                                    const std::vector<std::size_t>& budgets, std::size_t random_orders = 10) {
  if (random_orders < 1) throw UsageError("learning curve needs at least one random order");
  const auto recs = plan(data, grid, params);
  const auto parts = holdout(data, params.reference_fraction, params.seed);

  LearningCurve curve;
  curve.notes = recs.notes;
  curve.reference_ids = recs.reference_ids;
  std::unordered_map<std::int64_t, std::size_t> row_of;
  for (std::size_t i = 0; i < parts.pool.size(); ++i) row_of[parts.pool.records[i].id] = i;
  std::vector<std::size_t> rec_rows;
  std::vector<bool> used(parts.pool.size(), false);
  for (auto id : recs.cumulative) {
    rec_rows.push_back(row_of.at(id));
    used[row_of.at(id)] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < parts.pool.size(); ++i)
    if (!used[i]) rest.push_back(i);
  Rng rest_rng(derive_seed(params.seed, 7777));
  rest_rng.shuffle(std::span<std::size_t>(rest));
  rec_rows.insert(rec_rows.end(), rest.begin(), rest.end());
  for (auto r : rec_rows) curve.recommended_order.push_back(parts.pool.records[r].id);

  std::vector<std::vector<std::size_t>> random_rows(random_orders);
  for (std::size_t s = 0; s < random_orders; ++s) {
    random_rows[s].resize(parts.pool.size());
    std::iota(random_rows[s].begin(), random_rows[s].end(), std::size_t{0});
    Rng rng(derive_seed(params.seed, 10000 + s));
    rng.shuffle(std::span<std::size_t>(random_rows[s]));
  }
  const auto score = [&](const std::vector<std::size_t>& order, std::size_t m) {
    const std::vector<std::size_t> rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    const auto model = fit_on_selection(subset(parts.pool, rows), grid, params.seed, params.min_search_size);
    return evaluate(model, parts.reference).rae;
  };

  for (auto m : budgets) {
    if (m < 1 || m > parts.pool.size()) {
      curve.notes.push_back("budget " + std::to_string(m) + " skipped: pool holds " +
                            std::to_string(parts.pool.size()) + " executions");
      continue;
    }
    CurvePoint p;
    p.budget = m;
    const auto raes = parallel_map(random_orders + 1, [&](std::size_t i) {
      return i == 0 ? score(rec_rows, m) : score(random_rows[i - 1], m);
    });
    p.rae_recommended = raes[0];
    double mean = 0.0;
    for (std::size_t i = 1; i < raes.size(); ++i) mean += raes[i];
    mean /= static_cast<double>(random_orders);
    double var = 0.0;
    for (std::size_t i = 1; i < raes.size(); ++i) var += (raes[i] - mean) * (raes[i] - mean);
    p.rae_random_mean = mean;
    p.rae_random_stddev = std::sqrt(var / static_cast<double>(random_orders));
    curve.points.push_back(p);
  }
  return curve;
}

inline std::string plan_csv(const RecommendationPlan& plan) {
  std::ostringstream out;
  out << "k,recommendation_ids,rae,estimated_hours,estimated_cost\n";
  for (const auto& g : plan.groups) {
    out << g.k << ',';
    for (std::size_t i = 0; i < g.ids.size(); ++i) out << (i ? " " : "") << g.ids[i];
    out << ',' << text::fixed(g.rae, 5) << ',' << text::fixed(g.estimated_hours, 4) << ','
        << text::fixed(g.estimated_cost, 4) << '\n';
  }
  return out.str();
}

inline std::string curve_csv(const LearningCurve& curve) {
  std::ostringstream out;
  out << "budget,rae_recommended,rae_random_mean,rae_random_stddev\n";
  for (const auto& p : curve.points)
    out << p.budget << ',' << text::fixed(p.rae_recommended, 5) << ',' << text::fixed(p.rae_random_mean, 5) << ','
        << text::fixed(p.rae_random_stddev, 5) << '\n';
  return out.str();
}

} // namespace perfml
