#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "perfml/error.hpp"
#include "perfml/parallel.hpp"
#include "perfml/random.hpp"

namespace perfml {

using Point = std::vector<double>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
  return d;
}

inline std::size_t count_distinct(const std::vector<Point>& points) {
  std::vector<Point> sorted = points;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

struct KMeansOptions {
  std::size_t max_iter = 100;
  std::size_t restarts = 10;
  std::uint64_t seed = 1;
};

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<Point> centroids;
  double inertia = 0.0;
  /// Inertia after each assignment step of the returned run.
  std::vector<double> history;
  /// Final inertia of every restart, in restart order.
  std::vector<double> restart_inertia;

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (auto a : assignment) ++sizes[a];
    return sizes;
  }
};

namespace detail {

inline std::vector<Point> kmeanspp_seed(const std::vector<Point>& points, std::size_t k, Rng& rng) {
  std::vector<Point> centers;
  centers.push_back(points[static_cast<std::size_t>(rng.index(points.size()))]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (d2[i] <= 0.0) continue;
        if (u < d2[i]) {
          pick = i;
          break;
        }
        u -= d2[i];
      }
      while (d2[pick] <= 0.0) --pick;  // rounding fell past the last candidate
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
  }
  return centers;
}

inline double assign(const std::vector<Point>& points, const std::vector<Point>& centroids,
                     std::vector<std::size_t>& assignment) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    assignment[i] = arg;
    inertia += best;
  }
  return inertia;
}

inline KMeansResult lloyd(const std::vector<Point>& points, std::size_t k, std::size_t max_iter, Rng& rng) {
  const std::size_t dim = points.front().size();
  KMeansResult run;
  run.centroids = kmeanspp_seed(points, k, rng);
  run.assignment.assign(points.size(), 0);
  std::vector<std::size_t> next(points.size(), 0);
  bool converged = false;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double inertia = assign(points, run.centroids, next);
    run.history.push_back(inertia);
    if (it > 0 && next == run.assignment) {
      converged = true;
      break;
    }
    run.assignment.swap(next);

    std::vector<Point> sums(k, Point(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[run.assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[run.assignment[i]][j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c])
        for (std::size_t j = 0; j < dim; ++j) run.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);

    // An emptied cluster restarts at the point farthest from its centroid.
    std::vector<double> far(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      far[i] = squared_distance(points[i], run.centroids[run.assignment[i]]);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c]) continue;
      const auto pick = static_cast<std::size_t>(std::max_element(far.begin(), far.end()) - far.begin());
      run.centroids[c] = points[pick];
      far[pick] = -1.0;
    }
  }
  if (!converged) {
    // assignment and inertia for the final centroids
    run.history.push_back(assign(points, run.centroids, run.assignment));
  }
  run.inertia = run.history.back();
  return run;
}

} // namespace detail

/// Lloyd's k-means with k-means++ seeding; the best of `restarts` runs by
/// inertia (sum of squared distances to the assigned centroid) is returned.
inline KMeansResult kmeans(const std::vector<Point>& points, std::size_t k, const KMeansOptions& options = {}) {
  if (k < 1) throw Error("kmeans: k must be >= 1");
  if (points.empty()) throw Error("kmeans: no points");
  const std::size_t distinct = count_distinct(points);
  if (k > distinct)
    throw Error("kmeans: k=" + std::to_string(k) + " exceeds the " + std::to_string(distinct) + " distinct points");
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  const std::size_t max_iter = std::max<std::size_t>(1, options.max_iter);

  auto runs = parallel_map(restarts, [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, r));
    return detail::lloyd(points, k, max_iter, rng);
  });
  std::size_t best = 0;
  std::vector<double> inertias;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    inertias.push_back(runs[r].inertia);
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  KMeansResult out = std::move(runs[best]);
  out.restart_inertia = std::move(inertias);
  return out;
}

/// Replaces each centroid, in order, with the closest point (ties: lowest
/// id) whose feature vector has not already been taken by an earlier
/// centroid. Returns point indices; a note is added whenever a centroid had
/// to fall back past its nearest point.
inline std::vector<std::size_t> snap_centroids(const std::vector<Point>& centroids, const std::vector<Point>& points,
                                               std::span<const std::int64_t> ids,
                                               std::vector<std::string>* notes = nullptr) {
  if (points.empty()) throw Error("snap_centroids: no points");
  if (ids.size() != points.size()) throw Error("snap_centroids: ids and points differ in length");
  std::vector<std::size_t> out;
  std::vector<Point> taken;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> d(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d[i] = squared_distance(points[i], centroids[c]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (d[a] != d[b]) return d[a] < d[b];
      return ids[a] < ids[b];
    });
    bool placed = false;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const auto i = order[rank];
      if (std::find(taken.begin(), taken.end(), points[i]) != taken.end()) continue;
      if (rank > 0 && notes)
        notes->push_back("centroid " + std::to_string(c) + " duplicated an earlier recommendation; snapped to id " +
                         std::to_string(ids[i]) + " instead of id " + std::to_string(ids[order[0]]));
      out.push_back(i);
      taken.push_back(points[i]);
      placed = true;
      break;
    }
    if (!placed) throw Error("snap_centroids: more centroids than distinct points");
  }
  return out;
}

} // namespace perfml
