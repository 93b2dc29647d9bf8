#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "perfml/dataset.hpp"
#include "perfml/error.hpp"
#include "perfml/model.hpp"
#include "perfml/modeling.hpp"
#include "perfml/text.hpp"

namespace perfml {

enum class Flag { ok, warning, outlier };

inline std::string_view to_string(Flag f) {
  switch (f) {
    case Flag::ok: return "ok";
    case Flag::warning: return "warning";
    case Flag::outlier: return "outlier";
  }
  return "?";
}

struct AnomalyParams {
  double n = 3.0;                 // standard-deviation multiplier
  std::size_t h = 0;              // Hamming neighbourhood radius (inclusive)
  std::size_t min_neighbors = 2;
  /// Optional failed-run rule: executions shorter than this many seconds are
  /// marked outliers before any modelling. Off by default.
  std::optional<double> min_time;

  void validate() const {
    if (!(n > 0.0)) throw UsageError("anomaly n must be positive");
    if (min_neighbors < 1) throw UsageError("min_neighbors must be >= 1");
  }
};

struct Observation {
  std::int64_t id = 0;
  double actual = 0.0;
  double predicted = 0.0;
  double residual = 0.0;  // actual - predicted
  Flag flag = Flag::ok;
  std::size_t neighbors = 0;
  std::size_t ok_neighbors = 0;
  bool prefiltered = false;  // flagged by the min_time rule
};

struct AnomalyReport {
  std::vector<Observation> observations;  // ascending id
  double mu = 0.0;
  double sigma = 0.0;
  AnomalyParams params;
  std::uint64_t model_fingerprint = 0;

  std::size_t count(Flag f) const {
    return static_cast<std::size_t>(
        std::count_if(observations.begin(), observations.end(), [f](const Observation& o) { return o.flag == f; }));
  }

  std::vector<std::int64_t> ids_with(Flag f) const {
    std::vector<std::int64_t> out;
    for (const auto& o : observations)
      if (o.flag == f) out.push_back(o.id);
    return out;
  }

  /// Ids flagged as warning or outlier.
  std::vector<std::int64_t> flagged_ids() const {
    std::vector<std::int64_t> out;
    for (const auto& o : observations)
      if (o.flag != Flag::ok) out.push_back(o.id);
    return out;
  }
};

struct ResidualStats {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  std::vector<double> residuals;
};

inline ResidualStats residual_stats(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw Error("residual_stats: length mismatch");
  if (actual.empty()) throw Error("residual_stats: empty dataset");
  ResidualStats s;
  s.residuals.reserve(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) s.residuals.push_back(actual[i] - predicted[i]);
  for (double r : s.residuals) s.mu += r;
  s.mu /= static_cast<double>(s.residuals.size());
  double var = 0.0;
  for (double r : s.residuals) var += (r - s.mu) * (r - s.mu);
  s.sigma = std::sqrt(var / static_cast<double>(s.residuals.size()));
  return s;
}

inline ResidualStats residual_stats(const TrainedModel& model, const Dataset& data) {
  const auto actual = data.targets();
  return residual_stats(actual, model.predict_all(data));
}

/// Flags warnings from precomputed predictions: an observation is a warning
/// when |residual - mu| > n * sigma. With sigma = 0 everything is ok.
/// Observations are reported in ascending id order.
inline AnomalyReport flag_warnings(std::span<const std::int64_t> ids, std::span<const double> actual,
                                   std::span<const double> predicted, const AnomalyParams& params) {
  params.validate();
  if (ids.size() != actual.size() || ids.size() != predicted.size()) throw Error("flag_warnings: length mismatch");
  if (ids.empty()) throw Error("flag_warnings: empty dataset");

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });

  AnomalyReport report;
  report.params = params;
  std::vector<double> stat_actual, stat_pred;
  for (auto i : order) {
    Observation o;
    o.id = ids[i];
    o.actual = actual[i];
    o.predicted = predicted[i];
    o.residual = actual[i] - predicted[i];
    o.prefiltered = params.min_time && actual[i] < *params.min_time;
    if (o.prefiltered) {
      o.flag = Flag::outlier;
    } else {
      stat_actual.push_back(actual[i]);
      stat_pred.push_back(predicted[i]);
    }
    report.observations.push_back(o);
  }
  if (stat_actual.empty()) return report;
  const auto stats = residual_stats(stat_actual, stat_pred);
  report.mu = stats.mu;
  report.sigma = stats.sigma;
  for (auto& o : report.observations)
    if (!o.prefiltered && std::abs(o.residual - report.mu) > params.n * report.sigma) o.flag = Flag::warning;
  return report;
}

inline AnomalyReport flag_warnings(const TrainedModel& model, const Dataset& data, const AnomalyParams& params) {
  const auto ids = data.ids();
  const auto actual = data.targets();
  auto report = flag_warnings(ids, actual, model.predict_all(data), params);
  report.model_fingerprint = model.info().fingerprint;
  return report;
}

/// Promotes a warning to outlier when at least min_neighbors other
/// observations lie within Hamming distance h of it and strictly more than
/// half of those are ok in `warnings`.
inline AnomalyReport classify_outliers(const AnomalyReport& warnings, const Dataset& data,
                                       const AnomalyParams& params) {
  params.validate();
  std::unordered_map<std::int64_t, std::size_t> row_of;
  for (std::size_t i = 0; i < data.size(); ++i) row_of[data.records[i].id] = i;
  std::unordered_map<std::int64_t, Flag> before;
  for (const auto& o : warnings.observations) {
    if (!row_of.count(o.id)) throw Error("classify_outliers: id " + std::to_string(o.id) + " not in dataset");
    before[o.id] = o.flag;
  }

  AnomalyReport out = warnings;
  out.params = params;
  for (auto& o : out.observations) {
    if (o.flag != Flag::warning) continue;
    const auto& self = data.records[row_of[o.id]];
    std::size_t neighbors = 0, ok = 0;
    for (const auto& other : data.records) {
      if (other.id == o.id) continue;
      const auto it = before.find(other.id);
      if (it == before.end()) continue;
      if (hamming_distance(self, other, data.schema) > params.h) continue;
      ++neighbors;
      ok += it->second == Flag::ok;
    }
    o.neighbors = neighbors;
    o.ok_neighbors = ok;
    if (neighbors >= params.min_neighbors && 2 * ok > neighbors) o.flag = Flag::outlier;
  }
  return out;
}

/// flag_warnings followed by classify_outliers.
inline AnomalyReport detect(const TrainedModel& model, const Dataset& data, const AnomalyParams& params) {
  return classify_outliers(flag_warnings(model, data, params), data, params);
}

// ---------------------------------------------------------------------------
// Confusion against reference labels

enum class Label { anomaly, legitimate };
enum class FlagLevel { outlier_only, warning_or_outlier };

/// Rows: reference anomaly / legitimate. Columns: flagged / ok.
struct ConfusionMatrix {
  std::size_t anomaly_flagged = 0;
  std::size_t anomaly_ok = 0;
  std::size_t legitimate_flagged = 0;
  std::size_t legitimate_ok = 0;
  FlagLevel level = FlagLevel::outlier_only;

  std::size_t total() const { return anomaly_flagged + anomaly_ok + legitimate_flagged + legitimate_ok; }

  double recall() const {
    const auto pos = anomaly_flagged + anomaly_ok;
    return pos ? static_cast<double>(anomaly_flagged) / static_cast<double>(pos) : 1.0;
  }

  double false_positive_rate() const {
    const auto neg = legitimate_flagged + legitimate_ok;
    return neg ? static_cast<double>(legitimate_flagged) / static_cast<double>(neg) : 0.0;
  }

  /// 2x2 layout: automatic across, reference down.
  std::string to_text() const {
    const char* col = level == FlagLevel::outlier_only ? "Outlier" : "Flagged";
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%-12s | %8s | %8s |\n%-12s | %8s | %8s |\n%-12s | %8zu | %8zu |\n%-12s | %8zu | %8zu |\n",
                  "automatic ->", "", "", "reference v", col, "OK", "Anomaly", anomaly_flagged, anomaly_ok,
                  "Legitimate", legitimate_flagged, legitimate_ok);
    return buf;
  }
};

inline ConfusionMatrix confusion(const AnomalyReport& report, const std::map<std::int64_t, Label>& reference,
                                 FlagLevel level) {
  ConfusionMatrix m;
  m.level = level;
  for (const auto& o : report.observations) {
    const auto it = reference.find(o.id);
    if (it == reference.end()) throw Error("reference labels have no entry for id " + std::to_string(o.id));
    const bool flagged = level == FlagLevel::outlier_only ? o.flag == Flag::outlier : o.flag != Flag::ok;
    if (it->second == Label::anomaly)
      ++(flagged ? m.anomaly_flagged : m.anomaly_ok);
    else
      ++(flagged ? m.legitimate_flagged : m.legitimate_ok);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Retraining without outliers

struct RetrainResult {
  EvaluationReport before_validation, before_test;
  EvaluationReport after_validation, after_test;
  std::vector<std::int64_t> removed;
  AnomalyReport detection;
};

/// Selects a model on the full data, detects outliers over the whole dataset
/// with it, drops them from every split and repeats selection with the same
/// grid and partition.
inline RetrainResult retrain_without_outliers(const Dataset& data, const SearchGrid& grid, const AnomalyParams& params,
                                              const SplitSpec& spec) {
  const auto parts = split(data, spec);
  auto before = run_pipeline(parts, grid);
  auto detection = detect(before.selection.model, data, params);
  const auto removed = detection.ids_with(Flag::outlier);
  const std::unordered_set<std::int64_t> drop(removed.begin(), removed.end());
  const auto keep = [&](const ExecutionRecord& r) { return !drop.count(r.id); };
  const DataSplit cleaned{filter(parts.train, keep), filter(parts.validation, keep), filter(parts.test, keep)};
  if (cleaned.train.empty() || cleaned.validation.empty() || cleaned.test.empty())
    throw Error("removing outliers empties a split");
  auto after = run_pipeline(cleaned, grid);
  return {std::move(before.selection.validation), std::move(before.test), std::move(after.selection.validation),
          std::move(after.test), removed, std::move(detection)};
}

// ---------------------------------------------------------------------------
// Exports

inline std::string anomaly_report_csv(const AnomalyReport& report) {
  std::ostringstream out;
  out << "id,actual,predicted,residual,flag,neighbors,ok_neighbors\n";
  for (const auto& o : report.observations)
    out << o.id << ',' << text::fixed(o.actual, 3) << ',' << text::fixed(o.predicted, 3) << ','
        << text::fixed(o.residual, 3) << ',' << to_string(o.flag) << ',' << o.neighbors << ',' << o.ok_neighbors
        << '\n';
  return out.str();
}

/// actual vs predicted with the flag as plotting series.
inline std::string scatter_csv(const AnomalyReport& report) {
  std::ostringstream out;
  out << "actual,predicted,series\n";
  for (const auto& o : report.observations)
    out << text::fixed(o.actual, 3) << ',' << text::fixed(o.predicted, 3) << ',' << to_string(o.flag) << '\n';
  return out.str();
}

inline std::string anomaly_summary(const AnomalyReport& report) {
  std::ostringstream out;
  out << "observations: " << report.observations.size() << '\n'
      << "ok: " << report.count(Flag::ok) << '\n'
      << "warnings: " << report.count(Flag::warning) << '\n'
      << "outliers: " << report.count(Flag::outlier) << '\n'
      << "residual_mean: " << text::fixed(report.mu, 6) << '\n'
      << "residual_stddev: " << text::fixed(report.sigma, 6) << '\n'
      << "n: " << text::format_double(report.params.n) << '\n'
      << "h: " << report.params.h << '\n'
      << "min_neighbors: " << report.params.min_neighbors << '\n'
      << "model_fingerprint: " << report.model_fingerprint << '\n';
  if (report.params.min_time) out << "min_time: " << text::format_double(*report.params.min_time) << '\n';
  return out.str();
}

} // namespace perfml
