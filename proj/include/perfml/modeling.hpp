#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "perfml/dataset.hpp"
#include "perfml/error.hpp"
#include "perfml/metrics.hpp"
#include "perfml/model.hpp"
#include "perfml/parallel.hpp"
#include "perfml/random.hpp"
#include "perfml/text.hpp"

namespace perfml {

/// Error summary of one model (or baseline) over one split.
struct EvaluationReport {
  std::string method;                  // learner name or baseline name
  std::optional<LearnerKind> learner;  // empty for baselines
  HyperParams params;
  double mae = 0.0;
  double rae = 0.0;
  std::size_t n = 0;
  std::string split;
  std::vector<std::int64_t> ids;

  std::string describe_params() const { return learner ? params.describe(*learner) : std::string("-"); }
};

inline EvaluationReport make_report(const TrainedModel& model, const Dataset& data, std::string split) {
  if (data.empty()) throw Error("cannot evaluate on an empty " + split + " split");
  const auto preds = model.predict_all(data);
  const auto actuals = data.targets();
  return {std::string(to_string(model.kind())), model.kind(), model.params(), mae(preds, actuals),
          rae(preds, actuals), data.size(), std::move(split), data.ids()};
}

/// Candidate hyperparameter settings for one learner.
struct SearchGrid {
  LearnerKind kind = LearnerKind::tree;
  std::vector<HyperParams> candidates;

  void validate() const {
    if (candidates.empty()) throw UsageError("search grid for " + std::string(to_string(kind)) + " is empty");
    for (const auto& c : candidates) c.validate(kind);
  }

  /// Grids bracketing the published best settings.
  static SearchGrid defaults(LearnerKind kind, std::uint64_t seed = 1) {
    SearchGrid g{kind, {}};
    HyperParams base;
    base.seed = seed;
    switch (kind) {
      case LearnerKind::tree:
        for (std::size_t m : {1, 2, 5, 10, 25, 50}) {
          auto p = base;
          p.tree_min_instances = m;
          g.candidates.push_back(p);
        }
        break;
      case LearnerKind::knn:
        for (std::size_t k : {1, 3, 5, 7, 9}) {
          auto p = base;
          p.knn_k = k;
          g.candidates.push_back(p);
        }
        break;
      case LearnerKind::nn:
        for (std::size_t h : {3, 5, 8})
          for (double d : {0.0, 5e-4, 1e-2}) {
            auto p = base;
            p.nn_hidden = h;
            p.nn_decay = d;
            p.nn_max_iter = 1000;
            g.candidates.push_back(p);
          }
        break;
      case LearnerKind::poly:
        for (int d : {1, 2, 3}) {
          auto p = base;
          p.poly_degree = d;
          g.candidates.push_back(p);
        }
        break;
    }
    return g;
  }

  /// A single-candidate grid holding the published best setting.
  static SearchGrid winner(LearnerKind kind, std::uint64_t seed = 1) {
    HyperParams p;
    p.seed = seed;
    return {kind, {p}};
  }
};

/// Complexity key used to break validation-RAE ties: simpler settings first.
inline std::size_t complexity(LearnerKind kind, const HyperParams& p) {
  switch (kind) {
    case LearnerKind::tree: return p.tree_min_instances;
    case LearnerKind::knn: return p.knn_k;
    case LearnerKind::nn: return p.nn_hidden;
    case LearnerKind::poly: return static_cast<std::size_t>(p.poly_degree);
  }
  return 0;
}

struct CandidateResult {
  HyperParams params;
  bool trained = false;
  double validation_mae = 0.0;
  double validation_rae = 0.0;
  std::string error;
};

struct SearchResult {
  TrainedModel model;
  EvaluationReport validation;
  std::vector<CandidateResult> candidates;
  std::vector<std::string> notes;  // skipped candidates
};

/// Trains every candidate on `train` and keeps the one with the lowest
/// validation RAE. Candidates that fail to train are skipped and noted.
inline SearchResult search(const SearchGrid& grid, const Dataset& train, const Dataset& validation) {
  grid.validate();
  if (train.empty() || validation.empty()) throw Error("search needs non-empty train and validation splits");

  struct Outcome {
    std::optional<TrainedModel> model;
    CandidateResult result;
  };
  auto outcomes = parallel_map(grid.candidates.size(), [&](std::size_t i) {
    Outcome o;
    o.result.params = grid.candidates[i];
    try {
      o.model = train_model(grid.kind, grid.candidates[i], train);
      const auto report = make_report(*o.model, validation, "validation");
      o.result.validation_mae = report.mae;
      o.result.validation_rae = report.rae;
      o.result.trained = std::isfinite(report.rae);
      if (!o.result.trained) o.result.error = "non-finite validation error";
    } catch (const std::exception& e) {
      o.result.error = e.what();
    }
    return o;
  });

  std::vector<std::string> notes;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& r = outcomes[i].result;
    if (!r.trained) {
      notes.push_back(std::string(to_string(grid.kind)) + " candidate " + r.params.describe(grid.kind) +
                      " skipped: " + r.error);
      continue;
    }
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = outcomes[*best].result;
    const auto key = [&](const CandidateResult& c, std::size_t idx) {
      return std::make_tuple(c.validation_rae, complexity(grid.kind, c.params), idx);
    };
    if (key(r, i) < key(b, *best)) best = i;
  }
  if (!best) {
    std::string why;
    for (const auto& n : notes) why += "\n  " + n;
    throw Error("every " + std::string(to_string(grid.kind)) + " candidate failed to train:" + why);
  }

  std::vector<CandidateResult> candidates;
  for (const auto& o : outcomes) candidates.push_back(o.result);
  TrainedModel model = std::move(*outcomes[*best].model);
  EvaluationReport validation_report = make_report(model, validation, "validation");
  return {std::move(model), std::move(validation_report), std::move(candidates), std::move(notes)};
}

enum class Leakage { refuse, allow };

/// Scores `model` on `test`. By default refuses a test set that shares any id
/// with the model's training set; Leakage::allow permits resubstitution.
inline EvaluationReport evaluate(const TrainedModel& model, const Dataset& test, Leakage leakage = Leakage::refuse,
                                 std::string split_name = "test") {
  if (test.empty()) throw Error("cannot evaluate on an empty test split");
  if (leakage == Leakage::refuse) {
    const std::unordered_set<std::int64_t> train_ids(model.info().train_ids.begin(), model.info().train_ids.end());
    for (const auto& r : test.records)
      if (train_ids.count(r.id))
        throw Error("test record " + std::to_string(r.id) + " was used to train the model");
  }
  return make_report(model, test, std::move(split_name));
}

/// Search on train/validation, then score the selected model on test.
struct PipelineResult {
  SearchResult selection;
  EvaluationReport test;
};

inline PipelineResult run_pipeline(const DataSplit& parts, const SearchGrid& grid) {
  auto selection = search(grid, parts.train, parts.validation);
  auto test = evaluate(selection.model, parts.test);
  return {std::move(selection), std::move(test)};
}

inline PipelineResult run_pipeline(const Dataset& data, const SearchGrid& grid, const SplitSpec& spec) {
  return run_pipeline(split(data, spec), grid);
}

// ---------------------------------------------------------------------------
// General vs benchmark-specific models

/// Splits every group of records sharing `group_attribute` with the same
/// proportions, so each group is represented in every partition. Groups
/// smaller than 3 records go entirely to train.
inline SplitIndices stratified_split(const Dataset& data, const SplitSpec& spec, std::size_t group_attribute) {
  spec.validate();
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) groups[data.records[i].text[group_attribute]].push_back(i);
  SplitIndices out;
  std::uint64_t stream = 0;
  for (const auto& [name, rows] : groups) {
    if (rows.size() < 3) {
      out.train.insert(out.train.end(), rows.begin(), rows.end());
      continue;
    }
    SplitSpec local = spec;
    local.seed = derive_seed(spec.seed, stream++);
    const auto part = split_indices(rows.size(), local);
    for (auto i : part.train) out.train.push_back(rows[i]);
    for (auto i : part.validation) out.validation.push_back(rows[i]);
    for (auto i : part.test) out.test.push_back(rows[i]);
  }
  return out;
}

struct BenchmarkComparison {
  std::string benchmark;
  std::size_t records = 0;
  std::size_t test_records = 0;
  double general_rae = 0.0;
  double specific_rae = 0.0;
  HyperParams specific_params;
};

struct SpecificModel {
  std::string benchmark;
  SearchResult selection;
  EvaluationReport test;
};

struct PerBenchmarkResult {
  LearnerKind learner = LearnerKind::tree;
  PipelineResult general;
  std::vector<SpecificModel> specific;
  std::vector<BenchmarkComparison> rows;
  std::vector<std::string> notes;
};

/// Trains one model per benchmark on that benchmark's records plus one general
/// model on all records, and compares them on each benchmark's test split.
/// All models see the same stratified partition.
inline PerBenchmarkResult train_per_benchmark(const Dataset& data, const SearchGrid& grid, const SplitSpec& spec,
                                              std::string_view group_attribute = "benchmark",
                                              std::size_t min_group = 10) {
  const auto attr = data.schema.index_of(group_attribute);
  if (!attr) throw SchemaError("no attribute named '" + std::string(group_attribute) + "'");
  const auto idx = stratified_split(data, spec, *attr);
  const DataSplit parts{subset(data, idx.train), subset(data, idx.validation), subset(data, idx.test)};

  PerBenchmarkResult result{grid.kind, run_pipeline(parts, grid), {}, {}, {}};
  for (const auto& n : result.general.selection.notes) result.notes.push_back("general: " + n);

  std::map<std::string, std::size_t> sizes;
  for (const auto& r : data.records) ++sizes[r.text[*attr]];

  for (const auto& [name, count] : sizes) {
    if (count < min_group) {
      result.notes.push_back("benchmark " + name + " skipped: " + std::to_string(count) + " records (< " +
                             std::to_string(min_group) + ")");
      continue;
    }
    const auto in_group = [&, name = name](const ExecutionRecord& r) { return r.text[*attr] == name; };
    const DataSplit local{filter(parts.train, in_group), filter(parts.validation, in_group),
                          filter(parts.test, in_group)};
    try {
      auto pipeline = run_pipeline(local, grid);
      BenchmarkComparison row;
      row.benchmark = name;
      row.records = count;
      row.test_records = local.test.size();
      row.general_rae = evaluate(result.general.selection.model, local.test).rae;
      row.specific_rae = pipeline.test.rae;
      row.specific_params = pipeline.selection.model.params();
      result.rows.push_back(row);
      result.specific.push_back({name, std::move(pipeline.selection), std::move(pipeline.test)});
    } catch (const Error& e) {
      result.notes.push_back("benchmark " + name + " skipped: " + e.what());
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineKind { least_squares_per_attribute, linear_regression };

inline std::string_view to_string(BaselineKind kind) {
  return kind == BaselineKind::linear_regression ? "linear_regression" : "least_squares_per_attribute";
}

/// Rule-of-thumb predictors. The per-attribute baseline fits one univariate
/// least-squares line per encoded feature and averages their test errors;
/// constant columns are skipped.
inline EvaluationReport baseline(const Dataset& train, const Dataset& test, BaselineKind kind) {
  if (train.empty() || test.empty()) throw Error("baseline needs non-empty train and test splits");
  if (kind == BaselineKind::linear_regression) {
    HyperParams p;
    p.poly_degree = 1;
    auto model = train_model(LearnerKind::poly, p, train);
    auto report = evaluate(model, test);
    report.method = std::string(to_string(kind));
    report.learner.reset();
    return report;
  }

  const Encoder encoder = Encoder::fit(train);
  const auto tr = encoder.encode_all(train);
  const auto te = encoder.encode_all(test);
  const auto actuals = test.targets();
  double sum_mae = 0.0, sum_rae = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < encoder.width(); ++j) {
    double mx = 0.0, my = 0.0;
    for (const auto& r : tr) {
      mx += r.features[j];
      my += r.target;
    }
    mx /= static_cast<double>(tr.size());
    my /= static_cast<double>(tr.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& r : tr) {
      sxx += (r.features[j] - mx) * (r.features[j] - mx);
      sxy += (r.features[j] - mx) * (r.target - my);
    }
    if (sxx == 0.0) continue;
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    std::vector<double> preds;
    preds.reserve(te.size());
    for (const auto& r : te) preds.push_back(intercept + slope * r.features[j]);
    sum_mae += mae(preds, actuals);
    sum_rae += rae(preds, actuals);
    ++used;
  }
  if (used == 0) throw Error("per-attribute baseline: every feature column is constant");
  EvaluationReport report;
  report.method = std::string(to_string(kind));
  report.mae = sum_mae / static_cast<double>(used);
  report.rae = sum_rae / static_cast<double>(used);
  report.n = test.size();
  report.split = "test";
  report.ids = test.ids();
  return report;
}

// ---------------------------------------------------------------------------
// Split-ratio study

inline std::vector<SplitSpec> published_splits(std::uint64_t seed) {
  return {{0.5, 0.25, 0.25, seed}, {0.375, 0.375, 0.25, seed}, {0.2, 0.55, 0.25, seed}};
}

inline std::string split_label(const SplitSpec& s) {
  const auto pct = [](double f) {
    std::string v = text::format_double(std::round(f * 1000.0) / 10.0);
    return v;
  };
  return pct(s.train) + "/" + pct(s.validation) + "/" + pct(s.test);
}

struct SplitStudyRow {
  LearnerKind learner;
  std::vector<double> test_rae;  // one per split, same order as the splits
};

inline std::vector<SplitStudyRow> split_study(const Dataset& data, const std::vector<SearchGrid>& grids,
                                              const std::vector<SplitSpec>& splits) {
  std::vector<SplitStudyRow> rows;
  for (const auto& grid : grids) {
    SplitStudyRow row{grid.kind, {}};
    for (const auto& s : splits) row.test_rae.push_back(run_pipeline(data, grid, s).test.rae);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Table exports

struct EvaluationRow {
  EvaluationReport validation;
  EvaluationReport test;
};

inline std::string display_name(const std::string& method) {
  if (method == "tree") return "Regression Tree";
  if (method == "knn") return "Nearest Neighbors";
  if (method == "nn") return "FFA Neural Nets";
  if (method == "poly") return "Polynomial Regression";
  if (method == "linear_regression") return "Linear Regression";
  if (method == "least_squares_per_attribute") return "LSQ per attribute";
  return method;
}

/// Learner comparison in the column order
/// learner, MAE valid, RAE valid, MAE test, RAE test, best parameters.
inline std::string evaluation_table_csv(const std::vector<EvaluationRow>& rows) {
  std::ostringstream out;
  out << "learner,mae_valid,rae_valid,mae_test,rae_test,best_params\n";
  for (const auto& r : rows)
    out << r.test.method << ',' << text::fixed(r.validation.mae, 5) << ',' << text::fixed(r.validation.rae, 5) << ','
        << text::fixed(r.test.mae, 5) << ',' << text::fixed(r.test.rae, 5) << ",\"" << r.test.describe_params()
        << "\"\n";
  return out.str();
}

inline std::string evaluation_table_text(const std::vector<EvaluationRow>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s | %12s | %9s | %12s | %9s | %s\n", "Algorithm", "MAE Valid.", "RAE Valid.",
                "MAE Test", "RAE Test", "Best parameters");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-22s | %12.5f | %9.5f | %12.5f | %9.5f | %s\n",
                  display_name(r.test.method).c_str(), r.validation.mae, r.validation.rae, r.test.mae, r.test.rae,
                  r.test.describe_params().c_str());
    out << line;
  }
  return out.str();
}

inline std::string per_benchmark_csv(const PerBenchmarkResult& result) {
  std::ostringstream out;
  out << "learner,benchmark,records,test_records,rae_general,rae_specific,specific_params\n";
  for (const auto& r : result.rows)
    out << to_string(result.learner) << ',' << r.benchmark << ',' << r.records << ',' << r.test_records << ',' << text::fixed(r.general_rae, 5) << ','
        << text::fixed(r.specific_rae, 5) << ",\"" << r.specific_params.describe(result.learner) << "\"\n";
  return out.str();
}

inline std::string split_study_csv(const std::vector<SplitStudyRow>& rows, const std::vector<SplitSpec>& splits) {
  std::ostringstream out;
  out << "learner";
  for (const auto& s : splits) out << ",rae_" << split_label(s);
  out << '\n';
  for (const auto& r : rows) {
    out << to_string(r.learner);
    for (double v : r.test_rae) out << ',' << text::fixed(v, 5);
    out << '\n';
  }
  return out.str();
}

} // namespace perfml
