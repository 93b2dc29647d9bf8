#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perfml/perfml.hpp"

namespace perfml::cli {

namespace fs = std::filesystem;

struct Options {
  std::string input, schema_path, model_path, labels_path, out_dir;
  std::string learner = "tree";
  std::string split = "50/25/25";
  std::uint64_t seed = 1;
  // grid overrides
  std::vector<std::size_t> m_values, k_grid, hidden_values;
  std::vector<double> decay_values;
  std::vector<int> degree_values;
  std::optional<std::size_t> max_iter;
  bool per_benchmark = false, split_study = false, baselines = false;
  // detect
  double n = 3.0;
  std::size_t h = 0, min_neighbors = 2;
  std::optional<double> min_time;
  std::string flag_level = "outlier";
  // recommend
  std::vector<std::size_t> k_values{10, 20, 30, 40, 50, 60}, budgets;
  double cost_rate = 6.85;
  std::size_t random_orders = 10;
  // generate
  std::size_t n_records = 600, distinct_configs = 0;
  double noise = 30.0, anomaly_fraction = 0.0, multiplier = 5.0, low_time_fraction = 0.0;
};

inline std::string output_dir(const Options& o) {
  std::string dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("PERFML_OUT_DIR");
    dir = env && *env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

inline std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

inline Schema load_schema(const Options& o) { return o.schema_path.empty() ? Schema::hibench() : Schema::load(o.schema_path); }

inline Dataset load_dataset(const Options& o, std::ostream& err, ParseOptions popts = {}) {
  if (o.input.empty()) throw UsageError("--input is required");
  auto parsed = parse_log_file(o.input, load_schema(o), popts);
  if (!parsed.report.rejected.empty())
    err << parsed.report.rejected.size() << " row(s) rejected while reading " << o.input << "\n";
  return std::move(parsed.dataset);
}

inline SearchGrid make_grid(LearnerKind kind, const Options& o) {
  SearchGrid g = SearchGrid::defaults(kind, o.seed);
  const bool overridden = !o.m_values.empty() || !o.k_grid.empty() || !o.hidden_values.empty() ||
                          !o.decay_values.empty() || !o.degree_values.empty() || o.max_iter;
  if (!overridden) return g;
  HyperParams base;
  base.seed = o.seed;
  if (o.max_iter) base.nn_max_iter = *o.max_iter;
  g.candidates.clear();
  switch (kind) {
    case LearnerKind::tree:
      for (auto m : o.m_values.empty() ? std::vector<std::size_t>{1, 2, 5, 10, 25, 50} : o.m_values) {
        auto p = base;
        p.tree_min_instances = m;
        g.candidates.push_back(p);
      }
      break;
    case LearnerKind::knn:
      for (auto k : o.k_grid.empty() ? std::vector<std::size_t>{1, 3, 5, 7, 9} : o.k_grid) {
        auto p = base;
        p.knn_k = k;
        g.candidates.push_back(p);
      }
      break;
    case LearnerKind::nn:
      for (auto h : o.hidden_values.empty() ? std::vector<std::size_t>{3, 5, 8} : o.hidden_values)
        for (auto d : o.decay_values.empty() ? std::vector<double>{0.0, 5e-4, 1e-2} : o.decay_values) {
          auto p = base;
          p.nn_hidden = h;
          p.nn_decay = d;
          g.candidates.push_back(p);
        }
      break;
    case LearnerKind::poly:
      for (auto d : o.degree_values.empty() ? std::vector<int>{1, 2, 3} : o.degree_values) {
        auto p = base;
        p.poly_degree = d;
        g.candidates.push_back(p);
      }
      break;
  }
  return g;
}

inline std::vector<LearnerKind> learners(const Options& o) {
  if (o.learner == "all") return {std::begin(all_learners), std::end(all_learners)};
  return {parse_learner(o.learner)};
}

inline int cmd_ingest(const Options& o, std::ostream& out, std::ostream&) {
  if (o.input.empty()) throw UsageError("--input is required");
  const auto parsed = parse_log_file(o.input, load_schema(o));
  const auto dir = output_dir(o);
  text::write_file(out_path(dir, "dataset.csv"), to_csv(parsed.dataset));
  text::write_file(out_path(dir, "parse_report.txt"), parsed.report.to_text());
  out << parsed.report.accepted << " accepted, " << parsed.report.rejected.size() << " rejected\n";
  return 0;
}

inline int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(o, err);
  const SplitSpec spec = SplitSpec::parse(o.split, o.seed);
  const auto parts = split(data, spec);
  const auto dir = output_dir(o);

  std::ostringstream split_file;
  split_file << "id,partition\n";
  for (const auto& [name, part] : {std::pair<const char*, const Dataset*>{"train", &parts.train},
                                   {"validation", &parts.validation}, {"test", &parts.test}})
    for (const auto& r : part->records) split_file << r.id << ',' << name << '\n';
  text::write_file(out_path(dir, "split.csv"), split_file.str());

  std::vector<EvaluationRow> rows;
  std::vector<SearchGrid> grids;
  for (auto kind : learners(o)) {
    const auto grid = make_grid(kind, o);
    grids.push_back(grid);
    auto result = run_pipeline(parts, grid);
    for (const auto& note : result.selection.notes) err << to_string(kind) << ": " << note << '\n';
    result.selection.model.save(out_path(dir, "model_" + std::string(to_string(kind)) + ".json"));
    rows.push_back({result.selection.validation, result.test});
  }
  if (o.baselines) {
    for (auto kind : {BaselineKind::least_squares_per_attribute, BaselineKind::linear_regression}) {
      auto test = baseline(parts.train, parts.test, kind);
      auto valid = baseline(parts.train, parts.validation, kind);
      rows.push_back({valid, test});
    }
  }
  text::write_file(out_path(dir, "evaluation.csv"), evaluation_table_csv(rows));
  text::write_file(out_path(dir, "evaluation.txt"), evaluation_table_text(rows));
  out << evaluation_table_text(rows);

  if (o.per_benchmark) {
    std::string csv;
    for (const auto& grid : grids) {
      const auto result = train_per_benchmark(data, grid, spec);
      for (const auto& note : result.notes) err << to_string(grid.kind) << ": " << note << '\n';
      auto part = per_benchmark_csv(result);
      if (!csv.empty()) part = part.substr(part.find('\n') + 1);
      csv += part;
    }
    text::write_file(out_path(dir, "per_benchmark.csv"), csv);
  }
  if (o.split_study) {
    const auto splits = published_splits(o.seed);
    text::write_file(out_path(dir, "split_study.csv"), split_study_csv(split_study(data, grids, splits), splits));
  }
  return 0;
}

inline int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.model_path.empty()) throw UsageError("--model is required");
  const auto model = TrainedModel::load(o.model_path);
  ParseOptions popts;
  popts.require_target = false;
  popts.allow_unknown_levels = true;
  popts.allow_out_of_range = true;
  const Dataset data = load_dataset(o, err, popts);
  model.encoder().check_compatible(data.schema);
  std::ostringstream csv;
  csv << "id,predicted,flags\n";
  for (const auto& r : data.records) {
    EncodeReport report;
    const double p = model.predict(r, &report);
    std::string flags;
    if (report.unknown_levels) flags += "unknown_level";
    if (report.clamped) flags += std::string(flags.empty() ? "" : ";") + "clamped";
    csv << r.id << ',' << text::format_double(p) << ',' << flags << '\n';
  }
  const auto dir = output_dir(o);
  text::write_file(out_path(dir, "predictions.csv"), csv.str());
  out << data.size() << " predictions\n";
  return 0;
}

/// Reads reference labels: an id column plus either is_anomaly (0/1) or
/// label (anomaly/legitimate).
inline std::map<std::int64_t, Label> read_labels(const std::string& path) {
  std::istringstream in(text::read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  std::size_t first = 0;
  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error("labels file '" + path + "' is empty");
  const auto header = text::split(lines[first], ',');
  const auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto id_col = col("id") ? col("id") : col("id_exec");
  const auto flag_col = col("is_anomaly");
  const auto label_col = col("label");
  if (!id_col || (!flag_col && !label_col)) throw Error("labels file needs an id column and is_anomaly or label");
  std::map<std::int64_t, Label> labels;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto where = "labels file line " + std::to_string(i + 1);
    const auto cells = text::split(lines[i], ',');
    const auto id = *id_col < cells.size() ? text::parse_int(cells[*id_col]) : std::nullopt;
    if (!id) throw Error(where + ": bad id");
    bool anomaly = false;
    if (flag_col) {
      const auto v = *flag_col < cells.size() ? cells[*flag_col] : "";
      if (v != "0" && v != "1") throw Error(where + ": is_anomaly must be 0 or 1");
      anomaly = v == "1";
    } else {
      const auto v = *label_col < cells.size() ? cells[*label_col] : "";
      if (v != "anomaly" && v != "legitimate") throw Error(where + ": label must be anomaly or legitimate");
      anomaly = v == "anomaly";
    }
    labels[*id] = anomaly ? Label::anomaly : Label::legitimate;
  }
  return labels;
}

inline int cmd_detect(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(o, err);
  AnomalyParams params;
  params.n = o.n;
  params.h = o.h;
  params.min_neighbors = o.min_neighbors;
  params.min_time = o.min_time;
  params.validate();
  FlagLevel level = FlagLevel::outlier_only;
  if (o.flag_level == "flagged") level = FlagLevel::warning_or_outlier;
  else if (o.flag_level != "outlier") throw UsageError("--flag-level must be outlier or flagged");

  // the model defaults to the published tree setting fitted on the whole log
  const TrainedModel model = o.model_path.empty()
                                 ? train_model(parse_learner(o.learner == "all" ? "tree" : o.learner), HyperParams{}, data)
                                 : TrainedModel::load(o.model_path);
  if (o.model_path.empty()) err << "no --model given: fitted " << to_string(model.kind()) << " on the input\n";
  const auto report = detect(model, data, params);

  const auto dir = output_dir(o);
  text::write_file(out_path(dir, "anomaly_report.csv"), anomaly_report_csv(report));
  text::write_file(out_path(dir, "scatter.csv"), scatter_csv(report));
  text::write_file(out_path(dir, "summary.txt"), anomaly_summary(report));
  out << anomaly_summary(report);
  if (!o.labels_path.empty()) {
    const auto cm = confusion(report, read_labels(o.labels_path), level);
    text::write_file(out_path(dir, "confusion.txt"), cm.to_text());
    out << cm.to_text();
  }
  return 0;
}

inline int cmd_recommend(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(o, err);
  RecommendParams params;
  params.k_values = o.k_values;
  params.cost_rate = o.cost_rate;
  params.seed = o.seed;
  const auto grid = SearchGrid::defaults(parse_learner(o.learner == "all" ? "tree" : o.learner), o.seed);
  const auto p = plan(data, grid, params);
  for (const auto& note : p.notes) err << note << '\n';
  const auto dir = output_dir(o);
  text::write_file(out_path(dir, "plan.csv"), plan_csv(p));
  const auto curve = learning_curve(data, grid, params, o.budgets.empty() ? o.k_values : o.budgets, o.random_orders);
  text::write_file(out_path(dir, "curve.csv"), curve_csv(curve));
  out << plan_csv(p);
  return 0;
}

inline int cmd_generate(const Options& o, std::ostream& out, std::ostream&) {
  GeneratorSpec spec;
  if (!o.schema_path.empty()) spec.schema = Schema::load(o.schema_path);
  spec.laws = default_laws();
  spec.n_records = o.n_records;
  spec.noise_sigma = o.noise;
  spec.anomaly_fraction = o.anomaly_fraction;
  spec.anomaly_multiplier = o.multiplier;
  spec.low_time_fraction = o.low_time_fraction;
  spec.distinct_configs = o.distinct_configs;
  spec.seed = o.seed;
  const auto data = generate(spec);
  const auto dir = output_dir(o);
  text::write_file(out_path(dir, "dataset.csv"), to_csv(data.dataset));
  text::write_file(out_path(dir, "truth.csv"), truth_csv(data.truth));
  out << data.dataset.size() << " records generated\n";
  return 0;
}

inline int cmd_schema(const Options& o, std::ostream& out, std::ostream&) {
  const auto s = load_schema(o).to_text();
  if (o.out_dir.empty()) {
    out << s;
  } else {
    const auto dir = output_dir(o);
    text::write_file(out_path(dir, "schema.txt"), s);
  }
  return 0;
}

/// Runs one command line (without the program name). Returns the exit code:
/// 0 success, 1 failure, 2 usage or schema error.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Performance modeling, anomaly detection and guided benchmarking for execution logs", "perfml"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* c) {
    c->add_option("--input", o.input, "execution log (CSV)");
    c->add_option("--schema", o.schema_path, "schema file (default: built-in HiBench layout)");
    c->add_option("--seed", o.seed, "seed for every stochastic step");
    c->add_option("--out", o.out_dir, "output directory (default: $PERFML_OUT_DIR or .)");
  };

  auto* ingest = app.add_subcommand("ingest", "validate a log and write the accepted rows");
  common(ingest);

  auto* train = app.add_subcommand("train", "select and evaluate models on a three-way split");
  common(train);
  train->add_option("--learner", o.learner, "tree|knn|nn|poly|all");
  train->add_option("--split", o.split, "train/validation/test percentages, e.g. 50/25/25");
  train->add_option("--m", o.m_values, "tree M grid")->delimiter(',');
  train->add_option("--k", o.k_grid, "kNN K grid")->delimiter(',');
  train->add_option("--hidden", o.hidden_values, "neural net hidden-unit grid")->delimiter(',');
  train->add_option("--decay", o.decay_values, "neural net weight-decay grid")->delimiter(',');
  train->add_option("--max-iter", o.max_iter, "neural net iteration cap");
  train->add_option("--degree", o.degree_values, "polynomial degree grid")->delimiter(',');
  train->add_flag("--per-benchmark", o.per_benchmark, "also compare benchmark-specific models");
  train->add_flag("--split-study", o.split_study, "also run the published split ratios");
  train->add_flag("--baselines", o.baselines, "add rule-of-thumb baselines to the table");

  auto* predict = app.add_subcommand("predict", "predict execution times for configurations");
  common(predict);
  predict->add_option("--model", o.model_path, "model file")->required();

  auto* det = app.add_subcommand("detect", "flag anomalous executions");
  det->set_help_flag("--help", "print help");
  common(det);
  det->add_option("--model", o.model_path, "model file (default: tree fitted on the input)");
  det->add_option("--learner", o.learner, "learner fitted when no model is given");
  det->add_option("--n", o.n, "standard deviations for a warning");
  det->add_option("--h", o.h, "Hamming radius of the neighbourhood");
  det->add_option("--min-neighbors", o.min_neighbors, "neighbours needed to confirm an outlier");
  det->add_option("--min-time", o.min_time, "runs shorter than this many seconds are failed runs");
  det->add_option("--labels", o.labels_path, "reference labels for a confusion matrix");
  det->add_option("--flag-level", o.flag_level, "outlier|flagged: what counts as flagged in the confusion matrix");

  auto* rec = app.add_subcommand("recommend", "recommend executions to run for a new deployment");
  common(rec);
  rec->add_option("--learner", o.learner, "learner used to score recommendations");
  rec->add_option("--k-values", o.k_values, "cluster counts")->delimiter(',');
  rec->add_option("--cost-rate", o.cost_rate, "cost per hour of execution");
  rec->add_option("--budgets", o.budgets, "learning-curve budgets (default: the k values)")->delimiter(',');
  rec->add_option("--random-orders", o.random_orders, "random orders averaged in the learning curve");

  auto* gen = app.add_subcommand("generate", "write a synthetic execution log with ground truth");
  gen->add_option("--schema", o.schema_path, "schema file");
  gen->add_option("--seed", o.seed, "generator seed");
  gen->add_option("--out", o.out_dir, "output directory");
  gen->add_option("--records", o.n_records, "number of records");
  gen->add_option("--noise", o.noise, "Gaussian noise sigma in seconds");
  gen->add_option("--anomaly-fraction", o.anomaly_fraction, "share of anomalous records");
  gen->add_option("--multiplier", o.multiplier, "slow-run multiplier");
  gen->add_option("--low-time-fraction", o.low_time_fraction, "share of anomalies that are failed short runs");
  gen->add_option("--distinct-configs", o.distinct_configs, "repeat this many configurations (0: all distinct)");

  auto* sch = app.add_subcommand("schema", "print the schema");
  sch->add_option("--schema", o.schema_path, "schema file");
  sch->add_option("--out", o.out_dir, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out, err);
    if (train->parsed()) return cmd_train(o, out, err);
    if (predict->parsed()) return cmd_predict(o, out, err);
    if (det->parsed()) return cmd_detect(o, out, err);
    if (rec->parsed()) return cmd_recommend(o, out, err);
    if (gen->parsed()) return cmd_generate(o, out, err);
    if (sch->parsed()) return cmd_schema(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

} // namespace perfml::cli
