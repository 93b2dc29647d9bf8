// Acceptance suite: one line per criterion, pinned tolerances.
// Exit status is nonzero only when a criterion fails that is not listed as a
// known failure below.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "perfml/perfml.hpp"

using namespace perfml;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0: no runtime bound
  std::function<Outcome()> body;
  bool known_failure = false;
};

std::string fmt(double v, int digits = 4) { return text::fixed(v, digits); }

std::uint64_t u(int s) { return static_cast<std::uint64_t>(s); }

GeneratorSpec laws_spec(std::uint64_t seed, std::size_t n, double noise) {
  GeneratorSpec g;
  g.laws = default_laws();
  g.n_records = n;
  g.noise_sigma = noise;
  g.seed = seed;
  return g;
}

// 1 ------------------------------------------------------------------------
Outcome metric_identities() {
  Rng rng(1);
  double worst_mean = 0.0, worst_perfect = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(50);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform(1.0, 1000.0);
    y[0] = y[1] + 1.0;  // never constant
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    worst_mean = std::max(worst_mean, std::abs(rae(std::vector<double>(n, mean), y) - 1.0));
    worst_perfect = std::max(worst_perfect, mae(y, y));
  }
  return {worst_mean <= 1e-12 && worst_perfect == 0.0,
          "max|rae(mean)-1|=" + text::format_double(worst_mean) + " max mae(perfect)=" + text::format_double(worst_perfect) +
              " tol 1e-12/0"};
}

// 2 ------------------------------------------------------------------------
std::vector<EncodedInstance> make_rows(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  std::vector<EncodedInstance> out;
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back({x[i], y[i], static_cast<std::int64_t>(i + 1)});
  return out;
}

Outcome learner_oracles() {
  Rng rng(2);
  std::string detail;
  bool pass = true;

  {  // exact cubic
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
      const double a = rng.uniform(), b = rng.uniform();
      x.push_back({a, b});
      y.push_back(5.0 + 2.0 * a - 3.0 * a * a + 4.0 * a * a * a - b + 0.5 * b * b * b);
    }
    const auto rows = make_rows(x, y);
    const auto poly = train_poly(rows, 3);
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(poly.predict(r.features) - r.target));
    pass &= worst < 1e-6;
    detail += "poly cubic max err " + text::format_double(worst) + " (<1e-6)";
  }
  {  // kNN self-retrieval
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 60; ++i) {
      x.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
      y.push_back(rng.uniform(10.0, 500.0));
    }
    const auto rows = make_rows(x, y);
    const auto knn = train_knn(rows, 1);
    std::size_t exact = 0;
    for (const auto& r : rows) exact += knn.predict(r.features) == r.target;
    pass &= exact == rows.size();
    detail += "; knn K=1 exact " + std::to_string(exact) + "/" + std::to_string(rows.size());
  }
  {  // tree with M >= N versus an independent least-squares fit
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
      const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
      x.push_back({a, b, c});
      y.push_back(100.0 + 40.0 * a - 25.0 * b + 10.0 * c + rng.normal(0.0, 0.5));
    }
    const auto rows = make_rows(x, y);
    const auto tree = train_tree(rows, rows.size());
    Eigen::MatrixXd a(rows.size(), 4);
    Eigen::VectorXd t(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      a(static_cast<Eigen::Index>(i), 0) = 1.0;
      for (int j = 0; j < 3; ++j) a(static_cast<Eigen::Index>(i), j + 1) = x[i][static_cast<std::size_t>(j)];
      t(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd beta = a.householderQr().solve(t);
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      worst = std::max(worst, std::abs(tree.predict(rows[i].features) - (a.row(static_cast<Eigen::Index>(i)) * beta)(0)));
    pass &= tree.leaf_count() == 1 && worst < 1e-9;
    detail += "; tree M>=N leaves " + std::to_string(tree.leaf_count()) + " max dev " + text::format_double(worst) +
              " (<1e-9)";
  }
  {  // NN gradient check
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 8; ++i) {
      x.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
      y.push_back(rng.normal());
    }
    const auto rows = make_rows(x, y);
    double worst = 0.0;
    for (double decay : {0.0, 5e-4, 1e-2}) {
      const NnShape shape{3, 5};
      std::vector<double> w(shape.size());
      for (auto& v : w) v = rng.uniform(-1.0, 1.0);
      const auto g = nn::gradient(shape, w, rows, y, decay);
      for (std::size_t k = 0; k < w.size(); ++k) {
        auto plus = w, minus = w;
        plus[k] += 1e-5;
        minus[k] -= 1e-5;
        const double fd = (nn::objective(shape, plus, rows, y, decay) - nn::objective(shape, minus, rows, y, decay)) / 2e-5;
        worst = std::max(worst, std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-6}));
      }
    }
    pass &= worst < 1e-4;
    detail += "; nn grad rel err " + text::format_double(worst) + " (<1e-4)";
  }
  return {pass, detail};
}

// 3 ------------------------------------------------------------------------
Outcome model_selection() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<Attribute> attrs{{"id", AttributeKind::integer, AttributeRole::identity, {}, {}, {}},
                                 {"y", AttributeKind::real, AttributeRole::target, {}, {}, {}},
                                 {"a", AttributeKind::real, AttributeRole::feature, {}, {}, {}},
                                 {"b", AttributeKind::real, AttributeRole::feature, {}, {}, {}}};
    Dataset data{Schema(attrs), {}};
    for (int i = 1; i <= 240; ++i) {
      const double a = rng.uniform(), b = rng.uniform();
      const double y = (a < 0.4 ? 100.0 : 300.0) + (b < 0.7 ? 0.0 : 150.0) + rng.normal(0.0, 10.0);
      ExecutionRecord r;
      r.id = i;
      r.exe_time = y;
      r.value = {static_cast<double>(i), y, a, b};
      r.text = {std::to_string(i), text::format_double(y), text::format_double(a), text::format_double(b)};
      data.records.push_back(r);
    }
    const auto parts = split(data, {0.5, 0.25, 0.25, seed});
    SearchGrid grid{LearnerKind::tree, {}};
    for (std::size_t m : {1, 2, 5, 10, 25}) {
      HyperParams p;
      p.tree_min_instances = m;
      grid.candidates.push_back(p);
    }
    const auto chosen = search(grid, parts.train, parts.validation);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : grid.candidates)
      best = std::min(best, rae(train_model(LearnerKind::tree, p, parts.train).predict_all(parts.validation),
                                parts.validation.targets()));
    worst = std::max(worst, std::abs(chosen.validation.rae - best));
  }
  return {worst <= 1e-12, "max |chosen - exhaustive min| = " + text::format_double(worst) + " over 5 seeds (tol 1e-12)"};
}

// 4 ------------------------------------------------------------------------
double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome split_degradation() {
  std::vector<double> at20, at50;
  for (int s = 1; s <= 10; ++s) {
    const auto data = generate(laws_spec(u(s), 600, 30)).dataset;
    const auto grid = SearchGrid::defaults(LearnerKind::tree, u(s));
    at20.push_back(run_pipeline(data, grid, {0.2, 0.55, 0.25, u(s)}).test.rae);
    at50.push_back(run_pipeline(data, grid, {0.5, 0.25, 0.25, u(s)}).test.rae);
  }
  const double m20 = median(at20), m50 = median(at50);
  return {m20 >= m50, "median test RAE 20% train " + fmt(m20) + " >= 50% train " + fmt(m50)};
}

// 5 ------------------------------------------------------------------------
Outcome specific_vs_general() {
  int wins = 0;
  for (int s = 1; s <= 10; ++s) {
    BenchmarkLaw a;
    a.benchmark = "terasort";
    a.base = 900;
    a.slopes = {{"maps", -600}, {"datanodes", -300}};
    a.level_effects = {{"disk", {0, 200, 150, 100, 50}}};
    BenchmarkLaw b;
    b.benchmark = "wordcount";
    b.base = 300;
    b.slopes = {{"maps", 600}, {"datanodes", 300}};
    b.level_effects = {{"disk", {200, 0, 50, 100, 150}}};
    GeneratorSpec g;
    g.laws = {a, b};
    g.n_records = 400;
    g.noise_sigma = 25;
    g.seed = u(s);
    const auto r = train_per_benchmark(generate(g).dataset, SearchGrid::defaults(LearnerKind::poly, u(s)),
                                       {0.5, 0.25, 0.25, u(s)});
    bool every = r.rows.size() == 2;
    for (const auto& row : r.rows) every &= row.specific_rae < row.general_rae;
    wins += every;
  }
  return {wins >= 8, "specific < general on every benchmark in " + std::to_string(wins) + "/10 seeds (need >= 8)"};
}

// 6 ------------------------------------------------------------------------
Outcome anomaly_recovery() {
  double recall = 0.0, fpr = 0.0;
  for (int s = 1; s <= 10; ++s) {
    BenchmarkLaw law;
    law.benchmark = "terasort";
    law.base = 500;
    law.slopes = {{"maps", -100}, {"datanodes", -80}, {"iosf", -40}};
    law.level_effects = {{"disk", {0, 100, 60, 40, 20}}, {"comp", {0, 60, 40, 10}}};
    GeneratorSpec g;
    g.laws = {law};
    g.n_records = 600;
    g.anomaly_fraction = 0.05;
    g.anomaly_multiplier = 5.0;
    g.seed = u(s);
    double signal = 0.0;
    for (const auto& [id, t] : generate(g).truth) signal += t.law_time;
    g.noise_sigma = 0.05 * signal / static_cast<double>(g.n_records);
    const auto gen = generate(g);
    const auto model = run_pipeline(gen.dataset, SearchGrid::defaults(LearnerKind::poly, u(s)), {0.5, 0.25, 0.25, u(s)})
                           .selection.model;
    AnomalyParams p;
    p.n = 3.0;
    p.h = 0;
    std::map<std::int64_t, Label> labels;
    for (const auto& [id, t] : gen.truth) labels[id] = t.is_anomaly ? Label::anomaly : Label::legitimate;
    const auto cm = confusion(detect(model, gen.dataset, p), labels, FlagLevel::warning_or_outlier);
    recall += cm.recall();
    fpr += cm.false_positive_rate();
  }
  recall /= 10.0;
  fpr /= 10.0;
  return {recall >= 0.9 && fpr <= 0.02, "mean recall " + fmt(recall) + " (>= 0.9), mean FPR " + fmt(fpr) + " (<= 0.02)"};
}

// 7 ------------------------------------------------------------------------
Outcome monotonicity() {
  std::size_t checks = 0, violations = 0;
  for (int s = 1; s <= 20; ++s) {
    auto g = laws_spec(u(s), 24, 40);
    g.distinct_configs = 6;
    g.anomaly_fraction = 0.2;
    const auto data = generate(g).dataset;
    const auto model = train_model(LearnerKind::tree, HyperParams{}, data);
    // flagged-set nesting in n
    std::set<std::int64_t> prev;
    bool first = true;
    for (double n = 0.25; n <= 4.0; n += 0.25) {
      AnomalyParams p;
      p.n = n;
      const auto flagged = detect(model, data, p).flagged_ids();
      const std::set<std::int64_t> cur(flagged.begin(), flagged.end());
      if (!first) {
        ++checks;
        violations += !std::includes(prev.begin(), prev.end(), cur.begin(), cur.end());
      }
      prev = cur;
      first = false;
    }
    // neighbour counts grow with h; every record treated as a warning
    AnomalyReport all_warn;
    for (const auto& r : data.records) {
      Observation o;
      o.id = r.id;
      o.flag = Flag::warning;
      all_warn.observations.push_back(o);
    }
    std::vector<std::size_t> last(data.size(), 0);
    for (std::size_t h = 0; h <= data.schema.feature_indices().size(); ++h) {
      AnomalyParams p;
      p.h = h;
      const auto r = classify_outliers(all_warn, data, p);
      for (std::size_t i = 0; i < data.size(); ++i) {
        ++checks;
        violations += r.observations[i].neighbors < last[i];
        last[i] = r.observations[i].neighbors;
      }
      if (h == data.schema.feature_indices().size())
        for (std::size_t i = 0; i < data.size(); ++i) {
          ++checks;
          violations += r.observations[i].neighbors != data.size() - 1;
        }
    }
    // k-means inertia per iteration
    Rng rng(u(s));
    std::vector<Point> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({std::round(rng.uniform() * 5.0), std::round(rng.uniform() * 5.0)});
    for (std::size_t k = 1; k <= std::min<std::size_t>(6, count_distinct(pts)); ++k) {
      const auto km = kmeans(pts, k, {100, 3, u(s)});
      for (std::size_t i = 1; i < km.history.size(); ++i) {
        ++checks;
        violations += km.history[i] > km.history[i - 1] + 1e-12;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) + " assertions"};
}

// 8 ------------------------------------------------------------------------
Outcome retraining_benefit() {
  int wins = 0;
  for (int s = 1; s <= 10; ++s) {
    auto g = laws_spec(u(s), 600, 30);
    g.anomaly_fraction = 0.05;
    g.anomaly_multiplier = 5.0;
    g.distinct_configs = 60;
    const auto r = retrain_without_outliers(generate(g).dataset, SearchGrid::defaults(LearnerKind::tree, u(s)),
                                            AnomalyParams{}, {0.5, 0.25, 0.25, u(s)});
    wins += r.after_validation.rae < r.before_validation.rae;
  }
  return {wins >= 8, "validation RAE reduced in " + std::to_string(wins) + "/10 seeds (need >= 8)"};
}

// 9 ------------------------------------------------------------------------
Outcome guided_benchmarking() {
  int wins = 0;
  std::size_t budget_losses = 0;
  for (int s = 1; s <= 10; ++s) {
    auto g = laws_spec(u(s), 600, 30);
    g.distinct_configs = 40;
    RecommendParams p;
    p.seed = u(s);
    const auto curve =
        learning_curve(generate(g).dataset, SearchGrid::winner(LearnerKind::tree, u(s)), p, {10, 20, 30, 45, 60, 90, 120, 150}, 10);
    bool every = !curve.points.empty();
    for (const auto& pt : curve.points) {
      const bool ok = pt.rae_recommended <= pt.rae_random_mean;
      every &= ok;
      budget_losses += !ok;
    }
    wins += every;
  }
  return {wins >= 7, "recommended <= random mean at every budget <= 150 in " + std::to_string(wins) +
                         "/10 seeds (need >= 7); " + std::to_string(budget_losses) + "/80 budget points lost"};
}

// 10 -----------------------------------------------------------------------
Outcome determinism() {
  std::size_t compared = 0, differing = 0;
  const auto same = [&](const std::string& a, const std::string& b) {
    ++compared;
    differing += a != b;
  };
  auto g = laws_spec(10, 300, 30);
  g.anomaly_fraction = 0.05;
  const auto a = generate(g), b = generate(g);
  same(to_csv(a.dataset), to_csv(b.dataset));
  same(truth_csv(a.truth), truth_csv(b.truth));
  const auto& data = a.dataset;
  for (auto kind : {LearnerKind::tree, LearnerKind::knn, LearnerKind::poly, LearnerKind::nn}) {
    auto grid = SearchGrid::defaults(kind, 10);
    if (kind == LearnerKind::nn)
      for (auto& c : grid.candidates) c.nn_max_iter = 100;
    const auto r1 = run_pipeline(data, grid, {0.5, 0.25, 0.25, 10});
    const auto r2 = run_pipeline(data, grid, {0.5, 0.25, 0.25, 10});
    same(r1.selection.model.serialize(), r2.selection.model.serialize());
    same(evaluation_table_csv({{r1.selection.validation, r1.test}}), evaluation_table_csv({{r2.selection.validation, r2.test}}));
    same(anomaly_report_csv(detect(r1.selection.model, data, {})), anomaly_report_csv(detect(r2.selection.model, data, {})));
  }
  RecommendParams p;
  p.seed = 10;
  p.k_values = {10, 20, 30};
  const auto grid = SearchGrid::winner(LearnerKind::tree, 10);
  same(plan_csv(plan(data, grid, p)), plan_csv(plan(data, grid, p)));
  same(curve_csv(learning_curve(data, grid, p, {10, 30}, 3)), curve_csv(learning_curve(data, grid, p, {10, 30}, 3)));
  return {differing == 0, std::to_string(differing) + " of " + std::to_string(compared) + " output pairs differ"};
}

// 11 -----------------------------------------------------------------------
Outcome real_data() {
  const char* path = std::getenv("PERFML_ALOJA_CSV");
  if (!path || !*path) return {true, "PERFML_ALOJA_CSV not set", true};
  const auto parsed = parse_log_file(path, Schema::hibench());
  std::string detail = std::to_string(parsed.dataset.size()) + " records;";
  bool pass = true;
  for (auto kind : {LearnerKind::tree, LearnerKind::knn}) {
    const auto r = run_pipeline(parsed.dataset, SearchGrid::defaults(kind, 1), {0.5, 0.25, 0.25, 1});
    pass &= r.test.rae >= 0.10 && r.test.rae <= 0.40;
    detail += " " + std::string(to_string(kind)) + " test RAE " + fmt(r.test.rae);
  }
  return {pass, detail + " (corridor [0.10, 0.40])"};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "metric identities", 1, metric_identities},
      {2, "learner oracles", 30, learner_oracles},
      {3, "model selection", 30, model_selection},
      {4, "split degradation", 0, split_degradation},
      {5, "specific vs general", 0, specific_vs_general},
      {6, "anomaly recovery", 60, anomaly_recovery},
      {7, "monotonicity suite", 0, monotonicity},
      {8, "retraining benefit", 0, retraining_benefit},
      {9, "guided benchmarking dominance", 300, guided_benchmarking, true},
      {10, "determinism", 0, determinism},
      {11, "real-data smoke", 0, real_data},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string runtime = fmt(secs, 2) + " s";
    if (c.budget_seconds > 0) {
      runtime += " (limit " + fmt(c.budget_seconds, 0) + " s)";
      if (secs > c.budget_seconds && !o.skipped) {
        o.pass = false;
        o.detail += "; over time limit";
      }
    }
    const char* status = o.skipped ? "SKIP" : o.pass ? "PASS" : "FAIL";
    std::string suffix;
    if (!o.pass && c.known_failure) suffix = " [known failure]";
    std::printf("%s  %2d  %-30s %s; %s%s\n", status, c.id, c.name.c_str(), o.detail.c_str(), runtime.c_str(),
                suffix.c_str());
    std::fflush(stdout);
    if (!o.pass && !c.known_failure) ++unexpected;
  }
  std::printf("%d unexpected failure(s)\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}
