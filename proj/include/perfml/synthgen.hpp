#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "perfml/dataset.hpp"
#include "perfml/error.hpp"
#include "perfml/random.hpp"
#include "perfml/schema.hpp"
#include "perfml/text.hpp"

namespace perfml {

enum class LawFamily { linear, step, interaction };

inline std::string_view to_string(LawFamily f) {
  switch (f) {
    case LawFamily::linear: return "linear";
    case LawFamily::step: return "step";
    case LawFamily::interaction: return "interaction";
  }
  return "?";
}

struct StepTerm {
  std::string attribute;
  double threshold = 0.5;  // on the range-scaled value
  double jump = 0.0;       // seconds added above the threshold
};

struct InteractionTerm {
  std::string a, b;
  double coefficient = 0.0;  // seconds per unit of scaled a * scaled b
};

/// Execution time of one benchmark as a function of its configuration.
/// Numeric attributes enter scaled to [0, 1] over their declared range.
struct BenchmarkLaw {
  std::string benchmark;
  LawFamily family = LawFamily::linear;
  double base = 300.0;
  std::map<std::string, double> slopes;
  std::map<std::string, std::vector<double>> level_effects;  // seconds per categorical level
  std::vector<StepTerm> steps;
  std::vector<InteractionTerm> interactions;
};

/// A region of the configuration space with its own frequency and, when
/// `laws` is non-empty, its own timing laws. `fixed` pins attributes (by
/// name) to a cell value in every record of the regime.
struct Regime {
  std::string name;
  double weight = 1.0;
  std::map<std::string, std::string> fixed;
  std::vector<BenchmarkLaw> laws;
};

struct GeneratorSpec {
  Schema schema = Schema::hibench();
  std::string group_attribute = "benchmark";
  std::vector<BenchmarkLaw> laws;
  double noise_sigma = 0.0;  // seconds
  double anomaly_fraction = 0.0;
  double anomaly_multiplier = 5.0;
  /// Share of the anomalies that are failed runs finishing in 5..59 s
  /// instead of slow runs.
  double low_time_fraction = 0.0;
  std::size_t n_records = 100;
  /// When positive, records repeat this many sampled configurations.
  std::size_t distinct_configs = 0;
  /// Empty: one regime covering the whole space with `laws`.
  std::vector<Regime> regimes;
  std::uint64_t seed = 1;

  void validate() const {
    if (laws.empty() && regimes.empty()) throw UsageError("generator needs at least one benchmark law");
    for (const auto& r : regimes) {
      if (!(r.weight > 0.0)) throw UsageError("regime weights must be positive");
      if (r.laws.empty() && laws.empty()) throw UsageError("regime '" + r.name + "' has no laws");
      for (const auto& [name, cell] : r.fixed) {
        const auto a = schema.index_of(name);
        if (!a || schema[*a].role != AttributeRole::feature || name == group_attribute)
          throw UsageError("regime '" + r.name + "' fixes '" + name + "', which is not a configuration feature");
        const auto& attr = schema[*a];
        const bool ok = attr.kind == AttributeKind::categorical
                            ? attr.level(cell) >= 0
                            : text::parse_double(cell) && attr.in_range(*text::parse_double(cell));
        if (!ok) throw UsageError("regime '" + r.name + "' fixes '" + name + "' to invalid value '" + cell + "'");
      }
    }
    if (!(anomaly_fraction >= 0.0 && anomaly_fraction <= 0.2)) throw UsageError("anomaly_fraction must lie in [0, 0.2]");
    if (!(anomaly_multiplier > 1.0)) throw UsageError("anomaly_multiplier must exceed 1");
    if (!(noise_sigma >= 0.0)) throw UsageError("noise_sigma must be non-negative");
    if (!(low_time_fraction >= 0.0 && low_time_fraction <= 1.0)) throw UsageError("low_time_fraction must lie in [0, 1]");
    if (n_records < 10) throw UsageError("n_records must be >= 10");
    const auto g = schema.index_of(group_attribute);
    if (!g || schema[*g].kind != AttributeKind::categorical)
      throw UsageError("group attribute '" + group_attribute + "' is not a categorical schema attribute");
    std::vector<const BenchmarkLaw*> all_laws;
    for (const auto& law : laws) all_laws.push_back(&law);
    for (const auto& r : regimes)
      for (const auto& law : r.laws) all_laws.push_back(&law);
    for (const auto* lp : all_laws) {
      const auto& law = *lp;
      if (schema[*g].level(law.benchmark) < 0) throw UsageError("law for unknown benchmark '" + law.benchmark + "'");
      for (const auto& [name, effects] : law.level_effects) {
        const auto a = schema.index_of(name);
        if (!a || schema[*a].kind != AttributeKind::categorical)
          throw UsageError("level effects for non-categorical '" + name + "'");
        if (effects.size() != schema[*a].vocabulary.size())
          throw UsageError("level effects for '" + name + "' do not cover its vocabulary");
      }
      auto check_numeric = [&](const std::string& name) {
        const auto a = schema.index_of(name);
        if (!a || !schema[*a].numeric() || schema[*a].role != AttributeRole::feature)
          throw UsageError("'" + name + "' is not a numeric feature");
      };
      for (const auto& [name, s] : law.slopes) check_numeric(name);
      for (const auto& s : law.steps) check_numeric(s.attribute);
      for (const auto& t : law.interactions) {
        check_numeric(t.a);
        check_numeric(t.b);
      }
    }
  }
};

struct Truth {
  std::size_t regime = 0;
  double law_time = 0.0;
  double clean_exe_time = 0.0;  // law plus noise, before any anomaly
  bool is_anomaly = false;
  bool low_time = false;
};

struct GeneratedData {
  Dataset dataset;
  std::map<std::int64_t, Truth> truth;
};

namespace detail {

inline double scaled(const Attribute& a, double v) {
  const double lo = a.min.value_or(0.0), hi = a.max.value_or(1.0);
  return hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

} // namespace detail

/// Noise-free execution time of `rec` under `law`.
inline double law_time(const BenchmarkLaw& law, const Schema& schema, const ExecutionRecord& rec) {
  const auto value = [&](const std::string& name) {
    const auto i = *schema.index_of(name);
    return detail::scaled(schema[i], rec.value[i]);
  };
  double t = law.base;
  for (const auto& [name, slope] : law.slopes) t += slope * value(name);
  for (const auto& [name, effects] : law.level_effects) {
    const auto i = *schema.index_of(name);
    const int level = static_cast<int>(rec.value[i]);
    if (level >= 0) t += effects[static_cast<std::size_t>(level)];
  }
  for (const auto& s : law.steps)
    if (value(s.attribute) > s.threshold) t += s.jump;
  for (const auto& x : law.interactions) t += x.coefficient * value(x.a) * value(x.b);
  return t;
}

/// Synthetic execution log with known ground truth. Each configuration picks
/// a regime by weight and a benchmark uniformly among the regime's laws; the
/// remaining features are drawn uniformly from the schema's vocabularies and
/// ranges unless the regime fixes them.
inline GeneratedData generate(const GeneratorSpec& spec) {
  spec.validate();
  const Schema& schema = spec.schema;
  const std::size_t group = *schema.index_of(spec.group_attribute);
  Rng config_rng(derive_seed(spec.seed, 1));
  Rng noise_rng(derive_seed(spec.seed, 2));
  Rng anomaly_rng(derive_seed(spec.seed, 3));

  std::vector<Regime> regimes = spec.regimes;
  if (regimes.empty()) regimes.push_back({"all", 1.0, {}, {}});
  for (auto& r : regimes)
    if (r.laws.empty()) r.laws = spec.laws;
  double total_weight = 0.0;
  for (const auto& r : regimes) total_weight += r.weight;

  struct Config {
    std::vector<std::string> cells;  // feature attributes only; others filled per record
    std::size_t regime = 0;
    const BenchmarkLaw* law = nullptr;
  };
  const auto sample_config = [&](Rng& rng) {
    Config c;
    double u = rng.uniform() * total_weight;
    while (c.regime + 1 < regimes.size() && u >= regimes[c.regime].weight) u -= regimes[c.regime++].weight;
    const auto& regime = regimes[c.regime];
    c.law = &regime.laws[rng.index(regime.laws.size())];
    c.cells.resize(schema.size());
    for (auto i : schema.feature_indices()) {
      const auto& a = schema[i];
      if (i == group) {
        c.cells[i] = c.law->benchmark;
      } else if (a.kind == AttributeKind::categorical) {
        c.cells[i] = a.vocabulary[rng.index(a.vocabulary.size())];
      } else if (a.kind == AttributeKind::integer) {
        const auto lo = static_cast<std::int64_t>(std::ceil(a.min.value_or(0.0)));
        const auto hi = static_cast<std::int64_t>(std::floor(a.max.value_or(100.0)));
        c.cells[i] = std::to_string(rng.integer(lo, hi));
      } else {
        const double v = std::round(rng.uniform(a.min.value_or(0.0), a.max.value_or(1.0)) * 100.0) / 100.0;
        c.cells[i] = text::format_double(std::clamp(v, a.min.value_or(v), a.max.value_or(v)));
      }
    }
    for (const auto& [name, cell] : regime.fixed) c.cells[*schema.index_of(name)] = cell;
    return c;
  };

  std::vector<Config> pool;
  for (std::size_t c = 0; c < spec.distinct_configs; ++c) pool.push_back(sample_config(config_rng));

  const auto start_idx = schema.index_of("start_time");
  const auto end_idx = schema.index_of("end_time");
  const std::int64_t epoch0 = static_cast<std::int64_t>(*parse_timestamp("2014-08-27 00:00:00"));

  // anomalous records: exactly round(fraction * n), a share of them failed runs
  std::vector<std::size_t> order(spec.n_records);
  std::iota(order.begin(), order.end(), std::size_t{0});
  anomaly_rng.shuffle(std::span<std::size_t>(order));
  const auto n_anom = static_cast<std::size_t>(std::llround(spec.anomaly_fraction * static_cast<double>(spec.n_records)));
  const auto n_low = static_cast<std::size_t>(std::llround(spec.low_time_fraction * static_cast<double>(n_anom)));
  std::vector<int> kind(spec.n_records, 0);  // 0 clean, 1 slow, 2 failed
  for (std::size_t j = 0; j < n_anom; ++j) kind[order[j]] = j < n_low ? 2 : 1;

  GeneratedData out;
  out.dataset.schema = schema;
  std::int64_t clock = epoch0;
  for (std::size_t r = 0; r < spec.n_records; ++r) {
    const Config config = pool.empty() ? sample_config(config_rng) : pool[config_rng.index(pool.size())];
    auto cells = config.cells;
    ExecutionRecord rec;
    rec.id = static_cast<std::int64_t>(r + 1);
    rec.value.assign(schema.size(), std::numeric_limits<double>::quiet_NaN());
    for (auto i : schema.feature_indices()) {
      const auto& a = schema[i];
      rec.value[i] = a.kind == AttributeKind::categorical ? a.level(cells[i]) : *text::parse_double(cells[i]);
    }
    Truth t;
    t.regime = config.regime;
    t.law_time = law_time(*config.law, schema, rec);
    t.clean_exe_time = std::max(1.0, t.law_time + noise_rng.normal(0.0, spec.noise_sigma));
    double exe = t.clean_exe_time;
    if (kind[r] == 1) {
      exe *= spec.anomaly_multiplier;
      t.is_anomaly = true;
    } else if (kind[r] == 2) {
      exe = anomaly_rng.uniform(5.0, 59.0);
      t.is_anomaly = t.low_time = true;
    }
    const std::int64_t duration = static_cast<std::int64_t>(std::ceil(exe));

    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (!cells[i].empty()) continue;
      const auto& a = schema[i];
      double v = 0.0;
      if (i == schema.id_index()) {
        v = static_cast<double>(rec.id);
        cells[i] = std::to_string(rec.id);
      } else if (i == schema.target_index()) {
        v = exe;
        cells[i] = text::format_double(exe);
      } else if (start_idx && i == *start_idx && a.kind == AttributeKind::timestamp) {
        v = static_cast<double>(clock);
        cells[i] = format_timestamp(clock);
      } else if (end_idx && i == *end_idx && a.kind == AttributeKind::timestamp) {
        v = static_cast<double>(clock + duration);
        cells[i] = format_timestamp(clock + duration);
      } else if (a.kind == AttributeKind::timestamp) {
        v = static_cast<double>(clock);
        cells[i] = format_timestamp(clock);
      } else if (a.kind == AttributeKind::categorical) {
        v = 0;
        cells[i] = a.vocabulary.front();
      } else {
        v = a.min ? std::ceil(*a.min) : 1.0;
        if (a.max) v = std::min(v, *a.max);
        cells[i] = text::format_double(v);
      }
      rec.value[i] = v;
    }
    rec.exe_time = exe;
    rec.text = std::move(cells);
    clock += 3600;
    out.truth[rec.id] = t;
    out.dataset.records.push_back(std::move(rec));
  }
  return out;
}

inline std::string truth_csv(const std::map<std::int64_t, Truth>& truth) {
  std::ostringstream out;
  out << "id,regime,law_time,clean_exe_time,is_anomaly,low_time\n";
  for (const auto& [id, t] : truth)
    out << id << ',' << t.regime << ',' << text::format_double(t.law_time) << ',' << text::format_double(t.clean_exe_time) << ','
        << (t.is_anomaly ? 1 : 0) << ',' << (t.low_time ? 1 : 0) << '\n';
  return out.str();
}

/// One law per HiBench benchmark, mixing the three families. Every law stays
/// well above one minute over the whole configuration space.
inline std::vector<BenchmarkLaw> default_laws() {
  const std::vector<double> disk{0.0, 180.0, 120.0, 90.0, 60.0};      // SSD HDD RL1 RL2 RL3
  const std::vector<double> comp{0.0, 150.0, 90.0, 30.0};             // None BZIP2 ZLIB Snappy
  const std::vector<double> net{60.0, 0.0};                           // ETH IB
  std::vector<BenchmarkLaw> laws;
  const auto add = [&](std::string name, LawFamily family, double base, double scale) {
    BenchmarkLaw law;
    law.benchmark = std::move(name);
    law.family = family;
    law.base = base;
    law.slopes = {{"maps", -120.0 * scale}, {"datanodes", -150.0 * scale}, {"iosf", -40.0 * scale},
                  {"blk_size", -30.0 * scale}, {"vm_cores", -60.0 * scale}};
    law.level_effects = {{"disk", disk}, {"comp", comp}, {"net", net}};
    for (auto& [k, v] : law.level_effects)
      for (auto& e : v) e *= scale;
    if (family == LawFamily::step) law.steps = {{"maps", 0.5, 200.0 * scale}, {"iosf", 0.3, -80.0 * scale}};
    if (family == LawFamily::interaction) law.interactions = {{"datanodes", "vm_cores", 180.0 * scale}};
    laws.push_back(std::move(law));
  };
  add("bayes", LawFamily::linear, 700.0, 1.0);
  add("terasort", LawFamily::step, 900.0, 1.3);
  add("sort", LawFamily::linear, 600.0, 0.9);
  add("wordcount", LawFamily::interaction, 800.0, 1.1);
  add("kmeans", LawFamily::step, 1000.0, 1.2);
  add("pagerank", LawFamily::interaction, 1100.0, 1.4);
  add("dfsioe_read", LawFamily::linear, 500.0, 0.7);
  add("dfsioe_write", LawFamily::step, 650.0, 0.8);
  return laws;
}

} // namespace perfml
