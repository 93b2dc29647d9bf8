#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "perfml/error.hpp"
#include "perfml/random.hpp"
#include "perfml/schema.hpp"
#include "perfml/text.hpp"

namespace perfml {

/// One logged benchmark run. Fields are stored positionally, aligned with the
/// schema the record was parsed under: `text` keeps the original trimmed cell
/// and `value` its numeric reading (categorical level index, -1 for a level
/// outside the vocabulary, NaN for an absent cell).
struct ExecutionRecord {
  std::int64_t id = 0;
  double exe_time = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> text;
  std::vector<double> value;

  bool has_target() const { return !std::isnan(exe_time); }
};

struct Dataset {
  Schema schema;
  std::vector<ExecutionRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::vector<std::int64_t> ids() const {
    std::vector<std::int64_t> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.id);
    return out;
  }

  std::vector<double> targets() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.exe_time);
    return out;
  }
};

inline Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out{data.schema, {}};
  out.records.reserve(rows.size());
  for (auto i : rows) out.records.push_back(data.records.at(i));
  return out;
}

template <class Pred>
Dataset filter(const Dataset& data, Pred&& keep) {
  Dataset out{data.schema, {}};
  for (const auto& r : data.records)
    if (keep(r)) out.records.push_back(r);
  return out;
}

/// Parses "YYYY-MM-DD HH:MM:SS" (or with a 'T' separator) into seconds since
/// the Unix epoch, UTC.
inline std::optional<double> parse_timestamp(std::string_view s) {
  s = text::trim(s);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' ||
      s[16] != ':')
    return std::nullopt;
  const auto y = text::parse_int(s.substr(0, 4));
  const auto mo = text::parse_int(s.substr(5, 2));
  const auto d = text::parse_int(s.substr(8, 2));
  const auto h = text::parse_int(s.substr(11, 2));
  const auto mi = text::parse_int(s.substr(14, 2));
  const auto se = text::parse_int(s.substr(17, 2));
  if (!y || !mo || !d || !h || !mi || !se || *h > 23 || *mi > 59 || *se > 60) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*y)),
                                        std::chrono::month(static_cast<unsigned>(*mo)),
                                        std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + static_cast<double>(*h * 3600 + *mi * 60 + *se);
}

inline std::string format_timestamp(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const auto tp = sys_seconds(seconds(epoch_seconds));
  const auto day = floor<days>(tp);
  const year_month_day ymd(day);
  const hh_mm_ss hms(tp - day);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

struct ParseOptions {
  /// When false the target column may be missing or empty (prediction inputs).
  bool require_target = true;
  /// When true, categorical levels outside the vocabulary are accepted with
  /// value -1 and noted in the report instead of rejecting the row.
  bool allow_unknown_levels = false;
  /// When true, numeric values outside the schema range are kept as read;
  /// the encoder clamps and flags them.
  bool allow_out_of_range = false;
};

struct RowRejection {
  std::size_t line = 0;
  std::string reason;
};

struct ParseReport {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::vector<RowRejection> rejected;
  std::vector<std::string> notes;

  /// Structured key/value text.
  std::string to_text() const {
    std::ostringstream out;
    out << "rows: " << rows << '\n'
        << "accepted: " << accepted << '\n'
        << "rejected: " << rejected.size() << '\n'
        << "summary: " << accepted << " accepted, " << rejected.size() << " rejected\n";
    for (const auto& r : rejected) out << "reject: line=" << r.line << " reason=\"" << r.reason << "\"\n";
    for (const auto& n : notes) out << "note: " << n << '\n';
    return out.str();
  }
};

struct ParseResult {
  Dataset dataset;
  ParseReport report;
};

namespace detail {

/// Validates a single cell. Returns an empty string on success, else the reason.
inline std::string read_cell(const Attribute& attr, const std::string& cell, double& value, bool allow_unknown,
                             bool allow_out_of_range, bool& unknown_level) {
  unknown_level = false;
  switch (attr.kind) {
    case AttributeKind::categorical: {
      const int level = attr.level(cell);
      if (level < 0) {
        if (!allow_unknown) return "unknown level '" + cell + "' for " + attr.name;
        unknown_level = true;
      }
      value = level;
      return {};
    }
    case AttributeKind::integer: {
      const auto v = text::parse_int(cell);
      if (!v) return "non-integer value '" + cell + "' for " + attr.name;
      value = static_cast<double>(*v);
      break;
    }
    case AttributeKind::real: {
      const auto v = text::parse_double(cell);
      if (!v || !std::isfinite(*v)) return "non-numeric value '" + cell + "' for " + attr.name;
      value = *v;
      break;
    }
    case AttributeKind::timestamp: {
      const auto v = parse_timestamp(cell);
      if (!v) return "bad timestamp '" + cell + "' for " + attr.name;
      value = *v;
      return {};
    }
  }
  if (!allow_out_of_range && !attr.in_range(value)) return "value " + cell + " out of range for " + attr.name;
  return {};
}

} // namespace detail

/// Reads a header-bearing comma-separated execution log. Header names are
/// matched to schema attributes regardless of order; unknown extra columns
/// are ignored with a note. A missing target column is fatal, as is any other
/// missing schema column.
inline ParseResult parse_log(std::istream& in, const Schema& schema, const ParseOptions& options = {}) {
  ParseResult result{Dataset{schema, {}}, {}};
  auto& report = result.report;

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) {
      header = text::split(line, ',');
      break;
    }
  }
  if (header.empty()) return result;  // empty file

  // column position in the file for each schema attribute
  std::vector<std::optional<std::size_t>> column(schema.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto idx = schema.index_of(header[c]);
    if (!idx) {
      report.notes.push_back("ignored column '" + header[c] + "'");
      continue;
    }
    if (column[*idx]) throw SchemaError("duplicate column '" + header[c] + "' in header");
    column[*idx] = c;
  }
  for (std::size_t a = 0; a < schema.size(); ++a) {
    if (column[a]) continue;
    if (a == schema.target_index()) {
      if (options.require_target) throw SchemaError("missing target column '" + schema[a].name + "'");
      continue;
    }
    throw SchemaError("missing column '" + schema[a].name + "'");
  }

  std::unordered_set<std::int64_t> seen_ids;
  std::optional<std::size_t> start_idx = schema.index_of("start_time");
  std::optional<std::size_t> end_idx = schema.index_of("end_time");

  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    ++report.rows;
    const auto cells = text::split(line, ',');
    auto reject = [&](std::string reason) { report.rejected.push_back({line_no, std::move(reason)}); };
    if (cells.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
      continue;
    }

    ExecutionRecord rec;
    rec.text.resize(schema.size());
    rec.value.assign(schema.size(), std::numeric_limits<double>::quiet_NaN());
    std::string reason;
    std::vector<std::string> unknown;
    for (std::size_t a = 0; a < schema.size() && reason.empty(); ++a) {
      if (!column[a]) continue;
      const auto& cell = cells[*column[a]];
      rec.text[a] = cell;
      if (a == schema.target_index() && !options.require_target && cell.empty()) continue;
      bool unknown_level = false;
      reason = detail::read_cell(schema[a], cell, rec.value[a], options.allow_unknown_levels,
                                 options.allow_out_of_range, unknown_level);
      if (unknown_level) unknown.push_back(schema[a].name + "=" + cell);
    }
    if (!reason.empty()) {
      reject(std::move(reason));
      continue;
    }

    rec.id = static_cast<std::int64_t>(rec.value[schema.id_index()]);
    rec.exe_time = rec.value[schema.target_index()];
    if (rec.has_target() && !(rec.exe_time > 0.0)) {
      reject("non-positive " + schema[schema.target_index()].name + " " + rec.text[schema.target_index()]);
      continue;
    }
    if (start_idx && end_idx && schema[*start_idx].kind == AttributeKind::timestamp &&
        schema[*end_idx].kind == AttributeKind::timestamp && rec.value[*end_idx] < rec.value[*start_idx]) {
      reject("end_time before start_time");
      continue;
    }
    if (!seen_ids.insert(rec.id).second) {
      reject("duplicate id " + std::to_string(rec.id));
      continue;
    }
    for (const auto& u : unknown)
      report.notes.push_back("line " + std::to_string(line_no) + ": unknown level " + u);
    result.dataset.records.push_back(std::move(rec));
  }
  report.accepted = result.dataset.records.size();
  return result;
}

inline ParseResult parse_log_file(const std::string& path, const Schema& schema, const ParseOptions& options = {}) {
  std::istringstream in(text::read_file(path));
  return parse_log(in, schema, options);
}

/// Writes the dataset in schema column order using the original cell text.
inline void write_dataset(std::ostream& out, const Dataset& data) {
  for (std::size_t a = 0; a < data.schema.size(); ++a) out << (a ? "," : "") << data.schema[a].name;
  out << '\n';
  for (const auto& r : data.records) {
    for (std::size_t a = 0; a < r.text.size(); ++a) out << (a ? "," : "") << r.text[a];
    out << '\n';
  }
}

inline std::string to_csv(const Dataset& data) {
  std::ostringstream out;
  write_dataset(out, data);
  return out.str();
}

/// Train / validation / test proportions and the shuffle seed.
struct SplitSpec {
  double train = 0.5;
  double validation = 0.25;
  double test = 0.25;
  std::uint64_t seed = 1;

  void validate() const {
    for (double f : {train, validation, test})
      if (!(f > 0.0 && f < 1.0)) throw UsageError("split fractions must lie in (0,1)");
    if (std::abs(train + validation + test - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");
  }

  /// Parses "50/25/25" (percentages) or "0.5/0.25/0.25".
  static SplitSpec parse(std::string_view s, std::uint64_t seed) {
    const auto parts = text::split(s, '/');
    if (parts.size() != 3) throw UsageError("split must have the form a/b/c, got '" + std::string(s) + "'");
    double f[3];
    for (int i = 0; i < 3; ++i) {
      const auto v = text::parse_double(parts[i]);
      if (!v) throw UsageError("bad split component '" + parts[i] + "'");
      f[i] = *v;
    }
    const double total = f[0] + f[1] + f[2];
    const double scale = total > 1.5 ? 100.0 : 1.0;
    SplitSpec spec{f[0] / scale, f[1] / scale, f[2] / scale, seed};
    spec.validate();
    return spec;
  }
};

/// Row indices of each partition, in shuffled order.
struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

/// Seeded random partition. Validation and test get floor(fraction * N)
/// rows; the remainder goes to train.
inline SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) throw UsageError("split needs at least 3 records, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto take = [n](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)); };
  const std::size_t n_val = take(spec.validation);
  const std::size_t n_test = take(spec.test);
  SplitIndices out;
  out.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val),
                  order.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), order.end());
  return out;
}

struct DataSplit {
  Dataset train, validation, test;
};

inline DataSplit split(const Dataset& data, const SplitSpec& spec) {
  const auto idx = split_indices(data.size(), spec);
  return {subset(data, idx.train), subset(data, idx.validation), subset(data, idx.test)};
}

/// Number of feature attributes on which two records differ. Categoricals
/// compare by cell text so distinct out-of-vocabulary levels still differ.
inline std::size_t hamming_distance(const ExecutionRecord& a, const ExecutionRecord& b, const Schema& schema) {
  std::size_t d = 0;
  for (auto i : schema.feature_indices()) {
    if (schema[i].kind == AttributeKind::categorical)
      d += a.text[i] != b.text[i];
    else
      d += a.value[i] != b.value[i];
  }
  return d;
}

} // namespace perfml
