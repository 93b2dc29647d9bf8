#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "perfml/dataset.hpp"
#include "perfml/error.hpp"
#include "perfml/schema.hpp"

namespace perfml {

/// Numeric feature vector for one record plus its target.
struct EncodedInstance {
  std::vector<double> features;
  double target = 0.0;
  std::int64_t source_id = 0;
};

/// Counts of adjustments made while encoding.
struct EncodeReport {
  std::size_t encoded = 0;
  std::size_t clamped = 0;
  std::size_t unknown_levels = 0;
  std::vector<std::string> notes;

  std::string to_text() const {
    std::string out = "encoded: " + std::to_string(encoded) + "\nclamped: " + std::to_string(clamped) +
                      "\nunknown_levels: " + std::to_string(unknown_levels) + "\n";
    for (const auto& n : notes) out += "note: " + n + "\n";
    return out;
  }
};

/// Maps feature attributes to a fixed-width vector: categoricals one-hot,
/// numerics min-max scaled to [0,1] with ranges frozen at fit time.
class Encoder {
public:
  struct Column {
    std::string name;
    std::size_t attribute = 0;  // position in the schema
    bool categorical = false;
    std::vector<std::string> vocabulary;
    double lo = 0.0, hi = 1.0;
  };

  Encoder() = default;

  /// Ranges observed on `records` (the training split).
  static Encoder fit(const Schema& schema, std::span<const ExecutionRecord> records) {
    Encoder enc = layout(schema);
    for (auto& c : enc.columns_) {
      if (c.categorical) continue;
      if (records.empty()) throw Error("cannot fit encoder ranges on an empty record set");
      c.lo = c.hi = records.front().value[c.attribute];
      for (const auto& r : records) {
        c.lo = std::min(c.lo, r.value[c.attribute]);
        c.hi = std::max(c.hi, r.value[c.attribute]);
      }
    }
    return enc;
  }

  static Encoder fit(const Dataset& data) { return fit(data.schema, data.records); }

  /// Ranges declared by the schema; every numeric feature needs min and max.
  static Encoder from_schema(const Schema& schema) {
    Encoder enc = layout(schema);
    for (auto& c : enc.columns_) {
      if (c.categorical) continue;
      const auto& a = schema[c.attribute];
      if (!a.min || !a.max) throw SchemaError("attribute '" + a.name + "' has no declared range");
      c.lo = *a.min;
      c.hi = *a.max;
    }
    return enc;
  }

  std::size_t width() const { return width_; }
  const std::vector<Column>& columns() const { return columns_; }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_) {
      if (c.categorical)
        for (const auto& v : c.vocabulary) out.push_back(c.name + "=" + v);
      else
        out.push_back(c.name);
    }
    return out;
  }

  /// Throws unless `schema` has the attributes this encoder was built from at
  /// the same positions.
  void check_compatible(const Schema& schema) const {
    for (const auto& c : columns_) {
      if (c.attribute >= schema.size() || schema[c.attribute].name != c.name)
        throw SchemaError("schema does not match the model encoder (attribute '" + c.name + "')");
      if (c.categorical && schema[c.attribute].vocabulary != c.vocabulary)
        throw SchemaError("vocabulary of '" + c.name + "' differs from the model encoder");
    }
  }

  /// Unknown categorical levels encode as an all-zero group; out-of-range
  /// numerics are clamped. Both are counted in `report` when given.
  EncodedInstance encode(const ExecutionRecord& rec, EncodeReport* report = nullptr) const {
    EncodedInstance out;
    out.features.reserve(width_);
    out.target = rec.exe_time;
    out.source_id = rec.id;
    for (const auto& c : columns_) {
      const double v = rec.value.at(c.attribute);
      if (c.categorical) {
        const std::size_t base = out.features.size();
        out.features.resize(base + c.vocabulary.size(), 0.0);
        if (v >= 0.0 && v < static_cast<double>(c.vocabulary.size())) {
          out.features[base + static_cast<std::size_t>(v)] = 1.0;
        } else if (report) {
          ++report->unknown_levels;
          report->notes.push_back("id " + std::to_string(rec.id) + ": unknown level '" + rec.text[c.attribute] +
                                  "' for " + c.name);
        }
        continue;
      }
      double scaled = c.hi > c.lo ? (v - c.lo) / (c.hi - c.lo) : 0.0;
      if (scaled < 0.0 || scaled > 1.0 || (c.hi <= c.lo && v != c.lo)) {
        scaled = std::clamp(scaled, 0.0, 1.0);
        if (report) {
          ++report->clamped;
          report->notes.push_back("id " + std::to_string(rec.id) + ": " + c.name + "=" + rec.text[c.attribute] +
                                  " clamped to fitted range");
        }
      }
      out.features.push_back(scaled);
    }
    if (report) ++report->encoded;
    return out;
  }

  std::vector<EncodedInstance> encode_all(std::span<const ExecutionRecord> records,
                                          EncodeReport* report = nullptr) const {
    std::vector<EncodedInstance> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(encode(r, report));
    return out;
  }

  std::vector<EncodedInstance> encode_all(const Dataset& data, EncodeReport* report = nullptr) const {
    return encode_all(data.records, report);
  }

  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns_) {
      nlohmann::json j{{"name", c.name}, {"attribute", c.attribute}};
      if (c.categorical) {
        j["vocabulary"] = c.vocabulary;
      } else {
        j["lo"] = c.lo;
        j["hi"] = c.hi;
      }
      cols.push_back(std::move(j));
    }
    return {{"columns", cols}};
  }

  static Encoder from_json(const nlohmann::json& j) {
    Encoder enc;
    for (const auto& jc : j.at("columns")) {
      Column c;
      c.name = jc.at("name").get<std::string>();
      c.attribute = jc.at("attribute").get<std::size_t>();
      if (jc.contains("vocabulary")) {
        c.categorical = true;
        c.vocabulary = jc.at("vocabulary").get<std::vector<std::string>>();
        enc.width_ += c.vocabulary.size();
      } else {
        c.lo = jc.at("lo").get<double>();
        c.hi = jc.at("hi").get<double>();
        enc.width_ += 1;
      }
      enc.columns_.push_back(std::move(c));
    }
    return enc;
  }

private:
  static Encoder layout(const Schema& schema) {
    Encoder enc;
    for (auto i : schema.feature_indices()) {
      const auto& a = schema[i];
      Column c;
      c.name = a.name;
      c.attribute = i;
      c.categorical = a.kind == AttributeKind::categorical;
      if (c.categorical) c.vocabulary = a.vocabulary;
      enc.width_ += c.categorical ? c.vocabulary.size() : 1;
      enc.columns_.push_back(std::move(c));
    }
    if (enc.width_ == 0) throw SchemaError("schema has no feature attributes");
    return enc;
  }

  std::vector<Column> columns_;
  std::size_t width_ = 0;
};

} // namespace perfml
