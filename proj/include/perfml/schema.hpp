#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "perfml/error.hpp"
#include "perfml/text.hpp"

namespace perfml {

enum class AttributeKind { categorical, integer, real, timestamp };
enum class AttributeRole { feature, target, identity, timestamp, ignored };

inline std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::categorical: return "categorical";
    case AttributeKind::integer: return "integer";
    case AttributeKind::real: return "real";
    case AttributeKind::timestamp: return "timestamp";
  }
  return "?";
}

inline std::string_view to_string(AttributeRole role) {
  switch (role) {
    case AttributeRole::feature: return "feature";
    case AttributeRole::target: return "target";
    case AttributeRole::identity: return "identity";
    case AttributeRole::timestamp: return "timestamp";
    case AttributeRole::ignored: return "ignored";
  }
  return "?";
}

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::real;
  AttributeRole role = AttributeRole::feature;
  std::vector<std::string> vocabulary;  // categorical only
  std::optional<double> min;            // numeric only, inclusive
  std::optional<double> max;

  bool numeric() const { return kind == AttributeKind::integer || kind == AttributeKind::real; }

  /// Level index of a categorical value, or -1 when not in the vocabulary.
  int level(std::string_view value) const {
    const auto it = std::find(vocabulary.begin(), vocabulary.end(), value);
    return it == vocabulary.end() ? -1 : static_cast<int>(it - vocabulary.begin());
  }

  bool in_range(double v) const { return (!min || v >= *min) && (!max || v <= *max); }
};

/// Declares the columns of an execution log and how each is used.
///
/// Exactly one numeric attribute carries the target role; the first identity
/// attribute must be an integer and provides the record id. Attributes with
/// identity, timestamp or ignored roles never reach the encoder.
class Schema {
public:
  Schema() = default;

  explicit Schema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
    std::unordered_set<std::string> names;
    std::optional<std::size_t> target;
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      const auto& a = attributes_[i];
      if (a.name.empty()) throw SchemaError("attribute with empty name");
      if (!names.insert(a.name).second) throw SchemaError("duplicate attribute '" + a.name + "'");
      if (a.kind == AttributeKind::categorical && a.vocabulary.empty())
        throw SchemaError("categorical attribute '" + a.name + "' has an empty vocabulary");
      if (a.min && a.max && *a.min > *a.max)
        throw SchemaError("attribute '" + a.name + "' has min > max");
      if (a.role == AttributeRole::target) {
        if (target) throw SchemaError("more than one target attribute ('" + attributes_[*target].name + "', '" + a.name + "')");
        if (!a.numeric()) throw SchemaError("target attribute '" + a.name + "' must be numeric");
        target = i;
      }
      if (a.role == AttributeRole::identity && !id_ && a.kind == AttributeKind::integer) id_ = i;
      if (a.role == AttributeRole::feature) {
        if (a.kind == AttributeKind::timestamp)
          throw SchemaError("timestamp attribute '" + a.name + "' cannot be a feature");
        features_.push_back(i);
      }
    }
    if (!target) throw SchemaError("schema declares no target attribute");
    if (!id_) throw SchemaError("schema declares no integer identity attribute");
    target_ = *target;
  }

  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t size() const { return attributes_.size(); }
  const Attribute& operator[](std::size_t i) const { return attributes_[i]; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i)
      if (attributes_[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t target_index() const { return target_; }
  std::size_t id_index() const { return *id_; }
  const std::vector<std::size_t>& feature_indices() const { return features_; }

  /// The execution-log layout with the configuration vocabulary of the
  /// HiBench-on-Hadoop corpus.
  static Schema hibench();

  /// Line-oriented key=value form, one attribute per line, e.g.
  ///   name=comp kind=categorical role=feature vocabulary=None,BZIP2,ZLIB,Snappy
  std::string to_text() const;
  static Schema parse(std::istream& in);
  static Schema load(const std::string& path) {
    std::istringstream in(text::read_file(path));
    return parse(in);
  }

  friend bool operator==(const Schema& a, const Schema& b) { return a.to_text() == b.to_text(); }

private:
  std::vector<Attribute> attributes_;
  std::vector<std::size_t> features_;
  std::size_t target_ = 0;
  std::optional<std::size_t> id_;
};

namespace detail {

inline Attribute categorical(std::string name, std::vector<std::string> vocab,
                             AttributeRole role = AttributeRole::feature) {
  return {std::move(name), AttributeKind::categorical, role, std::move(vocab), {}, {}};
}

inline Attribute numeric(std::string name, AttributeKind kind, std::optional<double> lo, std::optional<double> hi,
                         AttributeRole role = AttributeRole::feature) {
  return {std::move(name), kind, role, {}, lo, hi};
}

inline AttributeKind parse_kind(std::string_view s) {
  if (s == "categorical") return AttributeKind::categorical;
  if (s == "integer") return AttributeKind::integer;
  if (s == "real") return AttributeKind::real;
  if (s == "timestamp") return AttributeKind::timestamp;
  throw SchemaError("unknown attribute kind '" + std::string(s) + "'");
}

inline AttributeRole parse_role(std::string_view s) {
  if (s == "feature") return AttributeRole::feature;
  if (s == "target") return AttributeRole::target;
  if (s == "identity") return AttributeRole::identity;
  if (s == "timestamp") return AttributeRole::timestamp;
  if (s == "ignored") return AttributeRole::ignored;
  throw SchemaError("unknown attribute role '" + std::string(s) + "'");
}

} // namespace detail

inline Schema Schema::hibench() {
  using detail::categorical;
  using detail::numeric;
  using K = AttributeKind;
  using R = AttributeRole;
  return Schema({
      numeric("id_exec", K::integer, 0, {}, R::identity),
      numeric("id_cluster", K::integer, 0, {}, R::identity),
      categorical("benchmark", {"bayes", "terasort", "sort", "wordcount", "kmeans", "pagerank", "dfsioe_read",
                                "dfsioe_write"}),
      numeric("exe_time", K::real, {}, {}, R::target),
      {"start_time", K::timestamp, R::timestamp, {}, {}, {}},
      {"end_time", K::timestamp, R::timestamp, {}, {}, {}},
      categorical("net", {"ETH", "IB"}),
      categorical("disk", {"SSD", "HDD", "RL1", "RL2", "RL3"}),
      categorical("bench_type", {"HiBench"}),
      numeric("maps", K::integer, 2, 32),
      numeric("iosf", K::integer, 1, 100),
      numeric("replicas", K::integer, 1, 3),
      numeric("iofilebuf", K::integer, 1024, 262144),
      categorical("comp", {"None", "BZIP2", "ZLIB", "Snappy"}),
      numeric("blk_size", K::integer, 32, 256),
      numeric("datanodes", K::integer, 1, 64),
      numeric("vm_cores", K::integer, 1, 32),
      numeric("vm_ram", K::real, 1, 256),
      numeric("validated", K::integer, 0, 1, R::ignored),
      categorical("hadoop_version", {"1", "2"}),
  });
}

inline std::string Schema::to_text() const {
  std::ostringstream out;
  out << "# perfml schema v1\n";
  for (const auto& a : attributes_) {
    out << "name=" << a.name << " kind=" << to_string(a.kind) << " role=" << to_string(a.role);
    if (!a.vocabulary.empty()) out << " vocabulary=" << text::join(a.vocabulary, ",");
    if (a.min) out << " min=" << text::format_double(*a.min);
    if (a.max) out << " max=" << text::format_double(*a.max);
    out << '\n';
  }
  return out.str();
}

inline Schema Schema::parse(std::istream& in) {
  std::vector<Attribute> attrs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    Attribute a;
    bool has_kind = false, has_role = false;
    std::istringstream tokens{std::string(body)};
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos)
        throw SchemaError("schema line " + std::to_string(line_no) + ": expected key=value, got '" + token + "'");
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "name") {
        a.name = value;
      } else if (key == "kind") {
        a.kind = detail::parse_kind(value);
        has_kind = true;
      } else if (key == "role") {
        a.role = detail::parse_role(value);
        has_role = true;
      } else if (key == "vocabulary") {
        a.vocabulary = text::split(value, ',');
      } else if (key == "min" || key == "max") {
        const auto v = text::parse_double(value);
        if (!v) throw SchemaError("schema line " + std::to_string(line_no) + ": bad number '" + value + "'");
        (key == "min" ? a.min : a.max) = *v;
      } else {
        throw SchemaError("schema line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
    }
    if (a.name.empty() || !has_kind || !has_role)
      throw SchemaError("schema line " + std::to_string(line_no) + ": name, kind and role are required");
    attrs.push_back(std::move(a));
  }
  return Schema(std::move(attrs));
}

} // namespace perfml
