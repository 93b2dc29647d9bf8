#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "perfml/perfml.hpp"

namespace support {

inline std::string data_path(const std::string& name) { return std::string(PERFML_TEST_DATA) + "/" + name; }

inline const std::string& header() {
  static const std::string h =
      "id_exec,id_cluster,benchmark,exe_time,start_time,end_time,net,disk,bench_type,maps,iosf,replicas,iofilebuf,"
      "comp,blk_size,datanodes,vm_cores,vm_ram,validated,hadoop_version";
  return h;
}

/// Cells of the logged-observation example, keyed by column name.
inline std::map<std::string, std::string> example_cells() {
  return {{"id_exec", "2"},         {"id_cluster", "3"},
          {"benchmark", "terasort"}, {"exe_time", "472.000"},
          {"start_time", "2014-08-27 13:43:22"}, {"end_time", "2014-08-27 13:51:14"},
          {"net", "ETH"},           {"disk", "HDD"},
          {"bench_type", "HiBench"}, {"maps", "8"},
          {"iosf", "10"},           {"replicas", "1"},
          {"iofilebuf", "65536"},   {"comp", "None"},
          {"blk_size", "64"},       {"datanodes", "9"},
          {"vm_cores", "10"},       {"vm_ram", "128"},
          {"validated", "1"},       {"hadoop_version", "1"}};
}

inline std::string row(const std::map<std::string, std::string>& cells) {
  const auto names = perfml::text::split(header(), ',');
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + cells.at(names[i]);
  return out;
}

/// One HiBench record: the example observation with some cells replaced.
inline perfml::ExecutionRecord record(const std::map<std::string, std::string>& overrides = {}) {
  auto cells = example_cells();
  for (const auto& [k, v] : overrides) cells[k] = v;
  std::istringstream in(header() + "\n" + row(cells) + "\n");
  auto parsed = perfml::parse_log(in, perfml::Schema::hibench());
  if (parsed.dataset.size() != 1) throw std::runtime_error("fixture row rejected: " + parsed.report.to_text());
  return parsed.dataset.records.front();
}

inline perfml::Dataset parse(const std::string& csv, const perfml::Schema& schema = perfml::Schema::hibench()) {
  std::istringstream in(csv);
  return perfml::parse_log(in, schema).dataset;
}

/// Encoded instances with ids 1..n.
inline std::vector<perfml::EncodedInstance> instances(const std::vector<std::vector<double>>& x,
                                                      const std::vector<double>& y) {
  std::vector<perfml::EncodedInstance> out;
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back({x[i], y[i], static_cast<std::int64_t>(i + 1)});
  return out;
}

/// Schema with an id, a target and the given real-valued features.
inline perfml::Schema numeric_schema(const std::vector<std::string>& features) {
  using perfml::AttributeKind;
  using perfml::AttributeRole;
  std::vector<perfml::Attribute> attrs{{"id", AttributeKind::integer, AttributeRole::identity, {}, {}, {}},
                                       {"y", AttributeKind::real, AttributeRole::target, {}, {}, {}}};
  for (const auto& f : features) attrs.push_back({f, AttributeKind::real, AttributeRole::feature, {}, {}, {}});
  return perfml::Schema(std::move(attrs));
}

/// Dataset over numeric_schema({"x0", ...}) from rows of feature values.
inline perfml::Dataset numeric_dataset(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < (x.empty() ? 0 : x.front().size()); ++j) names.push_back("x" + std::to_string(j));
  std::ostringstream csv;
  csv << "id,y";
  for (const auto& n : names) csv << ',' << n;
  csv << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) {
    csv << i + 1 << ',' << perfml::text::format_double(y[i]);
    for (double v : x[i]) csv << ',' << perfml::text::format_double(v);
    csv << '\n';
  }
  return parse(csv.str(), numeric_schema(names));
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("perfml_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline perfml::GeneratorSpec spec(std::uint64_t seed, std::size_t n = 200, double noise = 20.0) {
  perfml::GeneratorSpec s;
  s.laws = perfml::default_laws();
  s.n_records = n;
  s.noise_sigma = noise;
  s.seed = seed;
  return s;
}

} // namespace support
