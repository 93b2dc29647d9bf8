#include "catch_amalgamated.hpp"

#include <fstream>
#include <set>

#include "support.hpp"

using namespace perfml;

namespace {

std::size_t data_lines(const std::string& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    if (!text::trim(line).empty()) ++n;
  return n - 1;  // header
}

} // namespace

TEST_CASE("logged observation example parses") {
  const auto r = support::record();
  const auto& s = Schema::hibench();
  CHECK(r.id == 2);
  CHECK(r.exe_time == 472.0);
  CHECK(r.value[*s.index_of("maps")] == 8.0);
  CHECK(r.value[*s.index_of("iosf")] == 10.0);
  CHECK(r.text[*s.index_of("comp")] == "None");
  CHECK(r.value[*s.index_of("disk")] == 1.0);
  CHECK(r.value[*s.index_of("end_time")] - r.value[*s.index_of("start_time")] == 472.0);
}

TEST_CASE("empty inputs") {
  const auto header_only = parse_log_file(support::data_path("header_only.csv"), Schema::hibench());
  CHECK(header_only.dataset.empty());
  CHECK(header_only.report.rows == 0);
  CHECK(header_only.report.rejected.empty());
  std::istringstream nothing("");
  const auto empty = parse_log(nothing, Schema::hibench());
  CHECK(empty.dataset.empty());
  CHECK(empty.report.rejected.empty());
}

TEST_CASE("unknown level rejects only its row") {
  const auto path = support::data_path("bad_level.csv");
  const auto parsed = parse_log_file(path, Schema::hibench());
  const auto lines = data_lines(path);
  CHECK(parsed.report.rows == lines);
  CHECK(parsed.report.accepted + parsed.report.rejected.size() == lines);
  REQUIRE(parsed.report.rejected.size() == 1);
  CHECK(parsed.report.accepted == 9);
  CHECK(parsed.report.rejected[0].line == 5);
  CHECK(parsed.report.rejected[0].reason.find("unknown level") != std::string::npos);
  CHECK(parsed.report.to_text().find("9 accepted, 1 rejected") != std::string::npos);

  const auto ok = parse_log_file(support::data_path("ten_rows.csv"), Schema::hibench());
  CHECK(ok.report.accepted == data_lines(support::data_path("ten_rows.csv")));
}

TEST_CASE("missing target column is fatal") {
  try {
    parse_log_file(support::data_path("missing_target.csv"), Schema::hibench());
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("exe_time") != std::string::npos);
  }
  ParseOptions lenient;
  lenient.require_target = false;
  const auto parsed = parse_log_file(support::data_path("missing_target.csv"), Schema::hibench(), lenient);
  CHECK(parsed.dataset.size() == 10);
  CHECK_FALSE(parsed.dataset.records[0].has_target());
}

TEST_CASE("row-level rejections") {
  auto cells = support::example_cells();
  std::string csv = support::header() + "\n" + support::row(cells) + "\n";
  const auto add = [&](std::map<std::string, std::string> over) {
    auto c = cells;
    for (auto& [k, v] : over) c[k] = v;
    csv += support::row(c) + "\n";
  };
  add({{"id_exec", "3"}, {"maps", "64"}});                                // out of range
  add({{"id_exec", "4"}, {"iosf", "ten"}});                               // not an integer
  add({{"id_exec", "5"}, {"exe_time", "-1"}});                            // non-positive target
  add({{"id_exec", "6"}, {"end_time", "2014-08-27 13:00:00"}});           // ends before it starts
  add({{"id_exec", "7"}, {"start_time", "2014-13-27 13:00:00"}});         // bad timestamp
  add({});                                                                 // duplicate id 2
  csv += "8,3,terasort\n";                                                 // short row
  std::istringstream in(csv);
  const auto parsed = parse_log(in, Schema::hibench());
  CHECK(parsed.dataset.size() == 1);
  REQUIRE(parsed.report.rejected.size() == 7);
  const std::vector<std::string> expected{"out of range", "non-integer", "non-positive", "end_time before",
                                          "bad timestamp", "duplicate id", "expected 20 fields"};
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(parsed.report.rejected[i].reason.find(expected[i]) != std::string::npos);
}

TEST_CASE("columns may come in any order and extra columns are ignored") {
  auto names = text::split(support::header(), ',');
  auto cells = support::example_cells();
  std::string head = "note", body = "hello";
  for (auto it = names.rbegin(); it != names.rend(); ++it) {
    head += "," + *it;
    body += "," + cells[*it];
  }
  std::istringstream in(head + "\n" + body + "\n");
  const auto parsed = parse_log(in, Schema::hibench());
  REQUIRE(parsed.dataset.size() == 1);
  CHECK(parsed.dataset.records[0].exe_time == 472.0);
  CHECK(parsed.report.notes.size() == 1);
}

TEST_CASE("dataset round-trip is byte identical") {
  const auto original = text::read_file(support::data_path("ten_rows.csv"));
  const auto parsed = parse_log_file(support::data_path("ten_rows.csv"), Schema::hibench());
  CHECK(to_csv(parsed.dataset) == original);
}

TEST_CASE("split sizes") {
  const auto a = split_indices(100, {0.5, 0.25, 0.25, 1});
  CHECK(a.train.size() == 50);
  CHECK(a.validation.size() == 25);
  CHECK(a.test.size() == 25);
  const auto b = split_indices(8, {0.375, 0.375, 0.25, 1});
  CHECK(b.train.size() == 3);
  CHECK(b.validation.size() == 3);
  CHECK(b.test.size() == 2);
  const auto c = split_indices(10, {0.5, 0.25, 0.25, 1});  // remainder to train
  CHECK(c.train.size() == 6);
  CHECK(c.validation.size() == 2);
  CHECK(c.test.size() == 2);
  CHECK_THROWS_AS(split_indices(2, {0.5, 0.25, 0.25, 1}), UsageError);
  CHECK_THROWS_AS(split_indices(10, {0.5, 0.5, 0.25, 1}), UsageError);
}

TEST_CASE("split is seeded") {
  const auto ids = [](const SplitIndices& s) {
    return std::vector<std::vector<std::size_t>>{s.train, s.validation, s.test};
  };
  const auto first = split_indices(100, {0.5, 0.25, 0.25, 1});
  CHECK(ids(split_indices(100, {0.5, 0.25, 0.25, 1})) == ids(first));
  int differ = 0;
  for (std::uint64_t seed = 2; seed <= 21; ++seed) differ += ids(split_indices(100, {0.5, 0.25, 0.25, seed})) != ids(first);
  CHECK(differ == 20);
}

TEST_CASE("split spec parsing") {
  const auto s = SplitSpec::parse("50/25/25", 3);
  CHECK(s.train == 0.5);
  CHECK(s.validation == 0.25);
  CHECK(s.seed == 3);
  const auto f = SplitSpec::parse("0.2/0.55/0.25", 1);
  CHECK(f.validation == 0.55);
  CHECK_THROWS_AS(SplitSpec::parse("50/50", 1), UsageError);
  CHECK_THROWS_AS(SplitSpec::parse("50/40/20", 1), UsageError);
  CHECK_THROWS_AS(SplitSpec::parse("a/b/c", 1), UsageError);
}

TEST_CASE("hamming distance examples") {
  const auto& s = Schema::hibench();
  const auto a = support::record();
  CHECK(hamming_distance(a, a, s) == 0);
  const auto b = support::record({{"comp", "Snappy"}});
  CHECK(hamming_distance(a, b, s) == 1);
  // non-feature columns never count
  const auto c = support::record({{"exe_time", "999"}, {"id_exec", "9"}, {"validated", "0"},
                                  {"start_time", "2015-01-01 00:00:00"}, {"end_time", "2015-01-01 01:00:00"}});
  CHECK(hamming_distance(a, c, s) == 0);

  const auto d = support::record({{"net", "IB"}, {"disk", "SSD"}, {"maps", "16"}});
  std::size_t oracle = 0;
  for (auto i : s.feature_indices()) oracle += a.text[i] != d.text[i];
  CHECK(oracle == 3);
  CHECK(hamming_distance(a, d, s) == oracle);
  CHECK(hamming_distance(d, a, s) == oracle);
}

TEST_CASE("timestamps") {
  CHECK(parse_timestamp("1970-01-01 00:00:00") == 0.0);
  CHECK(parse_timestamp("2014-08-27T13:43:22") == parse_timestamp("2014-08-27 13:43:22"));
  CHECK_FALSE(parse_timestamp("2014-02-30 00:00:00"));
  CHECK_FALSE(parse_timestamp("2014-08-27"));
  const auto t = static_cast<std::int64_t>(*parse_timestamp("2014-08-27 13:43:22"));
  CHECK(format_timestamp(t) == "2014-08-27 13:43:22");
}

TEST_CASE("subset and filter") {
  const auto data = parse_log_file(support::data_path("ten_rows.csv"), Schema::hibench()).dataset;
  const auto s = subset(data, {3, 1});
  CHECK(s.ids() == std::vector<std::int64_t>{5, 3});
  const auto f = filter(data, [](const ExecutionRecord& r) { return r.exe_time > 600; });
  const auto kept = f.ids();
  const std::set<std::int64_t> ids(kept.begin(), kept.end());
  CHECK(ids == std::set<std::int64_t>{4, 6, 7, 8});
}

TEST_CASE("prediction inputs may carry out-of-range values") {
  auto cells = support::example_cells();
  cells["maps"] = "64";
  std::istringstream in(support::header() + "\n" + support::row(cells) + "\n");
  ParseOptions opts;
  opts.allow_out_of_range = true;
  const auto parsed = parse_log(in, Schema::hibench(), opts);
  REQUIRE(parsed.dataset.size() == 1);
  CHECK(parsed.dataset.records[0].value[*parsed.dataset.schema.index_of("maps")] == 64.0);
}
