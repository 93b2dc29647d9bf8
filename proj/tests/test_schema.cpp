#include "catch_amalgamated.hpp"

#include "support.hpp"

using namespace perfml;

TEST_CASE("hibench schema layout") {
  const auto s = Schema::hibench();
  CHECK(s.size() == 20);
  CHECK(s[s.target_index()].name == "exe_time");
  CHECK(s[s.id_index()].name == "id_exec");
  std::vector<std::string> features;
  for (auto i : s.feature_indices()) features.push_back(s[i].name);
  CHECK(features == std::vector<std::string>{"benchmark", "net", "disk", "bench_type", "maps", "iosf", "replicas",
                                             "iofilebuf", "comp", "blk_size", "datanodes", "vm_cores", "vm_ram",
                                             "hadoop_version"});
  CHECK(s[*s.index_of("benchmark")].vocabulary.size() == 8);
  CHECK(s[*s.index_of("comp")].vocabulary == std::vector<std::string>{"None", "BZIP2", "ZLIB", "Snappy"});
  CHECK(s[*s.index_of("validated")].role == AttributeRole::ignored);
  CHECK(s[*s.index_of("start_time")].role == AttributeRole::timestamp);
}

TEST_CASE("schema text round-trip") {
  const auto s = Schema::hibench();
  std::istringstream in(s.to_text());
  const auto back = Schema::parse(in);
  CHECK(back == s);
  CHECK(back.to_text() == s.to_text());
}

TEST_CASE("schema file with comments and blank lines") {
  std::istringstream in(
      "# test\n\nname=id kind=integer role=identity\nname=t kind=real role=target min=0\n"
      "name=c kind=categorical role=feature vocabulary=a,b\nname=x kind=integer role=feature min=1 max=4\n");
  const auto s = Schema::parse(in);
  CHECK(s.size() == 4);
  CHECK(s[3].min == 1.0);
  CHECK(s[3].max == 4.0);
  CHECK(s[2].level("b") == 1);
  CHECK(s[2].level("z") == -1);
}

TEST_CASE("schema errors") {
  const auto parse = [](const std::string& t) {
    std::istringstream in(t);
    return Schema::parse(in);
  };
  const std::string base = "name=id kind=integer role=identity\nname=t kind=real role=target\n";
  CHECK_THROWS_AS(parse("name=id kind=integer role=identity\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=t kind=real role=feature\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=u kind=real role=target\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=c kind=categorical role=feature\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=x kind=wide role=feature\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=x kind=real role=feature min=3 max=1\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=x kind=timestamp role=feature\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=x kind=real\n"), SchemaError);
  CHECK_THROWS_AS(parse(base + "name=x kind=real role=feature colour=red\n"), SchemaError);
  CHECK_THROWS_AS(parse("name=t kind=real role=target\n"), SchemaError);
}
