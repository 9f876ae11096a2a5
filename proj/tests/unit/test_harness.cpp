#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polaron/config.hpp"
#include "polaron/errors.hpp"
#include "polaron/harness.hpp"

using namespace polaron;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "polaron_lab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(int(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("polaron_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json load(const fs::path& p) {
  std::ifstream is(p);
  return nlohmann::json::parse(is);
}

std::string text(const fs::path& p) {
  std::ifstream is(p);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("git blob hash") {
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  }

  TEST_CASE("default configuration hash is frozen") {
    CHECK(RunConfig::defaults().hash() == "3aca32e16f2e8d51e8410d1c52b41d3a6bf1be3c");
  }

  TEST_CASE("shipped default.ini matches the built-in defaults") {
    CHECK(RunConfig::from_file(POLARON_CONFIG_DIR "/default.ini").hash() == RunConfig::defaults().hash());
  }

  TEST_CASE("list spacing does not enter the hash") {
    RunConfig a = RunConfig::defaults(), b = a;
    b.set("mass.alpha", " 0 , 1,2,  4 ");
    CHECK(a.hash() == b.hash());
    b.set("mass.v", "0.001, 0.002");
    CHECK(b.str("mass.v") == "0.001,0.002");
  }

  TEST_CASE("output directory does not enter the hash") {
    RunConfig a = RunConfig::defaults(), b = a;
    b.set("run.out", "elsewhere");
    CHECK(a.hash() == b.hash());
    b.set("dynamics.T", "5");
    CHECK(a.hash() != b.hash());
  }

  TEST_CASE("unknown keys and bad values name the key") {
    RunConfig c = RunConfig::defaults();
    try {
      c.set("grid.M", "3");
      FAIL("no error");
    } catch (const ConfigError& e) {
      CHECK(e.key == "grid.M");
    }
    try {
      c.set("dynamics.dt", "fast");
      FAIL("no error");
    } catch (const ConfigError& e) {
      CHECK(e.key == "dynamics.dt");
    }
    CHECK_THROWS_AS(c.set("dynamics.initial", "moving"), ConfigError);
    CHECK_THROWS_AS(c.set_assignment("dynamics.T"), ConfigError);
    c.set("grid.L", "640");
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("INI files and manifests load the same configuration") {
    fs::path d = scratch("ini");
    std::ofstream(d / "c.ini") << "[dynamics]\nT = 2.5\nradii = 10, 20\n\n[mass]\nalpha = 1\n";
    RunConfig c = RunConfig::from_file((d / "c.ini").string());
    CHECK(c.real("dynamics.T") == 2.5);
    CHECK(c.reals("dynamics.radii") == std::vector<double>{10, 20});
    CHECK(c.reals("mass.alpha") == std::vector<double>{1});
    CHECK(c.is_auto("grid.L"));
    nlohmann::json m = {{"config", c.to_json()}};
    std::ofstream(d / "manifest.json") << m.dump();
    CHECK(RunConfig::from_file((d / "manifest.json").string()).hash() == c.hash());
    std::ofstream(d / "bad.ini") << "[dynamics]\nT = 2.5\n[oops\n";
    CHECK_THROWS_AS(RunConfig::from_file((d / "bad.ini").string()), ConfigError);
  }

  TEST_CASE("malformed configuration exits with status 2 and an error record") {
    fs::path d = scratch("malformed");
    std::ofstream(d / "c.ini") << "[grid]\nL = banana\n";
    CHECK(cli({"solve-pekar", (d / "c.ini").string(), "--out", (d / "out").string()}) == 2);
    nlohmann::json e = load(d / "out" / "error.json");
    CHECK(e["key"] == "grid.L");
    CHECK(e.contains("config_hash"));
  }

  TEST_CASE("usage errors exit with status 2") {
    fs::path d = scratch("usage");
    CHECK(cli({}) == 2);
    CHECK(cli({"solve-pekar", "--no-such-flag"}) == 2);
    CHECK(cli({"effective-mass", "--alpha", "", "--out", (d / "out").string()}) == 2);
    CHECK(load(d / "out" / "error.json")["key"] == "mass.alpha");
    CHECK(cli({"simulate", "--coupling-scale", "2", "--out", (d / "out2").string()}) == 2);
  }

  TEST_CASE("coupling scale run writes radial artifacts and one manifest") {
    fs::path d = scratch("scale");
    CHECK(cli({"solve-pekar", "--coupling-scale", "2", "--set", "pekar.snapshots=off", "--out", d.string()}) == 0);
    nlohmann::json p = load(d / "pekar.json");
    CHECK(p["scaling_ratio"].get<double>() == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(p["mu_over_e"].get<double>() == doctest::Approx(3.0).epsilon(1e-5));
    nlohmann::json m = load(d / "manifest.json");
    CHECK(m["status"] == "passed");
    const std::string hash = m["config_hash"];
    CHECK(p["config_hash"] == hash);
    CHECK(load(d / "radial.json")["config_hash"] == hash);
    int manifests = 0;
    for (auto& e : fs::directory_iterator(d)) manifests += e.path().filename() == "manifest.json";
    CHECK(manifests == 1);
    CHECK(text(d / "radial.csv").rfind("r,u\n", 0) == 0);
  }

  TEST_CASE("replaying a manifest reproduces the CSV byte for byte") {
    fs::path d = scratch("replay");
    const std::vector<std::string> common = {"--set", "dynamics.T=0.2",  "--set", "dynamics.cadence=5",
                                             "--dt",  "0.01",            "--set", "dynamics.initial=trial",
                                             "--set", "dynamics.v=0.002"};
    std::vector<std::string> first = {"simulate", "--out", (d / "a").string()};
    first.insert(first.end(), common.begin(), common.end());
    CHECK(cli(first) == 0);
    CHECK(cli({"simulate", (d / "a" / "manifest.json").string(), "--out", (d / "b").string()}) == 0);
    const std::string a = text(d / "a" / "series.csv"), b = text(d / "b" / "series.csv");
    CHECK(!a.empty());
    CHECK(a == b);
    CHECK(load(d / "a" / "manifest.json")["config_hash"] == load(d / "b" / "manifest.json")["config_hash"]);
  }
}
