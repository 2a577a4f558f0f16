#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "rcm/io.hpp"
#include "rcm/runner.hpp"

using namespace rcm;

namespace {

namespace fs = std::filesystem;

nlohmann::json doubling_cfg(const std::string& name) {
  return nlohmann::json{
      {"name", name},
      {"seed", 123},
      {"grid", 1024},
      {"alpha", 0.5},
      {"ensemble", {{"atoms", {{{"weight", 1.0}, {"kind", "linear"}, {"d", 2}, {"c", 0.0}}}}}},
      {"observable", {{"components", {{{"cos", {1.0}}}}}}}};
}

struct TmpDir {
  fs::path path;
  TmpDir() {
    path = fs::temp_directory_path() / ("rcm_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TmpDir() { std::error_code ec; fs::remove_all(path, ec); }
};

}  // namespace

TEST_CASE("config validation: missing fields carry schema paths") {
  CHECK_THROWS_WITH_AS(config_from_json(nlohmann::json{{"name", "x"}}),
                       doctest::Contains("/seed"), ConfigError);
  nlohmann::json bad = doubling_cfg("x");
  bad["grid"] = 1000;  // not a power of two
  CHECK_THROWS_WITH_AS(config_from_json(bad), doctest::Contains("/grid"), ConfigError);
  nlohmann::json bad2 = doubling_cfg("x");
  bad2["ensemble"] = nlohmann::json::object();
  CHECK_THROWS_WITH_AS(config_from_json(bad2), doctest::Contains("/ensemble"), ConfigError);

  const ExperimentConfig cfg = config_from_json(doubling_cfg("x"));
  CHECK(cfg.num("not_there", 2.5) == 2.5);  // missing keys fall back to defaults
  nlohmann::json bad3 = doubling_cfg("x");
  bad3["horizon"] = "fifty";
  CHECK_THROWS_WITH_AS(config_from_json(bad3).count("horizon", 1),
                       doctest::Contains("/horizon"), ConfigError);
}

TEST_CASE("config loading applies overrides") {
  TmpDir tmp;
  const auto p = (tmp.path / "cfg.json").string();
  write_file(p, doubling_cfg("ov").dump());
  const auto cfg = load_config(p, {"seed=999", "grid=512"});
  CHECK(cfg.seed == 999);
  CHECK(cfg.grid == 512);
}

TEST_CASE("covariance subcommand produces 0.5 on the doubling benchmark") {
  TmpDir tmp;
  auto j = doubling_cfg("cov");
  j["n"] = 512;
  j["batches"] = 512;
  const int rc = run_subcommand("covariance", config_from_json(j), tmp.path.string(), 1);
  CHECK(rc == 0);
  const auto out = nlohmann::json::parse(
      read_file((tmp.path / "covariance" / "cov" / "summary.json").string()));
  CHECK(std::fabs(out.at("sigma2_series").at(0).get<double>() - 0.5) < 1e-8);
  CHECK(fs::exists(tmp.path / "covariance" / "cov" / "data.csv"));
  CHECK(fs::exists(tmp.path / "covariance" / "cov" / "manifest.json"));
}

TEST_CASE("subcommand outputs are byte-identical across reruns") {
  TmpDir t1, t2;
  auto j = doubling_cfg("det");
  j["n_max"] = 6;
  j["samples"] = 20000;
  CHECK(run_subcommand("correlation", config_from_json(j), t1.path.string(), 1) == 0);
  CHECK(run_subcommand("correlation", config_from_json(j), t2.path.string(), 2) == 0);
  const auto a = read_file((t1.path / "correlation" / "det" / "data.csv").string());
  const auto b = read_file((t2.path / "correlation" / "det" / "data.csv").string());
  CHECK(a == b);
  const auto sa = read_file((t1.path / "correlation" / "det" / "summary.json").string());
  const auto sb = read_file((t2.path / "correlation" / "det" / "summary.json").string());
  CHECK(sa == sb);
}

TEST_CASE("moments subcommand and manifest content") {
  TmpDir tmp;
  const int rc = run_subcommand("moments", config_from_json(doubling_cfg("m")),
                                tmp.path.string(), 1);
  CHECK(rc == 0);
  const auto man = nlohmann::json::parse(
      read_file((tmp.path / "moments" / "m" / "manifest.json").string()));
  CHECK(man.at("code_version").get<std::string>() == kCodeVersion);
  CHECK(man.at("summary").at("pass").get<bool>());
  CHECK(man.at("config_hash").get<std::string>().size() == 16);
}

TEST_CASE("report aggregates manifests, failures first") {
  TmpDir tmp;
  CHECK(report_dir(tmp.path.string()) ==
        "(no manifests found under " + tmp.path.string() + ")\n");
  run_subcommand("moments", config_from_json(doubling_cfg("good")), tmp.path.string(), 1);
  // a failing run: ensemble violating the standing assumption
  nlohmann::json bad = doubling_cfg("bad");
  bad["ensemble"] = {{"atoms", {{{"weight", 1.0}, {"kind", "diffeo"}, {"a", 0.5}, {"c", 0.0}}}}};
  const int rc = run_subcommand("moments", config_from_json(bad), tmp.path.string(), 1);
  CHECK(rc == 1);
  const std::string rep = report_dir(tmp.path.string());
  const auto fail_pos = rep.find("FAIL");
  const auto pass_pos = rep.find("PASS");
  REQUIRE(fail_pos != std::string::npos);
  REQUIRE(pass_pos != std::string::npos);
  CHECK(fail_pos < pass_pos);
}

TEST_CASE("rde-tail subcommand with an explicit law") {
  TmpDir tmp;
  nlohmann::json j{{"name", "rde"},
                   {"seed", 5},
                   {"K_rde", 4.0},
                   {"ell", 8.0},
                   {"n_max", 40},
                   {"samples", 20000},
                   {"rde_law",
                    {{{"weight", 0.5}, {"A", 0.25}, {"B", 0.5}},
                     {{"weight", 0.5}, {"A", 0.75}, {"B", 1.5}}}}};
  const int rc = run_subcommand("rde-tail", config_from_json(j), tmp.path.string(), 1);
  CHECK(rc == 0);
  const auto out = nlohmann::json::parse(
      read_file((tmp.path / "rde-tail" / "rde" / "summary.json").string()));
  CHECK(out.at("q").get<double>() == doctest::Approx(5.0 / 6.0));
  CHECK(!out.at("violation").get<bool>());
}
