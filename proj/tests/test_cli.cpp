#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dimer/cli.hpp"
#include "dimer/errors.hpp"

using namespace dimer;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dimer_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int count_data_rows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

// Runs the tool entry point with stdout/stderr captured.
struct RunOutcome {
  int code = 0;
  std::string out;
  std::string err;
};

RunOutcome run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  RunOutcome outcome;
  try {
    outcome.code = run_cli(args);
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  outcome.out = out.str();
  outcome.err = err.str();
  return outcome;
}

}  // namespace

TEST_CASE("a missing or unknown command is a usage error") {
  auto outcome = run({});
  CHECK(outcome.code == 2);
  CHECK(outcome.err.find("sweep") != std::string::npos);

  CHECK(run({"fly"}).code == 2);
  CHECK(run({"sweep", "--engine", "carrier-pigeon"}).code == 2);
}

TEST_CASE("help and version exit cleanly") {
  auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("sweep") != std::string::npos);
  CHECK(run({"sweep", "--help"}).code == 0);
  auto version = run({"--version"});
  CHECK(version.code == 0);
  CHECK(version.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("design reports the closed-form rule and the model optimum") {
  const fs::path dir = fresh_dir("design");
  auto outcome = run({"design", "--out", dir.string()});
  REQUIRE(outcome.code == 0);
  CHECK(outcome.out.find("E1 = 0.288675") != std::string::npos);
  CHECK(outcome.out.find("E2 = -0.288675") != std::string::npos);
  CHECK(outcome.out.find("U = 0.061584") != std::string::npos);

  REQUIRE(fs::exists(dir / "design.csv"));
  REQUIRE(fs::exists(dir / "design_manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "design_manifest.json"));
  CHECK(manifest.at("subcommand") == "design");
  CHECK(manifest.at("tool") == "kerr-dimer");
  CHECK(manifest.contains("resolved_config"));
  CHECK(manifest.contains("written_utc"));
  CHECK(count_data_rows(slurp(dir / "design.csv")) == 1);
}

TEST_CASE("sweep writes the landscape with units in the header") {
  const fs::path dir = fresh_dir("sweep");
  auto outcome = run({"sweep", "--out", dir.string(), "--e1-lo", "-1",
                      "--e1-hi", "1", "--e1-count", "21", "--e2-lo", "-1",
                      "--e2-hi", "1", "--e2-count", "21"});
  REQUIRE(outcome.code == 0);
  REQUIRE(fs::exists(dir / "sweep.csv"));
  REQUIRE(fs::exists(dir / "sweep_minima.csv"));
  REQUIRE(fs::exists(dir / "sweep_manifest.json"));

  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(count_data_rows(csv) == 441);
  CHECK(csv.find("# units:") != std::string::npos);
  CHECK(csv.find("e1,e2,g2_out,n_out") != std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(dir / "sweep_manifest.json"));
  CHECK(manifest.at("engine") == "analytic");
  CHECK(manifest.at("subcommand") == "sweep");
}

TEST_CASE("reruns are byte-identical apart from the manifest timestamp") {
  const fs::path dir = fresh_dir("rerun");
  const std::vector<std::string> args{
      "sweep",  "--e1-lo",    "-1.5", "--e1-hi", "1.5",      "--e1-count",
      "15",     "--e2-lo",    "-1.5", "--e2-hi", "1.5",      "--e2-count",
      "15",     "--gamma2",   "0.01", "--out",   dir.string()};
  REQUIRE(run(args).code == 0);
  const std::string csv_first = slurp(dir / "sweep.csv");
  const std::string minima_first = slurp(dir / "sweep_minima.csv");
  auto manifest_first = nlohmann::json::parse(slurp(dir / "sweep_manifest.json"));

  REQUIRE(run(args).code == 0);
  CHECK(slurp(dir / "sweep.csv") == csv_first);
  CHECK(slurp(dir / "sweep_minima.csv") == minima_first);

  auto manifest_second =
      nlohmann::json::parse(slurp(dir / "sweep_manifest.json"));
  manifest_first.erase("written_utc");
  manifest_second.erase("written_utc");
  CHECK(manifest_first == manifest_second);
}

TEST_CASE("an invalid grid is refused before any file is written") {
  const fs::path dir = fresh_dir("invalid_grid");
  auto outcome = run({"sweep", "--out", dir.string(), "--e1-count", "0"});
  CHECK(outcome.code == 2);
  CHECK(outcome.err.find("config error") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "sweep.csv"));
  CHECK_FALSE(fs::exists(dir / "sweep_manifest.json"));
}

TEST_CASE("a sweep where every cell fails is a numerical error") {
  const fs::path dir = fresh_dir("all_failed");
  // Decoupled lossless second cavity: no unique stationary state anywhere.
  auto outcome = run({"sweep", "--engine", "numeric", "--out", dir.string(),
                      "--j", "0", "--gamma2", "0", "--gamma-tot2", "0",
                      "--allow-unequal-linewidths", "--n-max", "2",
                      "--e1-count", "8", "--e2-count", "8"});
  CHECK(outcome.code == 3);
  CHECK(outcome.err.find("numerical failure") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "sweep.csv"));
}

TEST_CASE("numeric sweeps record solver health in the manifest") {
  const fs::path dir = fresh_dir("numeric_sweep");
  auto outcome = run({"sweep", "--engine", "numeric", "--n-max", "4", "--out",
                      dir.string(), "--e1-lo", "-0.6", "--e1-hi", "0.6",
                      "--e1-count", "8", "--e2-lo", "-0.6", "--e2-hi", "0.6",
                      "--e2-count", "8"});
  REQUIRE(outcome.code == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "sweep_manifest.json"));
  CHECK(manifest.at("engine") == "numeric");
  REQUIRE(manifest.contains("physicality"));
  CHECK(manifest.at("physicality").at("solves").get<long>() == 64);
  CHECK(manifest.at("physicality").at("max_residual").get<double>() <= 1e-9);
}

TEST_CASE("track follows the mixing schedule and calibrates each step") {
  const fs::path dir = fresh_dir("track");
  auto outcome = run({"track", "--ratio-max", "0.025", "--ratio-step",
                      "0.0125", "--out", dir.string()});
  REQUIRE(outcome.code == 0);
  REQUIRE(fs::exists(dir / "track.csv"));
  const std::string csv = slurp(dir / "track.csv");
  CHECK(count_data_rows(csv) == 3);
  CHECK(csv.find("ratio,e1,e2,") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir / "track_manifest.json"));
  CHECK(manifest.at("subcommand") == "track");
}

TEST_CASE("delta scan spans zero and reports its best point") {
  const fs::path dir = fresh_dir("delta");
  auto outcome = run({"delta-scan", "--lo", "-0.15", "--hi", "0.2", "--count",
                      "8", "--n-max", "4", "--gamma2", "0.04", "--out",
                      dir.string()});
  REQUIRE(outcome.code == 0);
  REQUIRE(fs::exists(dir / "delta_scan.csv"));
  CHECK(count_data_rows(slurp(dir / "delta_scan.csv")) == 8);

  // A window that misses zero is rejected as configuration, not numerics.
  const fs::path dir2 = fresh_dir("delta_bad");
  auto bad = run({"delta-scan", "--lo", "0.5", "--hi", "1.5", "--count", "8",
                  "--out", dir2.string()});
  CHECK(bad.code == 2);
  CHECK_FALSE(fs::exists(dir2 / "delta_scan.csv"));
}

TEST_CASE("dephasing scan writes one row per rate") {
  const fs::path dir = fresh_dir("dephasing");
  auto outcome = run({"dephasing-scan", "--rates", "0", "0.006", "--n-max",
                      "4", "--gamma2", "0.04", "--out", dir.string()});
  REQUIRE(outcome.code == 0);
  REQUIRE(fs::exists(dir / "dephasing_scan.csv"));
  CHECK(count_data_rows(slurp(dir / "dephasing_scan.csv")) == 2);
}

TEST_CASE("validate compares the closed forms against the solver") {
  const fs::path dir = fresh_dir("validate");
  auto outcome = run({"validate", "--resolution", "9", "--window", "0.8",
                      "--n-max", "4", "--mixing", "0.04", "--out",
                      dir.string()});
  REQUIRE(outcome.code == 0);
  CHECK(outcome.out.find("PASS") != std::string::npos);
  REQUIRE(fs::exists(dir / "validate.csv"));
  REQUIRE(fs::exists(dir / "validate_summary.csv"));
  CHECK(count_data_rows(slurp(dir / "validate.csv")) == 81);
  CHECK(count_data_rows(slurp(dir / "validate_summary.csv")) == 1);
  const std::string summary = slurp(dir / "validate_summary.csv");
  CHECK(summary.find("frac_exact_within_threshold") != std::string::npos);
}
