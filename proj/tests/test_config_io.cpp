#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dimer/cli.hpp"
#include "dimer/errors.hpp"
#include "dimer/io.hpp"

using namespace dimer;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "dimer_config_io_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("format_value round trips doubles through text") {
  for (double v : {1.0 / 3.0, 0.1, -0.25, 12345.678901234567, 1e308, 5e-324,
                   2.5, 0.0, -17.0, 0.2886751345948129}) {
    const std::string text = format_value(v);
    const double back = std::strtod(text.c_str(), nullptr);
    CHECK(back == v);
  }
  CHECK(format_value(std::nan("")) == "nan");
  CHECK(format_value(2.0) == "2");
  CHECK(format_value(-0.5) == "-0.5");
  // Stable across calls: the same bits always print the same bytes.
  CHECK(format_value(1.0 / 3.0) == format_value(1.0 / 3.0));
}

TEST_CASE("table writer emits comments, header, and rows verbatim") {
  const fs::path path = scratch_dir() / "table.csv";
  {
    TableWriter table(path.string());
    table.comment("alpha beta");
    table.columns({"x", "y"});
    table.row({1.5, 2.25});
    table.row_text({"a", "b"});
    table.close();
  }
  CHECK(slurp(path) == "# alpha beta\nx,y\n1.5,2.25\na,b\n");
}

TEST_CASE("table writer enforces the declared width") {
  const fs::path path = scratch_dir() / "bad_table.csv";
  TableWriter table(path.string());
  table.columns({"x", "y", "z"});
  CHECK_THROWS_AS(table.row({1.0}), ConfigError);
  CHECK_THROWS_AS(table.row_text({"a", "b", "c", "d"}), ConfigError);
}

TEST_CASE("unwritable table paths are reported") {
  CHECK_THROWS_AS(TableWriter("/nonexistent_dir_9Qq/table.csv"), ConfigError);
}

TEST_CASE("write_text_file stores exact bytes") {
  const fs::path path = scratch_dir() / "note.txt";
  write_text_file(path.string(), "line one\nline two\n");
  CHECK(slurp(path) == "line one\nline two\n");
}

TEST_CASE("timestamps are ISO 8601 UTC") {
  const std::string ts = utc_timestamp();
  REQUIRE(ts.size() == 20);
  CHECK(ts[4] == '-');
  CHECK(ts[7] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts[13] == ':');
  CHECK(ts[16] == ':');
  CHECK(ts[19] == 'Z');
}

TEST_CASE("command line flags land in the run configuration") {
  const auto parsed = parse_cli({"sweep", "--e1", "0.25", "--e2", "-0.125",
                                 "--engine", "numeric", "--workers", "3",
                                 "--n-max", "6", "--weighting", "unnormalized",
                                 "--out", "results"});
  CHECK(parsed.exit_code == -1);
  CHECK(parsed.subcommand == "sweep");
  CHECK(parsed.config.system.e1 == 0.25);
  CHECK(parsed.config.system.e2 == -0.125);
  CHECK(parsed.config.engine == Engine::numeric);
  CHECK(parsed.config.workers == 3);
  CHECK(parsed.config.n_max == 6);
  CHECK(parsed.config.weighting == DriveWeighting::unnormalized);
  CHECK(parsed.config.out_dir == "results");
}

TEST_CASE("defaults fill everything the command line leaves unset") {
  const auto parsed = parse_cli({"track"});
  CHECK(parsed.exit_code == -1);
  CHECK(parsed.subcommand == "track");
  const RunConfig& cfg = parsed.config;
  CHECK(cfg.system.e1 == 0.2886751345948129);
  CHECK(cfg.system.e2 == -0.2886751345948129);
  CHECK(cfg.system.u == 0.06158402871356008);
  CHECK(cfg.system.j == 2.5);
  CHECK(cfg.system.gamma1 == 0.4);
  CHECK(cfg.system.gamma2 == 0.0);
  CHECK(cfg.engine == Engine::analytic);
  CHECK(cfg.n_max == 5);
  CHECK(cfg.target_n_out == 1e-3);
  REQUIRE(cfg.dephasing_rates.size() == 2);
  CHECK(cfg.dephasing_rates[0] == 0.0);
  CHECK(cfg.dephasing_rates[1] == doctest::Approx(0.006158402871356008));
}

TEST_CASE("shared linewidth options update both cavities") {
  auto parsed = parse_cli({"sweep", "--gamma-tot", "2"});
  CHECK(parsed.config.system.gamma_tot1 == 2.0);
  CHECK(parsed.config.system.gamma_tot2 == 2.0);

  parsed = parse_cli({"sweep", "--gamma-tot2", "0.5",
                      "--allow-unequal-linewidths"});
  CHECK(parsed.config.system.gamma_tot1 == 1.0);
  CHECK(parsed.config.system.gamma_tot2 == 0.5);
  CHECK(parsed.config.system.allow_unequal_linewidths);
}

TEST_CASE("the subcommand is found anywhere among the tokens") {
  CHECK(parse_cli({"--workers", "2", "sweep"}).subcommand == "sweep");
  CHECK(parse_cli({"--engine=numeric", "delta-scan"}).subcommand ==
        "delta-scan");
  CHECK(parse_cli({"--allow-unequal-linewidths", "track"}).subcommand ==
        "track");
}

TEST_CASE("scan rate lists parse from the command line") {
  const auto parsed = parse_cli({"dephasing-scan", "--rates", "0", "0.02"});
  REQUIRE(parsed.config.dephasing_rates.size() == 2);
  CHECK(parsed.config.dephasing_rates[0] == 0.0);
  CHECK(parsed.config.dephasing_rates[1] == 0.02);
}

TEST_CASE("invalid values are rejected with a usage error") {
  CHECK(parse_cli({"sweep", "--engine", "magic"}).exit_code == 2);
  CHECK(parse_cli({"sweep", "--n-max", "0"}).exit_code == 2);
  CHECK(parse_cli({"sweep", "--workers", "-1"}).exit_code == 2);
  CHECK(parse_cli({"sweep", "--target-nout", "-0.5"}).exit_code == 2);
  CHECK(parse_cli({"sweep", "--no-such-flag"}).exit_code == 2);
  CHECK(parse_cli({"sweep", "--config", "/no/such/file.ini"}).exit_code == 2);
}

TEST_CASE("help and version short-circuit with success") {
  CHECK(parse_cli({"--help"}).exit_code == 0);
  CHECK(parse_cli({"sweep", "--help"}).exit_code == 0);
  CHECK(parse_cli({"--version"}).exit_code == 0);
}

TEST_CASE("the resolved configuration echo is reparse-stable") {
  const std::vector<std::string> args{"sweep",      "--e1",     "0.3",
                                      "--e2",       "-0.7",     "--engine",
                                      "numeric",    "--workers", "2",
                                      "--e1-count", "21"};
  const auto first = parse_cli(args);
  REQUIRE(first.exit_code == -1);
  REQUIRE_FALSE(first.resolved.empty());

  const fs::path path = scratch_dir() / "echo.ini";
  write_text_file(path.string(), first.resolved);
  const auto second = parse_cli({"sweep", "--config", path.string()});
  REQUIRE(second.exit_code == -1);

  CHECK(second.resolved == first.resolved);
  CHECK(second.config.system.e1 == first.config.system.e1);
  CHECK(second.config.system.e2 == first.config.system.e2);
  CHECK(second.config.engine == Engine::numeric);
  CHECK(second.config.workers == 2);
  CHECK(second.config.sweep_e1.count == 21);
  CHECK(second.config.sweep_e2.count == first.config.sweep_e2.count);
}

TEST_CASE("defaults round trip through the echo unchanged") {
  const auto base = parse_cli({"design"});
  REQUIRE(base.exit_code == -1);
  const fs::path path = scratch_dir() / "defaults.ini";
  write_text_file(path.string(), base.resolved);
  const auto again = parse_cli({"design", "--config", path.string()});
  REQUIRE(again.exit_code == -1);
  CHECK(again.resolved == base.resolved);
}

TEST_CASE("config files support sections and command-line precedence") {
  const fs::path path = scratch_dir() / "mixed.ini";
  write_text_file(path.string(),
                  "e1=0.5\ngamma2=0.04\nengine=numeric\n\n[sweep]\n"
                  "e1-count=31\ne2-count=31\n\n[delta-scan]\ncount=11\n");
  const auto parsed = parse_cli({"sweep", "--config", path.string(),
                                 "--engine", "analytic"});
  REQUIRE(parsed.exit_code == -1);
  CHECK(parsed.config.system.e1 == 0.5);
  CHECK(parsed.config.system.gamma2 == 0.04);
  CHECK(parsed.config.sweep_e1.count == 31);
  CHECK(parsed.config.delta_axis.count == 11);
  // Command-line tokens outrank file values.
  CHECK(parsed.config.engine == Engine::analytic);
}

TEST_CASE("rates parse from a config file list") {
  const fs::path path = scratch_dir() / "rates.ini";
  write_text_file(path.string(), "[dephasing-scan]\nrates=[0, 0.01, 0.05]\n");
  const auto parsed = parse_cli({"dephasing-scan", "--config", path.string()});
  REQUIRE(parsed.exit_code == -1);
  REQUIRE(parsed.config.dephasing_rates.size() == 3);
  CHECK(parsed.config.dephasing_rates[0] == 0.0);
  CHECK(parsed.config.dephasing_rates[1] == 0.01);
  CHECK(parsed.config.dephasing_rates[2] == 0.05);
}

TEST_CASE("unknown configuration keys are rejected") {
  const fs::path bad_key = scratch_dir() / "bad_key.ini";
  write_text_file(bad_key.string(), "e1=0.5\nnonsense=1\n");
  CHECK(parse_cli({"sweep", "--config", bad_key.string()}).exit_code == 2);

  const fs::path bad_section = scratch_dir() / "bad_section.ini";
  write_text_file(bad_section.string(), "[blasting]\npower=11\n");
  CHECK(parse_cli({"sweep", "--config", bad_section.string()}).exit_code == 2);
}
