#include "dimer/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dimer/analytic.hpp"
#include "dimer/errors.hpp"
#include "dimer/inout.hpp"
#include "dimer/io.hpp"
#include "dimer/lindblad.hpp"
#include "dimer/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dimer {

RunConfig::RunConfig() {
  auto [e1, e2] = optimal_detunings(1.0);
  system.e1 = e1;
  system.e2 = e2;
  system.j = 2.5;
  system.u = optimal_nonlinearity(1.0, system.j);
  system.f = 0.01;
  system.gamma1 = 0.4;
  system.gamma2 = 0.0;
  dephasing_rates = {0.0, 0.1 * system.u};
}

ExploreOptions RunConfig::explore_options() const {
  ExploreOptions opts;
  opts.weighting = weighting;
  opts.n_max = n_max;
  opts.workers = workers;
  opts.target_n_out = target_n_out;
  return opts;
}

namespace {

const char* const kCommands[] = {"sweep",          "track",    "delta-scan",
                                 "dephasing-scan", "validate", "design"};

bool is_command(const std::string& token) {
  for (const char* name : kCommands) {
    if (token == name) return true;
  }
  return false;
}

// The experiment named on the command line. Options before it are skipped:
// everything except the known zero-argument flags consumes one value.
std::string scan_subcommand(const std::vector<std::string>& args) {
  static const std::set<std::string> zero_arg = {
      "--allow-unequal-linewidths", "--help", "-h", "--version"};
  for (size_t i = 0; i < args.size();) {
    const std::string& token = args[i];
    if (!token.empty() && token[0] == '-') {
      if (token.find('=') != std::string::npos || zero_arg.count(token)) {
        ++i;
      } else {
        i += 2;
      }
      continue;
    }
    return is_command(token) ? token : std::string();
  }
  return {};
}

std::string engine_label(Engine engine) {
  return engine == Engine::numeric ? "numeric" : "analytic";
}

std::string weighting_label(DriveWeighting weighting) {
  return weighting == DriveWeighting::unnormalized ? "unnormalized"
                                                   : "normalized";
}

std::string quoted_if_needed(const std::string& value) {
  if (value.find_first_of(" \t") == std::string::npos) return value;
  return "\"" + value + "\"";
}

// Canonical INI echo of the full configuration: every key explicit, one
// section per subcommand. Parsing this text reproduces the configuration
// exactly, and serializing again reproduces the text byte for byte.
std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  auto kv = [&out](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  auto kd = [&kv](const char* key, double value) {
    kv(key, format_value(value));
  };
  auto ki = [&kv](const char* key, int value) { kv(key, std::to_string(value)); };

  const SystemParams& s = cfg.system;
  kd("e1", s.e1);
  kd("e2", s.e2);
  kd("u", s.u);
  kd("j", s.j);
  kd("f", s.f);
  kd("gamma1", s.gamma1);
  kd("gamma2", s.gamma2);
  kd("gamma-tot", s.gamma_tot1);
  kd("gamma-tot2", s.gamma_tot2);
  kd("gamma-pd1", s.gamma_pd1);
  kd("gamma-pd2", s.gamma_pd2);
  kv("allow-unequal-linewidths", s.allow_unequal_linewidths ? "true" : "false");
  kv("weighting", weighting_label(cfg.weighting));
  kv("engine", engine_label(cfg.engine));
  ki("n-max", cfg.n_max);
  ki("workers", cfg.workers);
  kd("target-nout", cfg.target_n_out);
  kv("out", quoted_if_needed(cfg.out_dir));

  out += "\n[sweep]\n";
  kd("e1-lo", cfg.sweep_e1.lo);
  kd("e1-hi", cfg.sweep_e1.hi);
  ki("e1-count", cfg.sweep_e1.count);
  kd("e2-lo", cfg.sweep_e2.lo);
  kd("e2-hi", cfg.sweep_e2.hi);
  ki("e2-count", cfg.sweep_e2.count);

  out += "\n[track]\n";
  kd("ratio-max", cfg.track_ratio_max);
  kd("ratio-step", cfg.track_ratio_step);

  out += "\n[delta-scan]\n";
  kd("lo", cfg.delta_axis.lo);
  kd("hi", cfg.delta_axis.hi);
  ki("count", cfg.delta_axis.count);

  out += "\n[dephasing-scan]\n";
  std::string rates = "[";
  for (size_t i = 0; i < cfg.dephasing_rates.size(); ++i) {
    rates += (i ? ", " : "") + format_value(cfg.dephasing_rates[i]);
  }
  rates += "]";
  kv("rates", rates);

  out += "\n[validate]\n";
  kd("mixing", cfg.validate_mixing);
  ki("resolution", cfg.validate_resolution);
  kd("window", cfg.validate_window);

  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string sci3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory " + dir.string() + ": " +
                      ec.message());
  }
  return dir;
}

std::string params_comment(const RunConfig& cfg) {
  const SystemParams& s = cfg.system;
  std::string line = "params:";
  auto add = [&line](const char* key, double value) {
    line += ' ';
    line += key;
    line += '=';
    line += format_value(value);
  };
  add("e1", s.e1);
  add("e2", s.e2);
  add("u", s.u);
  add("j", s.j);
  add("f", s.f);
  add("gamma1", s.gamma1);
  add("gamma2", s.gamma2);
  add("gamma_tot1", s.gamma_tot1);
  add("gamma_tot2", s.gamma_tot2);
  add("gamma_pd1", s.gamma_pd1);
  add("gamma_pd2", s.gamma_pd2);
  line += " weighting=" + weighting_label(cfg.weighting);
  line += " n_max=" + std::to_string(cfg.n_max);
  return line;
}

std::string axis_comment(const char* name, const AxisSpec& axis) {
  return std::string(name) + ": " + std::to_string(axis.count) + " points in [" +
         format_value(axis.lo) + ", " + format_value(axis.hi) + "]";
}

const char* kUnitsComment =
    "units: energies and rates in units of gamma_tot1; g2 dimensionless";

json params_json(const SystemParams& s) {
  return json{{"e1", s.e1},
              {"e2", s.e2},
              {"u", s.u},
              {"j", s.j},
              {"f", s.f},
              {"gamma1", s.gamma1},
              {"gamma2", s.gamma2},
              {"gamma_tot1", s.gamma_tot1},
              {"gamma_tot2", s.gamma_tot2},
              {"gamma_pd1", s.gamma_pd1},
              {"gamma_pd2", s.gamma_pd2},
              {"allow_unequal_linewidths", s.allow_unequal_linewidths}};
}

json stats_json(const PhysicalityStats& stats) {
  return json{{"solves", stats.count},
              {"max_trace_dev", stats.max_trace_dev},
              {"max_herm_dev", stats.max_herm_dev},
              {"min_eigenvalue", stats.min_eigenvalue},
              {"max_residual", stats.max_residual}};
}

json base_manifest(const ParsedRun& run) {
  const RunConfig& cfg = run.config;
  json m;
  m["tool"] = "kerr-dimer";
  m["tool_version"] = "0.1.0";
  m["subcommand"] = run.subcommand;
  m["written_utc"] = utc_timestamp();
  m["resolved_config"] = run.resolved;
  m["parameters"] = params_json(cfg.system);
  m["weighting"] = weighting_label(cfg.weighting);
  m["engine"] = engine_label(cfg.engine);
  m["n_max"] = cfg.n_max;
  m["workers"] = cfg.workers;
  m["target_n_out"] = cfg.target_n_out;
  return m;
}

void write_manifest(const fs::path& dir, const std::string& name,
                    const json& manifest) {
  write_text_file(dir / name, manifest.dump(2) + "\n");
}

void run_sweep(const ParsedRun& run) {
  const RunConfig& cfg = run.config;
  ExploreOptions opts = cfg.explore_options();
  SweepGrid grid =
      sweep_detunings(cfg.system, cfg.sweep_e1, cfg.sweep_e2, cfg.engine, opts);
  if (!grid.g2.empty() && grid.failures.size() == grid.g2.size()) {
    throw NumericalError("every grid cell failed; first: " +
                         grid.failures.front());
  }

  std::vector<MinimumRecord> raw = find_local_minima(grid);
  std::vector<MinimumRecord> minima;
  std::string refine_failure;
  try {
    minima = refine_minima(cfg.system, raw, grid.engine, opts);
  } catch (const NumericalError& e) {
    refine_failure = e.what();
    minima = raw;
  }

  fs::path dir = ensure_out_dir(cfg);
  {
    TableWriter t(dir / "sweep.csv");
    t.comment("correlation landscape over the detuning window");
    t.comment("engine: " + engine_label(grid.engine));
    t.comment(axis_comment("e1", cfg.sweep_e1));
    t.comment(axis_comment("e2", cfg.sweep_e2));
    t.comment(params_comment(cfg));
    t.comment(kUnitsComment);
    t.columns({"e1", "e2", "g2_out", "n_out"});
    std::vector<double> e1v = cfg.sweep_e1.values();
    std::vector<double> e2v = cfg.sweep_e2.values();
    for (size_t i1 = 0; i1 < e1v.size(); ++i1) {
      for (size_t i2 = 0; i2 < e2v.size(); ++i2) {
        t.row({e1v[i1], e2v[i2], grid.g2_at(i1, i2), grid.n_out_at(i1, i2)});
      }
    }
    t.close();
  }
  {
    TableWriter t(dir / "sweep_minima.csv");
    t.comment("local landscape minima, ascending; refined=1 marks simplex-"
              "polished records, refined=0 raw grid cells");
    t.comment("engine: " + engine_label(grid.engine));
    t.comment(params_comment(cfg));
    t.comment(kUnitsComment);
    t.columns({"label", "e1", "e2", "g2", "refined", "seed_e1", "seed_e2",
               "seed_g2"});
    std::vector<double> e1v = cfg.sweep_e1.values();
    std::vector<double> e2v = cfg.sweep_e2.values();
    for (const MinimumRecord& m : minima) {
      t.row_text({m.label, format_value(m.e1), format_value(m.e2),
                  format_value(m.g2), m.refined ? "1" : "0",
                  format_value(e1v[static_cast<size_t>(m.seed_i)]),
                  format_value(e2v[static_cast<size_t>(m.seed_j)]),
                  format_value(m.seed_g2)});
    }
    t.close();
  }

  json m = base_manifest(run);
  m["engine"] = engine_label(grid.engine);
  m["grid"] = json{{"e1_lo", cfg.sweep_e1.lo},     {"e1_hi", cfg.sweep_e1.hi},
                   {"e1_count", cfg.sweep_e1.count}, {"e2_lo", cfg.sweep_e2.lo},
                   {"e2_hi", cfg.sweep_e2.hi},     {"e2_count", cfg.sweep_e2.count}};
  m["failed_cells"] = grid.failures;
  m["failed_cell_count"] = grid.failures.size();
  if (!refine_failure.empty()) m["refine_failure"] = refine_failure;
  json mins = json::array();
  for (const MinimumRecord& rec : minima) {
    mins.push_back(json{{"label", rec.label},
                        {"e1", rec.e1},
                        {"e2", rec.e2},
                        {"g2", rec.g2},
                        {"refined", rec.refined}});
  }
  m["minima"] = mins;
  if (grid.engine == Engine::numeric) m["physicality"] = stats_json(grid.stats);
  m["outputs"] = json::array({"sweep.csv", "sweep_minima.csv"});
  write_manifest(dir, "sweep_manifest.json", m);

  std::cout << "sweep: " << cfg.sweep_e1.count << "x" << cfg.sweep_e2.count
            << " cells, engine " << engine_label(grid.engine) << ", "
            << grid.failures.size() << " failed cells\n";
  for (const MinimumRecord& rec : minima) {
    std::cout << "  " << rec.label << ": g2 = " << sci3(rec.g2)
              << " at (e1, e2) = (" << fixed6(rec.e1) << ", " << fixed6(rec.e2)
              << ")" << (rec.refined ? "" : " [unrefined]") << "\n";
  }
  if (!refine_failure.empty()) {
    std::cout << "  refinement failed: " << refine_failure << "\n";
  }
  std::cout << "wrote " << (dir / "sweep.csv").string() << ", "
            << (dir / "sweep_minima.csv").string() << ", "
            << (dir / "sweep_manifest.json").string() << "\n";
}

void run_track(const ParsedRun& run) {
  const RunConfig& cfg = run.config;
  if (cfg.track_ratio_step <= 0.0 || cfg.track_ratio_max < 0.0) {
    throw ConfigError("track requires ratio-step > 0 and ratio-max >= 0");
  }
  std::vector<double> schedule;
  for (int i = 0;; ++i) {
    double r = i * cfg.track_ratio_step;
    if (r > cfg.track_ratio_max * (1.0 + 1e-12) + 1e-15) break;
    schedule.push_back(std::min(r, cfg.track_ratio_max));
  }
  TrackResult res = track_minimum(cfg.system, schedule, cfg.explore_options());

  fs::path dir = ensure_out_dir(cfg);
  {
    TableWriter t(dir / "track.csv");
    t.comment("minimum tracked from the unmixed optimum along the mixing "
              "schedule, pump recalibrated to the target occupation at every "
              "step");
    t.comment("origin: (e1, e2) = (" + format_value(res.origin_e1) + ", " +
              format_value(res.origin_e2) + ")");
    t.comment("target n_out: " + format_value(cfg.target_n_out));
    t.comment(params_comment(cfg));
    t.comment(kUnitsComment);
    t.columns({"ratio", "e1", "e2", "g2_analytic", "f_calibrated", "n_out",
               "g2_numeric", "calibration_iterations"});
    for (const TrackRecord& step : res.steps) {
      t.row({step.ratio, step.e1, step.e2, step.g2_analytic, step.f_calibrated,
             step.n_out, step.g2_numeric,
             static_cast<double>(step.calibration_iterations)});
    }
    t.close();
  }

  json m = base_manifest(run);
  m["schedule"] = json{{"ratio_max", cfg.track_ratio_max},
                       {"ratio_step", cfg.track_ratio_step},
                       {"steps", res.steps.size()}};
  m["origin"] = json{{"e1", res.origin_e1}, {"e2", res.origin_e2}};
  m["physicality"] = stats_json(res.stats);
  m["outputs"] = json::array({"track.csv"});
  write_manifest(dir, "track_manifest.json", m);

  const TrackRecord& first = res.steps.front();
  const TrackRecord& last = res.steps.back();
  std::cout << "track: " << res.steps.size() << " steps, ratio "
            << format_value(first.ratio) << " -> " << format_value(last.ratio)
            << "\n";
  std::cout << "  start: g2_numeric = " << sci3(first.g2_numeric)
            << " at (e1, e2) = (" << fixed6(first.e1) << ", "
            << fixed6(first.e2) << ")\n";
  std::cout << "  end:   g2_numeric = " << sci3(last.g2_numeric)
            << " at (e1, e2) = (" << fixed6(last.e1) << ", " << fixed6(last.e2)
            << ")\n";
  std::cout << "wrote " << (dir / "track.csv").string() << ", "
            << (dir / "track_manifest.json").string() << "\n";
}

void run_delta_scan(const ParsedRun& run) {
  const RunConfig& cfg = run.config;
  DeltaScan scan =
      scan_fixed_detuning(cfg.system, cfg.delta_axis, cfg.explore_options());
  if (scan.points.empty()) {
    std::string detail =
        scan.failures.empty() ? std::string() : ("; first: " + scan.failures.front());
    throw NumericalError("every scan point failed" + detail);
  }

  fs::path dir = ensure_out_dir(cfg);
  {
    TableWriter t(dir / "delta_scan.csv");
    t.comment("minimum over e1 at fixed detuning difference delta = e1 - e2, "
              "pump recalibrated at each optimum");
    t.comment(axis_comment("delta", cfg.delta_axis));
    t.comment("target n_out: " + format_value(cfg.target_n_out));
    t.comment(params_comment(cfg));
    t.comment(kUnitsComment);
    t.columns({"delta", "e1_opt", "g2_analytic", "f_calibrated", "n_out",
               "g2_numeric"});
    for (const DeltaScanRecord& p : scan.points) {
      t.row({p.delta, p.e1_opt, p.g2_analytic, p.f_calibrated, p.n_out,
             p.g2_numeric});
    }
    t.close();
  }

  const DeltaScanRecord* best = &scan.points.front();
  for (const DeltaScanRecord& p : scan.points) {
    if (p.g2_numeric < best->g2_numeric) best = &p;
  }

  json m = base_manifest(run);
  m["axis"] = json{{"lo", cfg.delta_axis.lo},
                   {"hi", cfg.delta_axis.hi},
                   {"count", cfg.delta_axis.count}};
  m["failures"] = scan.failures;
  m["failure_count"] = scan.failures.size();
  m["best"] = json{{"delta", best->delta}, {"g2_numeric", best->g2_numeric}};
  m["physicality"] = stats_json(scan.stats);
  m["outputs"] = json::array({"delta_scan.csv"});
  write_manifest(dir, "delta_scan_manifest.json", m);

  std::cout << "delta-scan: " << scan.points.size() << " points, "
            << scan.failures.size() << " failed\n";
  std::cout << "  best: g2_numeric = " << sci3(best->g2_numeric)
            << " at delta = " << fixed6(best->delta) << "\n";
  std::cout << "wrote " << (dir / "delta_scan.csv").string() << ", "
            << (dir / "delta_scan_manifest.json").string() << "\n";
}

void run_dephasing_scan(const ParsedRun& run) {
  const RunConfig& cfg = run.config;
  DephasingScan scan =
      scan_dephasing(cfg.system, cfg.dephasing_rates, cfg.explore_options());
  if (scan.points.empty()) {
    std::string detail =
        scan.failures.empty() ? std::string() : ("; first: " + scan.failures.front());
    throw NumericalError("every scan point failed" + detail);
  }

  fs::path dir = ensure_out_dir(cfg);
  {
    TableWriter t(dir / "dephasing_scan.csv");
    t.comment("re-optimized minimum for each symmetric pure-dephasing rate, "
              "pump recalibrated to the target occupation");
    t.comment("target n_out: " + format_value(cfg.target_n_out));
    t.comment(params_comment(cfg));
    t.comment(kUnitsComment);
    t.columns({"gamma_pd", "e1_opt", "e2_opt", "g2_min", "f_calibrated",
               "n_out"});
    for (const DephasingRecord& p : scan.points) {
      t.row({p.gamma_pd, p.e1_opt, p.e2_opt, p.g2_min, p.f_calibrated, p.n_out});
    }
    t.close();
  }

  json m = base_manifest(run);
  m["rates"] = cfg.dephasing_rates;
  m["failures"] = scan.failures;
  m["failure_count"] = scan.failures.size();
  m["physicality"] = stats_json(scan.stats);
  m["outputs"] = json::array({"dephasing_scan.csv"});
  write_manifest(dir, "dephasing_scan_manifest.json", m);

  std::cout << "dephasing-scan: " << scan.points.size() << " points, "
            << scan.failures.size() << " failed\n";
  for (const DephasingRecord& p : scan.points) {
    std::cout << "  gamma_pd = " << format_value(p.gamma_pd)
              << ": g2_min = " << sci3(p.g2_min) << " at (e1, e2) = ("
              << fixed6(p.e1_opt) << ", " << fixed6(p.e2_opt) << ")\n";
  }
  std::cout << "wrote " << (dir / "dephasing_scan.csv").string() << ", "
            << (dir / "dephasing_scan_manifest.json").string() << "\n";
}

void run_validate(const ParsedRun& run) {
  const RunConfig& cfg = run.config;
  SystemParams params = cfg.system;
  params.gamma2 = cfg.validate_mixing * params.gamma1;
  AxisSpec axis{-cfg.validate_window, cfg.validate_window,
                cfg.validate_resolution};
  ExploreOptions opts = cfg.explore_options();

  SweepGrid numeric =
      sweep_detunings(params, axis, axis, Engine::numeric, opts);
  if (!numeric.g2.empty() && numeric.failures.size() == numeric.g2.size()) {
    throw NumericalError("every solver cell failed; first: " +
                         numeric.failures.front());
  }

  std::vector<double> e1v = axis.values();
  std::vector<double> e2v = axis.values();
  size_t cells = e1v.size() * e2v.size();
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> g2_exact(cells, kNan);
  std::vector<double> g2_grouped(cells, kNan);
  std::vector<double> n_exact(cells, kNan);
  std::vector<std::string> analytic_failures;

  DrivePair drive = drive_from(params, cfg.weighting);
  OutputMode out{params.gamma1, params.gamma2};
  SystemParams point = params;
  for (size_t i1 = 0; i1 < e1v.size(); ++i1) {
    for (size_t i2 = 0; i2 < e2v.size(); ++i2) {
      point.e1 = e1v[i1];
      point.e2 = e2v[i2];
      size_t idx = i1 * e2v.size() + i2;
      try {
        WeakPumpAmplitudes amps = weak_pump_amplitudes(point, drive);
        g2_exact[idx] = analytic_g2(amps, out, G2Form::exact);
        g2_grouped[idx] = analytic_g2(amps, out, G2Form::grouped);
        n_exact[idx] = analytic_n_out(amps, out);
      } catch (const NumericalError& e) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "closed form at e1=%.6g e2=%.6g: %s",
                      point.e1, point.e2, e.what());
        analytic_failures.push_back(buf);
      }
    }
  }

  // Relative deviation of each closed form from the solver, over cells where
  // both are finite.
  std::vector<double> dev_exact_all(cells, kNan);
  std::vector<double> dev_grouped_all(cells, kNan);
  std::vector<double> dev_exact;
  std::vector<double> dev_grouped;
  for (size_t idx = 0; idx < cells; ++idx) {
    double num = numeric.g2[idx];
    if (!std::isfinite(num) || num <= 0.0) continue;
    if (std::isfinite(g2_exact[idx])) {
      dev_exact_all[idx] = std::abs(g2_exact[idx] - num) / num;
      dev_exact.push_back(dev_exact_all[idx]);
    }
    if (std::isfinite(g2_grouped[idx])) {
      dev_grouped_all[idx] = std::abs(g2_grouped[idx] - num) / num;
      dev_grouped.push_back(dev_grouped_all[idx]);
    }
  }
  if (dev_exact.empty()) {
    throw NumericalError("no cell produced both a solver and a closed-form "
                         "value; nothing to compare");
  }

  static constexpr double kThreshold = 0.05;
  static constexpr double kRequiredFraction = 0.99;
  auto summarize = [](std::vector<double> devs) {
    std::sort(devs.begin(), devs.end());
    size_t n = devs.size();
    double max = devs.back();
    double p99 = devs[static_cast<size_t>(0.99 * static_cast<double>(n - 1))];
    size_t ok = static_cast<size_t>(
        std::upper_bound(devs.begin(), devs.end(), kThreshold) - devs.begin());
    double frac = static_cast<double>(ok) / static_cast<double>(n);
    return std::tuple<double, double, double>{max, p99, frac};
  };
  auto [max_exact, p99_exact, frac_exact] = summarize(dev_exact);
  auto [max_grouped, p99_grouped, frac_grouped] = summarize(dev_grouped);
  bool pass = frac_exact >= kRequiredFraction;

  fs::path dir = ensure_out_dir(cfg);
  {
    TableWriter t(dir / "validate.csv");
    t.comment("closed-form vs solver comparison at weak pump");
    t.comment("mixing gamma2/gamma1: " + format_value(cfg.validate_mixing));
    t.comment(axis_comment("e1", axis));
    t.comment(axis_comment("e2", axis));
    t.comment(params_comment(cfg));
    t.comment(kUnitsComment);
    t.columns({"e1", "e2", "g2_numeric", "g2_exact", "g2_grouped",
               "rel_dev_exact", "rel_dev_grouped", "n_out_numeric",
               "n_out_exact"});
    for (size_t i1 = 0; i1 < e1v.size(); ++i1) {
      for (size_t i2 = 0; i2 < e2v.size(); ++i2) {
        size_t idx = i1 * e2v.size() + i2;
        t.row({e1v[i1], e2v[i2], numeric.g2[idx], g2_exact[idx],
               g2_grouped[idx], dev_exact_all[idx], dev_grouped_all[idx],
               numeric.n_out[idx], n_exact[idx]});
      }
    }
    t.close();
  }
  {
    TableWriter t(dir / "validate_summary.csv");
    t.comment("agreement summary: fraction of compared cells whose relative "
              "deviation from the solver stays within the threshold");
    t.columns({"cells", "compared", "frac_exact_within_threshold",
               "max_rel_dev_exact", "p99_rel_dev_exact",
               "frac_grouped_within_threshold", "max_rel_dev_grouped",
               "p99_rel_dev_grouped", "threshold", "required_fraction",
               "pass"});
    t.row({static_cast<double>(cells), static_cast<double>(dev_exact.size()),
           frac_exact, max_exact, p99_exact, frac_grouped, max_grouped,
           p99_grouped, kThreshold, kRequiredFraction, pass ? 1.0 : 0.0});
    t.close();
  }

  json m = base_manifest(run);
  m["mixing"] = cfg.validate_mixing;
  m["grid"] = json{{"lo", axis.lo}, {"hi", axis.hi}, {"count", axis.count}};
  m["solver_failures"] = numeric.failures;
  m["closed_form_failures"] = analytic_failures;
  m["summary"] = json{{"cells", cells},
                      {"compared", dev_exact.size()},
                      {"frac_exact_within_threshold", frac_exact},
                      {"max_rel_dev_exact", max_exact},
                      {"p99_rel_dev_exact", p99_exact},
                      {"frac_grouped_within_threshold", frac_grouped},
                      {"max_rel_dev_grouped", max_grouped},
                      {"threshold", kThreshold},
                      {"required_fraction", kRequiredFraction},
                      {"pass", pass}};
  m["physicality"] = stats_json(numeric.stats);
  m["outputs"] = json::array({"validate.csv", "validate_summary.csv"});
  write_manifest(dir, "validate_manifest.json", m);

  char line[200];
  std::cout << "validate: mixing gamma2/gamma1 = "
            << format_value(cfg.validate_mixing) << ", pump f = "
            << format_value(params.f) << ", grid " << axis.count << "x"
            << axis.count << "\n";
  std::snprintf(line, sizeof(line),
                "  exact form:   %.2f%% of %zu cells within %g%% of the solver "
                "(max rel dev %.3g)",
                100.0 * frac_exact, dev_exact.size(), 100.0 * kThreshold,
                max_exact);
  std::cout << line << "\n";
  std::snprintf(line, sizeof(line),
                "  grouped form: %.2f%% of %zu cells within %g%% of the solver "
                "(max rel dev %.3g)",
                100.0 * frac_grouped, dev_grouped.size(), 100.0 * kThreshold,
                max_grouped);
  std::cout << line << "\n";
  std::cout << "  summary: " << (pass ? "PASS" : "FAIL")
            << " (require exact form within " << format_value(100.0 * kThreshold)
            << "% at " << format_value(100.0 * kRequiredFraction)
            << "% of cells)\n";
  std::cout << "wrote " << (dir / "validate.csv").string() << ", "
            << (dir / "validate_summary.csv").string() << ", "
            << (dir / "validate_manifest.json").string() << "\n";
}

void run_design(const ParsedRun& run) {
  const RunConfig& cfg = run.config;
  SystemParams params = cfg.system;
  auto [e1_formula, e2_formula] = optimal_detunings(params.gamma_tot1);
  double u_formula = optimal_nonlinearity(params.gamma_tot1, params.j);
  params.u = u_formula;
  params.e1 = e1_formula;
  params.e2 = e2_formula;
  if (params.f <= 0.0) params.f = 0.01;

  MinimumRecord refined =
      detail::analytic_global_minimum(params, cfg.explore_options());

  SystemParams at = params;
  at.e1 = refined.e1;
  at.e2 = refined.e2;
  FockSpace space(cfg.n_max);
  SteadyStateResult state =
      steady_state(at, drive_from(at, cfg.weighting), space);
  CorrelationResult corr =
      correlations(state.rho, space, OutputMode{at.gamma1, at.gamma2});
  PhysicalityStats stats;
  stats.absorb(state);

  fs::path dir = ensure_out_dir(cfg);
  {
    TableWriter t(dir / "design.csv");
    t.comment("working points for the configured couplings: first-order "
              "formula values and the refined landscape minimum");
    t.comment(params_comment(cfg));
    t.comment(kUnitsComment);
    t.columns({"gamma_tot", "j", "gamma1", "gamma2", "e1_formula", "e2_formula",
               "u_formula", "e1_refined", "e2_refined", "g2_analytic_refined",
               "g2_numeric", "n_out_numeric"});
    t.row({params.gamma_tot1, params.j, params.gamma1, params.gamma2,
           e1_formula, e2_formula, u_formula, refined.e1, refined.e2,
           refined.g2, corr.g2_out, corr.n_out});
    t.close();
  }

  json m = base_manifest(run);
  m["formula"] =
      json{{"e1", e1_formula}, {"e2", e2_formula}, {"u", u_formula}};
  m["refined"] = json{{"e1", refined.e1},
                      {"e2", refined.e2},
                      {"g2_analytic", refined.g2}};
  m["solver_check"] = json{{"g2_out", corr.g2_out},
                           {"n_out", corr.n_out},
                           {"f", params.f},
                           {"n_max", cfg.n_max}};
  m["physicality"] = stats_json(stats);
  m["outputs"] = json::array({"design.csv"});
  write_manifest(dir, "design_manifest.json", m);

  std::cout << "design inputs: gamma_tot = " << format_value(params.gamma_tot1)
            << ", j = " << format_value(params.j) << ", gamma1 = "
            << format_value(params.gamma1) << ", gamma2 = "
            << format_value(params.gamma2) << "\n";
  std::cout << "formula detunings: E1 = " << fixed6(e1_formula)
            << ", E2 = " << fixed6(e2_formula)
            << "; matching Kerr U = " << fixed6(u_formula) << "\n";
  std::cout << "refined landscape minimum: E1 = " << fixed6(refined.e1)
            << ", E2 = " << fixed6(refined.e2)
            << ", closed-form g2 = " << sci3(refined.g2) << "\n";
  std::cout << "solver check at the refined point: g2_out = "
            << sci3(corr.g2_out) << ", n_out = " << sci3(corr.n_out)
            << " (f = " << format_value(params.f)
            << ", n_max = " << cfg.n_max << ")\n";
  std::cout << "note: the formula detunings are a first-order reference; the "
               "refined minimum is the deeper operating point at these "
               "couplings.\n";
  std::cout << "wrote " << (dir / "design.csv").string() << ", "
            << (dir / "design_manifest.json").string() << "\n";
}

int dispatch(const ParsedRun& run) {
  const std::string& sub = run.subcommand;
  if (sub == "sweep") {
    run_sweep(run);
  } else if (sub == "track") {
    run_track(run);
  } else if (sub == "delta-scan") {
    run_delta_scan(run);
  } else if (sub == "dephasing-scan") {
    run_dephasing_scan(run);
  } else if (sub == "validate") {
    run_validate(run);
  } else if (sub == "design") {
    run_design(run);
  } else {
    throw ConfigError("unknown command " + sub);
  }
  return kExitOk;
}

}  // namespace

ParsedRun parse_cli(const std::vector<std::string>& args) {
  ParsedRun out;
  RunConfig& cfg = out.config;
  SystemParams& s = cfg.system;

  CLI::App app{"Steady-state design explorer for two tunnel-coupled Kerr "
               "cavities with shared input and output channels"};
  app.name("dimer");
  app.fallthrough();
  app.allow_config_extras(false);
  app.set_version_flag("--version", "kerr-dimer 0.1.0");
  app.set_config("--config", "",
                 "INI-style configuration file; sections name subcommands");

  std::string engine_name = engine_label(cfg.engine);
  std::string weighting_name = weighting_label(cfg.weighting);
  double gamma_tot = s.gamma_tot1;
  double gamma_tot2 = -1.0;
  std::vector<double> rates;

  auto dopt = [](CLI::Option* opt, double v) {
    opt->default_str(format_value(v));
  };
  auto iopt = [](CLI::Option* opt, int v) {
    opt->default_str(std::to_string(v));
  };

  dopt(app.add_option("--e1", s.e1, "first-cavity detuning"), s.e1);
  dopt(app.add_option("--e2", s.e2, "second-cavity detuning"), s.e2);
  dopt(app.add_option("--u", s.u, "Kerr shift per cavity"), s.u);
  dopt(app.add_option("--j", s.j, "tunnel coupling between the cavities"), s.j);
  dopt(app.add_option("--f", s.f, "total pump amplitude"), s.f);
  dopt(app.add_option("--gamma1", s.gamma1, "output coupling, cavity 1"),
       s.gamma1);
  dopt(app.add_option("--gamma2", s.gamma2, "output coupling, cavity 2"),
       s.gamma2);
  dopt(app.add_option("--gamma-tot", gamma_tot,
                      "total linewidth of both cavities"),
       gamma_tot);
  dopt(app.add_option("--gamma-tot2", gamma_tot2,
                      "second-cavity linewidth override; negative follows "
                      "--gamma-tot"),
       gamma_tot2);
  dopt(app.add_option("--gamma-pd1", s.gamma_pd1,
                      "pure dephasing rate, cavity 1"),
       s.gamma_pd1);
  dopt(app.add_option("--gamma-pd2", s.gamma_pd2,
                      "pure dephasing rate, cavity 2"),
       s.gamma_pd2);
  app.add_flag("--allow-unequal-linewidths", s.allow_unequal_linewidths,
               "permit gamma_tot1 != gamma_tot2");
  app.add_option("--weighting", weighting_name,
                 "pump split across the cavities")
      ->check(CLI::IsMember({"normalized", "unnormalized"}))
      ->default_str(weighting_name);
  app.add_option("--engine", engine_name, "landscape evaluation engine")
      ->check(CLI::IsMember({"analytic", "numeric"}))
      ->default_str(engine_name);
  iopt(app.add_option("--n-max", cfg.n_max,
                      "per-mode Fock cutoff for numeric solves")
           ->check(CLI::Range(1, 12)),
       cfg.n_max);
  iopt(app.add_option("--workers", cfg.workers,
                      "worker cap for grid kernels")
           ->check(CLI::Range(1, 256)),
       cfg.workers);
  dopt(app.add_option("--target-nout", cfg.target_n_out,
                      "output occupation held by pump calibration")
           ->check(CLI::PositiveNumber),
       cfg.target_n_out);
  app.add_option("--out", cfg.out_dir, "output directory")
      ->default_str(cfg.out_dir);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "map g2 and the output occupation over a detuning window, "
               "then locate and refine the landscape minima");
  sweep->configurable();
  dopt(sweep->add_option("--e1-lo", cfg.sweep_e1.lo, "first-axis lower edge"),
       cfg.sweep_e1.lo);
  dopt(sweep->add_option("--e1-hi", cfg.sweep_e1.hi, "first-axis upper edge"),
       cfg.sweep_e1.hi);
  iopt(sweep->add_option("--e1-count", cfg.sweep_e1.count,
                         "first-axis point count"),
       cfg.sweep_e1.count);
  dopt(sweep->add_option("--e2-lo", cfg.sweep_e2.lo, "second-axis lower edge"),
       cfg.sweep_e2.lo);
  dopt(sweep->add_option("--e2-hi", cfg.sweep_e2.hi, "second-axis upper edge"),
       cfg.sweep_e2.hi);
  iopt(sweep->add_option("--e2-count", cfg.sweep_e2.count,
                         "second-axis point count"),
       cfg.sweep_e2.count);

  CLI::App* track = app.add_subcommand(
      "track", "follow the minimum from the unmixed optimum along an "
               "ascending output-mixing schedule, recalibrating the pump");
  track->configurable();
  dopt(track->add_option("--ratio-max", cfg.track_ratio_max,
                         "largest gamma2/gamma1"),
       cfg.track_ratio_max);
  dopt(track->add_option("--ratio-step", cfg.track_ratio_step,
                         "schedule increment"),
       cfg.track_ratio_step);

  CLI::App* dscan = app.add_subcommand(
      "delta-scan", "minimum over e1 at each fixed detuning difference "
                    "delta = e1 - e2");
  dscan->configurable();
  dopt(dscan->add_option("--lo", cfg.delta_axis.lo, "smallest delta"),
       cfg.delta_axis.lo);
  dopt(dscan->add_option("--hi", cfg.delta_axis.hi, "largest delta"),
       cfg.delta_axis.hi);
  iopt(dscan->add_option("--count", cfg.delta_axis.count, "point count"),
       cfg.delta_axis.count);

  CLI::App* pscan = app.add_subcommand(
      "dephasing-scan",
      "re-optimized minimum for each symmetric pure-dephasing rate");
  pscan->configurable();
  pscan->add_option("--rates", rates,
                    "dephasing rates, processed in the given order");

  CLI::App* validate = app.add_subcommand(
      "validate",
      "closed-form vs full-solver comparison over a detuning grid");
  validate->configurable();
  dopt(validate->add_option("--mixing", cfg.validate_mixing,
                            "gamma2/gamma1 used for the comparison"),
       cfg.validate_mixing);
  iopt(validate->add_option("--resolution", cfg.validate_resolution,
                            "grid points per axis"),
       cfg.validate_resolution);
  dopt(validate->add_option("--window", cfg.validate_window,
                            "half-width of the detuning grid"),
       cfg.validate_window);

  CLI::App* design = app.add_subcommand(
      "design", "print the matching Kerr strength, the first-order optimal "
                "detunings, and the refined landscape optimum for the "
                "configured couplings");
  design->configurable();

  out.subcommand = scan_subcommand(args);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    if (!out.subcommand.empty()) {
      std::cout << app.get_subcommand(out.subcommand)->help();
    } else {
      std::cout << app.help();
    }
    out.exit_code = kExitOk;
    return out;
  } catch (const CLI::CallForVersion&) {
    std::cout << app.version() << "\n";
    out.exit_code = kExitOk;
    return out;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    out.exit_code = kExitConfigError;
    return out;
  }

  cfg.engine = engine_name == "numeric" ? Engine::numeric : Engine::analytic;
  cfg.weighting = weighting_name == "unnormalized"
                      ? DriveWeighting::unnormalized
                      : DriveWeighting::normalized;
  s.gamma_tot1 = gamma_tot;
  s.gamma_tot2 = gamma_tot2 < 0.0 ? gamma_tot : gamma_tot2;
  if (!rates.empty()) cfg.dephasing_rates = rates;

  out.resolved = serialize_config(cfg);
  return out;
}

int run_cli(const std::vector<std::string>& args) {
  ParsedRun parsed = parse_cli(args);
  if (parsed.exit_code >= 0) return parsed.exit_code;
  if (parsed.subcommand.empty()) {
    std::cerr << "error: no command given; expected the first argument to be "
                 "one of sweep, track, delta-scan, dephasing-scan, validate, "
                 "design (see --help)\n";
    return kExitConfigError;
  }
  try {
    return dispatch(parsed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalError;
  }
}

}  // namespace dimer
