#include "dimer/explore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>

#include "dimer/analytic.hpp"
#include "dimer/errors.hpp"

namespace dimer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string cell_failure(double e1, double e2, const char* what) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "e1=%.10g, e2=%.10g: %s", e1, e2, what);
  return buf;
}

struct SimplexResult {
  std::vector<double> x;
  double value = kInf;
  int iterations = 0;
  bool converged = false;
};

// Downhill simplex with standard reflection/expansion/contraction/shrink
// coefficients. Objective failures (NumericalError, non-finite values,
// non-finite probe points) count as +inf, steering the simplex away without
// aborting the search. Fully deterministic.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          const std::vector<double>& start, double step,
                          double tol, int max_iter) {
  const size_t n = start.size();
  auto safe = [&](const std::vector<double>& x) -> double {
    for (double c : x) {
      if (!std::isfinite(c)) return kInf;
    }
    try {
      const double v = objective(x);
      return std::isfinite(v) ? v : kInf;
    } catch (const NumericalError&) {
      return kInf;
    }
  };

  std::vector<std::vector<double>> verts(n + 1, start);
  for (size_t i = 0; i < n; ++i) verts[i + 1][i] += step;
  std::vector<double> vals(n + 1);
  for (size_t i = 0; i <= n; ++i) vals[i] = safe(verts[i]);

  SimplexResult result;
  std::vector<size_t> order(n + 1);
  for (int iter = 0; iter < max_iter; ++iter) {
    result.iterations = iter;
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    const size_t best = order[0];
    const size_t worst = order[n];
    const size_t second = order[n - 1];

    double diameter = 0.0;
    for (size_t i = 0; i <= n; ++i) {
      for (size_t d = 0; d < n; ++d) {
        diameter = std::max(diameter, std::abs(verts[i][d] - verts[best][d]));
      }
    }
    if (diameter < tol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (size_t d = 0; d < n; ++d) centroid[d] += verts[i][d];
    }
    for (size_t d = 0; d < n; ++d) centroid[d] /= double(n);

    std::vector<double> reflected(n), probe(n);
    for (size_t d = 0; d < n; ++d) {
      reflected[d] = centroid[d] + (centroid[d] - verts[worst][d]);
    }
    const double fr = safe(reflected);

    if (fr < vals[best]) {
      for (size_t d = 0; d < n; ++d) {
        probe[d] = centroid[d] + 2.0 * (reflected[d] - centroid[d]);
      }
      const double fe = safe(probe);
      if (fe < fr) {
        verts[worst] = probe;
        vals[worst] = fe;
      } else {
        verts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      verts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    bool contracted = false;
    if (fr < vals[worst]) {
      for (size_t d = 0; d < n; ++d) {
        probe[d] = centroid[d] + 0.5 * (reflected[d] - centroid[d]);
      }
      const double fc = safe(probe);
      if (fc <= fr) {
        verts[worst] = probe;
        vals[worst] = fc;
        contracted = true;
      }
    } else {
      for (size_t d = 0; d < n; ++d) {
        probe[d] = centroid[d] + 0.5 * (verts[worst][d] - centroid[d]);
      }
      const double fc = safe(probe);
      if (fc < vals[worst]) {
        verts[worst] = probe;
        vals[worst] = fc;
        contracted = true;
      }
    }
    if (!contracted) {
      for (size_t i = 0; i <= n; ++i) {
        if (i == best) continue;
        for (size_t d = 0; d < n; ++d) {
          verts[i][d] = verts[best][d] + 0.5 * (verts[i][d] - verts[best][d]);
        }
        vals[i] = safe(verts[i]);
      }
    }
  }

  size_t best = 0;
  for (size_t i = 1; i <= n; ++i) {
    if (vals[i] < vals[best]) best = i;
  }
  result.x = verts[best];
  result.value = vals[best];
  return result;
}

// Closed-form correlation as a function of the detunings, everything else
// held fixed.
std::function<double(const std::vector<double>&)> analytic_objective(
    const SystemParams& base, const DrivePair& drive, const OutputMode& out) {
  return [base, drive, out](const std::vector<double>& x) {
    SystemParams p = base;
    p.e1 = x[0];
    p.e2 = x[1];
    const WeakPumpAmplitudes amps = weak_pump_amplitudes(p, drive);
    return analytic_g2(amps, out, G2Form::exact);
  };
}

}  // namespace

namespace detail {

// Deepest refined minimum of the closed-form landscape over the default
// detuning window. Simplex descent straight from a formula guess can slide
// onto the flat far-detuned plateau, so seeding always goes through a coarse
// grid first.
MinimumRecord analytic_global_minimum(const SystemParams& params,
                                      const ExploreOptions& opts) {
  const AxisSpec window{-2.0, 2.0, 41};
  const SweepGrid grid =
      sweep_detunings(params, window, window, Engine::analytic, opts);
  const std::vector<MinimumRecord> raw = find_local_minima(grid);
  if (raw.empty()) {
    throw NumericalError(
        "analytic_global_minimum: no interior minimum in the default window");
  }
  const std::vector<MinimumRecord> refined =
      refine_minima(params, raw, Engine::analytic, opts);
  return refined.front();
}

}  // namespace detail

void AxisSpec::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("AxisSpec: bounds must be finite");
  }
  if (count == 1) {
    if (lo != hi) {
      throw ConfigError("AxisSpec: a single-point axis requires lo == hi");
    }
    return;
  }
  if (count < 8) {
    throw ConfigError("AxisSpec: resolution must be 1 (degenerate) or >= 8");
  }
  if (!(hi > lo)) {
    throw ConfigError("AxisSpec: hi must exceed lo");
  }
}

std::vector<double> AxisSpec::values() const {
  validate();
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double step = (hi - lo) / double(count - 1);
  for (int i = 0; i < count; ++i) out[i] = lo + step * i;
  out.back() = hi;
  return out;
}

SweepGrid sweep_detunings(const SystemParams& params, const AxisSpec& e1_axis,
                          const AxisSpec& e2_axis, Engine engine,
                          const ExploreOptions& opts) {
  params.validate();
  const OutputMode out{params.gamma1, params.gamma2};
  out.validate();
  const DrivePair drive = drive_from(params, opts.weighting);

  SweepGrid grid;
  grid.e1_axis = e1_axis.values();
  grid.e2_axis = e2_axis.values();
  grid.engine = engine;
  const long n2 = long(grid.e2_axis.size());
  const long total = long(grid.e1_axis.size()) * n2;
  grid.g2.assign(total, kNan);
  grid.n_out.assign(total, kNan);
  std::vector<std::string> cell_error(total);
  const int workers = std::max(1, opts.workers);

  if (engine == Engine::analytic) {
    auto eval = [&](long idx) {
      SystemParams p = params;
      p.e1 = grid.e1_axis[idx / n2];
      p.e2 = grid.e2_axis[idx % n2];
      try {
        const WeakPumpAmplitudes amps = weak_pump_amplitudes(p, drive);
        grid.n_out[idx] = analytic_n_out(amps, out);
        grid.g2[idx] = analytic_g2(amps, out, G2Form::exact);
      } catch (const NumericalError& err) {
        cell_error[idx] = cell_failure(p.e1, p.e2, err.what());
      }
    };
#ifdef _OPENMP
    if (workers > 1) {
#pragma omp parallel for num_threads(workers) schedule(static)
      for (long idx = 0; idx < total; ++idx) eval(idx);
    } else
#endif
    {
      for (long idx = 0; idx < total; ++idx) eval(idx);
    }
  } else {
    auto eval = [&](long idx, SteadyStateSolver& solver,
                    PhysicalityStats& stats) {
      SystemParams p = params;
      p.e1 = grid.e1_axis[idx / n2];
      p.e2 = grid.e2_axis[idx % n2];
      try {
        const SteadyStateResult ss = solver.solve(p, drive);
        stats.absorb(ss);
        grid.n_out[idx] = n_out(ss.rho, solver.space(), out);
        grid.g2[idx] = g2_out(ss.rho, solver.space(), out);
      } catch (const NumericalError& err) {
        cell_error[idx] = cell_failure(p.e1, p.e2, err.what());
      }
    };
#ifdef _OPENMP
    if (workers > 1) {
#pragma omp parallel num_threads(workers)
      {
        SteadyStateSolver solver{FockSpace(opts.n_max)};
        PhysicalityStats local;
#pragma omp for schedule(dynamic, 4)
        for (long idx = 0; idx < total; ++idx) eval(idx, solver, local);
#pragma omp critical
        grid.stats.merge(local);
      }
    } else
#endif
    {
      SteadyStateSolver solver{FockSpace(opts.n_max)};
      for (long idx = 0; idx < total; ++idx) eval(idx, solver, grid.stats);
    }
  }

  for (long idx = 0; idx < total; ++idx) {
    if (!cell_error[idx].empty()) grid.failures.push_back(cell_error[idx]);
  }
  return grid;
}

std::vector<MinimumRecord> find_local_minima(const SweepGrid& grid) {
  const long n1 = long(grid.e1_axis.size());
  const long n2 = long(grid.e2_axis.size());
  if (long(grid.g2.size()) != n1 * n2) {
    throw ConfigError("find_local_minima: grid values do not match axes");
  }
  std::vector<MinimumRecord> minima;
  // Interior cells only: a minimum must beat all 8 neighbors, so boundary
  // cells (which merely beat the neighbors they have) never qualify.
  for (long i = 1; i + 1 < n1; ++i) {
    for (long j = 1; j + 1 < n2; ++j) {
      const double v = grid.g2[size_t(i * n2 + j)];
      if (!std::isfinite(v)) continue;
      bool strict = true;
      for (long di = -1; di <= 1 && strict; ++di) {
        for (long dj = -1; dj <= 1 && strict; ++dj) {
          if (di == 0 && dj == 0) continue;
          const double w = grid.g2[size_t((i + di) * n2 + (j + dj))];
          if (!(v < w)) strict = false;  // NaN neighbors also disqualify
        }
      }
      if (!strict) continue;
      MinimumRecord rec;
      rec.e1 = grid.e1_axis[size_t(i)];
      rec.e2 = grid.e2_axis[size_t(j)];
      rec.g2 = v;
      rec.seed_g2 = v;
      rec.seed_i = int(i);
      rec.seed_j = int(j);
      minima.push_back(rec);
    }
  }
  std::stable_sort(minima.begin(), minima.end(),
                   [](const MinimumRecord& a, const MinimumRecord& b) {
                     return a.g2 < b.g2;
                   });
  for (size_t k = 0; k < minima.size(); ++k) {
    minima[k].label = "m" + std::to_string(k + 1);
  }
  return minima;
}

std::vector<MinimumRecord> refine_minima(const SystemParams& params,
                                         const std::vector<MinimumRecord>& seeds,
                                         Engine engine,
                                         const ExploreOptions& opts) {
  if (seeds.empty()) return {};
  params.validate();
  const OutputMode out{params.gamma1, params.gamma2};
  out.validate();
  const DrivePair drive = drive_from(params, opts.weighting);

  std::function<double(const std::vector<double>&)> objective;
  // The numeric objective shares one solver across all simplex probes.
  std::unique_ptr<SteadyStateSolver> solver;
  if (engine == Engine::analytic) {
    objective = analytic_objective(params, drive, out);
  } else {
    solver = std::make_unique<SteadyStateSolver>(FockSpace(opts.n_max));
    objective = [&params, &drive, &out, s = solver.get()](
                    const std::vector<double>& x) {
      SystemParams p = params;
      p.e1 = x[0];
      p.e2 = x[1];
      const SteadyStateResult ss = s->solve(p, drive);
      return g2_out(ss.rho, s->space(), out);
    };
  }

  std::vector<MinimumRecord> refined;
  refined.reserve(seeds.size());
  for (const MinimumRecord& seed : seeds) {
    const SimplexResult r =
        nelder_mead(objective, {seed.e1, seed.e2}, opts.simplex_step,
                    opts.simplex_tol, opts.simplex_max_iter);
    if (!std::isfinite(r.value)) {
      throw NumericalError("refine_minima: descent from " + seed.label +
                           " found no evaluable point");
    }
    MinimumRecord rec = seed;
    rec.e1 = r.x[0];
    rec.e2 = r.x[1];
    rec.g2 = r.value;
    rec.refined = true;
    refined.push_back(rec);
  }

  std::stable_sort(refined.begin(), refined.end(),
                   [](const MinimumRecord& a, const MinimumRecord& b) {
                     return a.g2 < b.g2;
                   });
  std::vector<MinimumRecord> kept;
  for (const MinimumRecord& rec : refined) {
    bool duplicate = false;
    for (const MinimumRecord& k : kept) {
      if (std::hypot(rec.e1 - k.e1, rec.e2 - k.e2) <= opts.dedup_radius) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(rec);
  }
  for (size_t k = 0; k < kept.size(); ++k) {
    kept[k].label = "m" + std::to_string(k + 1);
  }
  return kept;
}

CalibrationResult calibrate_pump(const SystemParams& params, double target_n_out,
                                 const ExploreOptions& opts) {
  if (!(target_n_out > 0.0)) {
    throw ConfigError("calibrate_pump: target occupation must be positive");
  }
  params.validate();
  const OutputMode out{params.gamma1, params.gamma2};
  out.validate();

  SteadyStateSolver solver{FockSpace(opts.n_max)};
  CalibrationResult result;
  result.f = params.f > 0.0 ? params.f : 0.01;
  for (int iter = 1; iter <= 10; ++iter) {
    SystemParams p = params;
    p.f = result.f;
    const DrivePair drive = drive_from(p, opts.weighting);
    const SteadyStateResult ss = solver.solve(p, drive);
    result.stats.absorb(ss);
    result.iterations = iter;
    result.n_out = n_out(ss.rho, solver.space(), out);
    if (!(result.n_out > 0.0)) {
      throw NumericalError("calibrate_pump: output occupation vanished");
    }
    result.g2_out = g2_out(ss.rho, solver.space(), out);
    if (std::abs(result.n_out - target_n_out) <= 0.01 * target_n_out) {
      return result;
    }
    result.f *= std::sqrt(target_n_out / result.n_out);
  }
  throw NumericalError("calibrate_pump: no convergence within 10 iterations");
}

TrackResult track_minimum(const SystemParams& params,
                          const std::vector<double>& mixing_schedule,
                          const ExploreOptions& opts) {
  if (mixing_schedule.empty()) {
    throw ConfigError("track_minimum: empty mixing schedule");
  }
  if (mixing_schedule.front() != 0.0) {
    throw ConfigError("track_minimum: schedule must start at ratio 0");
  }
  for (size_t k = 0; k < mixing_schedule.size(); ++k) {
    if (!std::isfinite(mixing_schedule[k]) || mixing_schedule[k] < 0.0) {
      throw ConfigError("track_minimum: ratios must be finite and non-negative");
    }
    if (k > 0 && mixing_schedule[k] < mixing_schedule[k - 1]) {
      throw ConfigError("track_minimum: schedule must be sorted ascending");
    }
  }
  params.validate();
  if (!(params.gamma1 > 0.0)) {
    throw ConfigError("track_minimum: gamma1 must be positive");
  }

  TrackResult result;
  // The unmixed origin comes from a coarse landscape search; later steps
  // warm-start from the previous optimum to keep following the same basin.
  {
    SystemParams p0 = params;
    p0.gamma2 = 0.0;
    const MinimumRecord origin = detail::analytic_global_minimum(p0, opts);
    result.origin_e1 = origin.e1;
    result.origin_e2 = origin.e2;
  }
  double seed_e1 = result.origin_e1;
  double seed_e2 = result.origin_e2;
  double last_good = 0.0;
  double f_warm = params.f > 0.0 ? params.f : 0.01;
  for (double ratio : mixing_schedule) {
    SystemParams p = params;
    p.gamma2 = ratio * p.gamma1;
    const OutputMode out{p.gamma1, p.gamma2};
    const DrivePair drive = drive_from(p, opts.weighting);
    const SimplexResult r =
        nelder_mead(analytic_objective(p, drive, out), {seed_e1, seed_e2},
                    opts.simplex_step, opts.simplex_tol, opts.simplex_max_iter);
    if (!std::isfinite(r.value)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "track_minimum: minimum lost at ratio %.6g (last good "
                    "ratio %.6g)",
                    ratio, last_good);
      throw NumericalError(buf);
    }
    seed_e1 = r.x[0];
    seed_e2 = r.x[1];

    SystemParams pc = p;
    pc.e1 = seed_e1;
    pc.e2 = seed_e2;
    pc.f = f_warm;
    const CalibrationResult cal =
        calibrate_pump(pc, opts.target_n_out, opts);
    f_warm = cal.f;
    result.stats.merge(cal.stats);

    TrackRecord rec;
    rec.ratio = ratio;
    rec.e1 = seed_e1;
    rec.e2 = seed_e2;
    rec.g2_analytic = r.value;
    rec.f_calibrated = cal.f;
    rec.n_out = cal.n_out;
    rec.g2_numeric = cal.g2_out;
    rec.calibration_iterations = cal.iterations;
    result.steps.push_back(rec);
    last_good = ratio;
  }
  return result;
}

DeltaScan scan_fixed_detuning(const SystemParams& params,
                              const AxisSpec& delta_axis,
                              const ExploreOptions& opts) {
  const std::vector<double> deltas = delta_axis.values();
  if (deltas.front() > 0.0 || deltas.back() < 0.0) {
    throw ConfigError("scan_fixed_detuning: range must cover delta = 0");
  }
  params.validate();
  const OutputMode out{params.gamma1, params.gamma2};
  out.validate();
  const DrivePair drive = drive_from(params, opts.weighting);

  DeltaScan scan;
  double f_warm = params.f > 0.0 ? params.f : 0.01;
  for (double delta : deltas) {
    // Objective along the slice e2 = e1 - delta.
    auto slice = [&](const std::vector<double>& x) {
      SystemParams p = params;
      p.e1 = x[0];
      p.e2 = x[0] - delta;
      const WeakPumpAmplitudes amps = weak_pump_amplitudes(p, drive);
      return analytic_g2(amps, out, G2Form::exact);
    };
    // Coarse multi-start, then simplex descent from the best cell.
    double best_e1 = kNan;
    double best_v = kInf;
    for (int i = 0; i < 61; ++i) {
      const double e1 = -3.0 + 0.1 * i;
      try {
        const double v = slice({e1});
        if (v < best_v) {
          best_v = v;
          best_e1 = e1;
        }
      } catch (const NumericalError&) {
      }
    }
    if (!std::isfinite(best_v)) {
      scan.failures.push_back(
          cell_failure(kNan, -delta, "no evaluable coarse point on the slice"));
      continue;
    }
    const SimplexResult r = nelder_mead(slice, {best_e1}, 0.1, opts.simplex_tol,
                                        opts.simplex_max_iter);

    DeltaScanRecord rec;
    rec.delta = delta;
    rec.e1_opt = r.x[0];
    rec.g2_analytic = r.value;
    SystemParams pc = params;
    pc.e1 = rec.e1_opt;
    pc.e2 = rec.e1_opt - delta;
    pc.f = f_warm;
    try {
      const CalibrationResult cal =
          calibrate_pump(pc, opts.target_n_out, opts);
      f_warm = cal.f;
      rec.f_calibrated = cal.f;
      rec.n_out = cal.n_out;
      rec.g2_numeric = cal.g2_out;
      scan.stats.merge(cal.stats);
    } catch (const NumericalError& err) {
      scan.failures.push_back(cell_failure(pc.e1, pc.e2, err.what()));
      continue;
    }
    scan.points.push_back(rec);
  }
  return scan;
}

DephasingScan scan_dephasing(const SystemParams& params,
                             const std::vector<double>& gamma_pd_values,
                             const ExploreOptions& opts) {
  if (gamma_pd_values.empty()) {
    throw ConfigError("scan_dephasing: empty rate list");
  }
  for (double g : gamma_pd_values) {
    if (!std::isfinite(g) || g < 0.0) {
      throw ConfigError("scan_dephasing: rates must be finite and non-negative");
    }
  }
  params.validate();
  const OutputMode out{params.gamma1, params.gamma2};
  out.validate();

  // Undephased seed: global minimum of the closed-form landscape at these
  // couplings (the closed forms carry no dephasing, so this is the gpd = 0
  // anchor for every point).
  const MinimumRecord origin = detail::analytic_global_minimum(params, opts);
  double e1_seed = origin.e1;
  double e2_seed = origin.e2;

  DephasingScan scan;
  SteadyStateSolver solver{FockSpace(opts.n_max)};
  double f_warm = params.f > 0.0 ? params.f : 0.01;
  for (double gpd : gamma_pd_values) {
    SystemParams p = params;
    p.gamma_pd1 = gpd;
    p.gamma_pd2 = gpd;
    double e1 = e1_seed;
    double e2 = e2_seed;
    try {
      SystemParams pc = p;
      pc.e1 = e1;
      pc.e2 = e2;
      pc.f = f_warm;
      CalibrationResult cal = calibrate_pump(pc, opts.target_n_out, opts);
      scan.stats.merge(cal.stats);
      // Alternate descent at fixed pump with recalibration at the new
      // optimum; the two interact only weakly.
      for (int round = 0; round < 3; ++round) {
        const double f_round = cal.f;
        auto objective = [&](const std::vector<double>& x) {
          SystemParams q = p;
          q.e1 = x[0];
          q.e2 = x[1];
          q.f = f_round;
          const DrivePair d = drive_from(q, opts.weighting);
          const SteadyStateResult ss = solver.solve(q, d);
          return g2_out(ss.rho, solver.space(), out);
        };
        const SimplexResult r =
            nelder_mead(objective, {e1, e2}, opts.simplex_step,
                        opts.simplex_tol, opts.simplex_max_iter);
        if (!std::isfinite(r.value)) {
          throw NumericalError("descent found no evaluable point");
        }
        e1 = r.x[0];
        e2 = r.x[1];
        pc.e1 = e1;
        pc.e2 = e2;
        pc.f = cal.f;
        cal = calibrate_pump(pc, opts.target_n_out, opts);
        scan.stats.merge(cal.stats);
      }
      f_warm = cal.f;
      DephasingRecord rec;
      rec.gamma_pd = gpd;
      rec.e1_opt = e1;
      rec.e2_opt = e2;
      rec.g2_min = cal.g2_out;
      rec.f_calibrated = cal.f;
      rec.n_out = cal.n_out;
      scan.points.push_back(rec);
      e1_seed = e1;
      e2_seed = e2;
    } catch (const NumericalError& err) {
      scan.failures.push_back(cell_failure(e1, e2, err.what()));
    }
  }
  return scan;
}

}  // namespace dimer
