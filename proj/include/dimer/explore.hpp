#pragma once

#include <string>
#include <vector>

#include "dimer/inout.hpp"
#include "dimer/lindblad.hpp"
#include "dimer/model.hpp"

namespace dimer {

// Which evaluation path a landscape uses: the weak-pump closed forms or the
// full steady-state solver.
enum class Engine { analytic, numeric };

// Uniform inclusive axis. A single-point axis (count == 1, lo == hi) is a
// degenerate slice; otherwise at least 8 points are required.
struct AxisSpec {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;

  void validate() const;
  std::vector<double> values() const;
};

// Knobs shared by the exploration routines. Defaults match the reported
// figure-grade runs.
struct ExploreOptions {
  DriveWeighting weighting = DriveWeighting::normalized;
  int n_max = 5;               // per-mode cutoff for numeric evaluations
  int workers = 1;             // worker cap for grid kernels
  double simplex_step = 0.04;  // initial simplex edge for refinement
  double simplex_tol = 1e-4;   // stop when the simplex diameter drops below
  int simplex_max_iter = 500;
  double dedup_radius = 0.02;  // merge refined minima closer than this
  double target_n_out = 1e-3;  // occupation held constant by calibration
};

struct SweepGrid {
  std::vector<double> e1_axis;
  std::vector<double> e2_axis;
  Engine engine = Engine::analytic;
  // Row-major over (e1 index, e2 index); failed cells hold NaN.
  std::vector<double> g2;
  std::vector<double> n_out;
  std::vector<std::string> failures;  // one entry per failed cell
  PhysicalityStats stats;             // numeric engine only

  size_t cell(size_t i1, size_t i2) const { return i1 * e2_axis.size() + i2; }
  double g2_at(size_t i1, size_t i2) const { return g2[cell(i1, i2)]; }
  double n_out_at(size_t i1, size_t i2) const { return n_out[cell(i1, i2)]; }
};

struct MinimumRecord {
  double e1 = 0.0;
  double e2 = 0.0;
  double g2 = 0.0;
  bool refined = false;
  int seed_i = 0;       // grid cell that seeded this record
  int seed_j = 0;
  double seed_g2 = 0.0; // coarse value at the seeding cell
  std::string label;    // m1, m2, ... in ascending order of value
};

// Landscape of g2 and the output occupation over a detuning window. Per-cell
// solver failures are recorded in `failures` and leave NaN cells; they do
// not abort the sweep.
SweepGrid sweep_detunings(const SystemParams& params, const AxisSpec& e1_axis,
                          const AxisSpec& e2_axis, Engine engine,
                          const ExploreOptions& opts = {});

// Interior cells strictly smaller than all 8 neighbors, sorted ascending by
// value and labeled m1, m2, ... NaN cells neither qualify nor support a
// neighbor's claim; boundary cells never qualify.
std::vector<MinimumRecord> find_local_minima(const SweepGrid& grid);

// Derivative-free simplex descent on the continuous objective from each
// seed, followed by merging of duplicates that converged to the same basin.
// Refined values never exceed their seed values when the engine matches the
// seeding grid's.
std::vector<MinimumRecord> refine_minima(const SystemParams& params,
                                         const std::vector<MinimumRecord>& seeds,
                                         Engine engine,
                                         const ExploreOptions& opts = {});

namespace detail {
// Deepest refined minimum of the closed-form landscape over the default
// [-2, 2]^2 window: coarse 41x41 grid, then simplex refinement. Used to seed
// the tracking and dephasing scans; exposed for reuse by callers that need
// the same anchor.
MinimumRecord analytic_global_minimum(const SystemParams& params,
                                      const ExploreOptions& opts);
}  // namespace detail

struct CalibrationResult {
  double f = 0.0;        // pump giving the target occupation
  double n_out = 0.0;    // occupation achieved at that pump
  double g2_out = 0.0;   // correlation at that pump
  int iterations = 0;    // steady-state solves spent
  PhysicalityStats stats;
};

// Rescale the pump until the numeric output occupation matches the target
// within 1%, exploiting n_out ~ f^2 for the update f <- f sqrt(target/n).
// Fails after 10 iterations without convergence.
CalibrationResult calibrate_pump(const SystemParams& params, double target_n_out,
                                 const ExploreOptions& opts = {});

struct TrackRecord {
  double ratio = 0.0;         // gamma2 / gamma1 at this step
  double e1 = 0.0;
  double e2 = 0.0;
  double g2_analytic = 0.0;   // refined objective value at the minimum
  double f_calibrated = 0.0;  // pump giving the target occupation
  double n_out = 0.0;         // occupation achieved at that pump
  double g2_numeric = 0.0;    // numeric correlation at the calibrated pump
  int calibration_iterations = 0;
};

struct TrackResult {
  std::vector<TrackRecord> steps;
  double origin_e1 = 0.0;  // unmixed landscape optimum the track grew from
  double origin_e2 = 0.0;
  PhysicalityStats stats;
};

// Follow the minimum continuously connected to the unmixed optimum along an
// ascending mixing schedule (gamma2/gamma1, starting at 0): each step
// refines the closed-form landscape seeded at the previous optimum, then
// recalibrates the pump numerically and evaluates the numeric correlation
// there. Losing the minimum raises NumericalError naming the last good step.
TrackResult track_minimum(const SystemParams& params,
                          const std::vector<double>& mixing_schedule,
                          const ExploreOptions& opts = {});

struct DeltaScanRecord {
  double delta = 0.0;         // e1 - e2
  double e1_opt = 0.0;        // optimal first-cavity detuning at this delta
  double g2_analytic = 0.0;
  double f_calibrated = 0.0;
  double n_out = 0.0;
  double g2_numeric = 0.0;
};

struct DeltaScan {
  std::vector<DeltaScanRecord> points;
  std::vector<std::string> failures;
  PhysicalityStats stats;
};

// For each inter-cavity detuning delta = e1 - e2 in an axis that must cover
// zero: minimize over e1 with delta held fixed, recalibrate the pump at the
// optimum, and evaluate the numeric correlation. Per-point failures are
// recorded, not fatal.
DeltaScan scan_fixed_detuning(const SystemParams& params,
                              const AxisSpec& delta_axis,
                              const ExploreOptions& opts = {});

struct DephasingRecord {
  double gamma_pd = 0.0;      // symmetric pure-dephasing rate
  double e1_opt = 0.0;
  double e2_opt = 0.0;
  double g2_min = 0.0;        // numeric, at the calibrated pump
  double f_calibrated = 0.0;
  double n_out = 0.0;
};

struct DephasingScan {
  std::vector<DephasingRecord> points;
  std::vector<std::string> failures;
  PhysicalityStats stats;
};

// Re-optimized minimum for each symmetric dephasing rate, using the numeric
// engine throughout (the closed forms carry no dephasing): alternate pump
// calibration and simplex descent at fixed pump for a few rounds per point.
DephasingScan scan_dephasing(const SystemParams& params,
                             const std::vector<double>& gamma_pd_values,
                             const ExploreOptions& opts = {});

}  // namespace dimer
