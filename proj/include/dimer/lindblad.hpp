#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

#include "dimer/fock.hpp"
#include "dimer/model.hpp"

namespace dimer {

// Physicality tolerances for returned steady states. Violations are errors,
// not warnings.
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kHermTol = 1e-10;
inline constexpr double kPositivityTol = -1e-8;  // smallest eigenvalue bound
inline constexpr double kResidualTol = 1e-9;     // max-norm of L[rho_ss]

using Liouvillian = Eigen::SparseMatrix<Complex>;

// L[rho] = -i [H, rho] + sum_k (rate_k / 2) (2 O_k rho O_k^dag - {O_k^dag O_k, rho})
// acting on column-stacked rho: vec index = col * dim + row.
// Radiative loss uses O = a_j with the full linewidth as rate; pure dephasing
// uses O = n_j.
Liouvillian build_liouvillian(
    const OperatorMatrix& hamiltonian,
    const std::vector<std::pair<OperatorMatrix, double>>& channels);

struct SteadyStateResult {
  DenseMatrix rho;
  double trace_dev = 0.0;    // |Tr rho - 1| before renormalization
  double herm_dev = 0.0;     // max |rho - rho^dag| before hermitization
  double min_eigenvalue = 0.0;
  double residual = 0.0;     // max-norm of L applied to the returned state
};

// Running extrema of steady-state diagnostics across many solves.
struct PhysicalityStats {
  long count = 0;
  double max_trace_dev = 0.0;
  double max_herm_dev = 0.0;
  double min_eigenvalue = 1.0;
  double max_residual = 0.0;

  void absorb(const SteadyStateResult& r);
  void merge(const PhysicalityStats& other);
};

// Direct solver for the stationary state at fixed truncation, caching
// everything that does not depend on the parameter point: the per-term
// operator structure of the Liouvillian, the union sparsity pattern, and the
// symbolic factorization. Solving at a new parameter point only refills
// values and refactorizes.
//
// The stationary system replaces the row of d(rho_00,00)/dt with the trace
// constraint (sum of diagonal stacked entries = 1), making it nonsingular
// whenever both cavities keep a strictly dissipative channel.
class SteadyStateSolver {
 public:
  explicit SteadyStateSolver(const FockSpace& space);
  ~SteadyStateSolver();
  SteadyStateSolver(SteadyStateSolver&&) noexcept;
  SteadyStateSolver& operator=(SteadyStateSolver&&) noexcept;

  // Throws DegenerateSteadyState when a cavity has no dissipation,
  // NumericalError when factorization fails or the returned state violates
  // the physicality tolerances above.
  SteadyStateResult solve(const SystemParams& params, const DrivePair& drive);

  // The Liouvillian at this parameter point, assembled over the cached
  // pattern (no trace-row replacement). Matches build_liouvillian on the
  // standard channels.
  Liouvillian assemble(const SystemParams& params, const DrivePair& drive);

  const FockSpace& space() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// The model's collapse channels: radiative loss (a_j, gamma_tot_j) and pure
// dephasing (n_j, gamma_pd_j). Zero-rate channels are included with rate 0.
std::vector<std::pair<OperatorMatrix, double>> standard_channels(
    const SystemParams& params, const FockSpace& space);

// Stationary state of an arbitrary Liouvillian, via the same trace-row
// replacement. A singular stationary system (dissipation fails to select a
// unique state) throws DegenerateSteadyState; tolerance violations and solve
// breakdowns throw NumericalError.
SteadyStateResult steady_state(const Liouvillian& liouvillian);

// One-shot convenience wrapper around SteadyStateSolver.
SteadyStateResult steady_state(const SystemParams& params, const DrivePair& drive,
                               const FockSpace& space);

// Smallest per-mode cutoff n such that g2_out changes by less than
// `tolerance` (relative) when n -> n + 1, scanning upward from 1 to `cap`.
// An undriven system is exactly the vacuum, so n = 1 suffices.
int convergence_check(const SystemParams& params, const DrivePair& drive,
                      double tolerance, int cap = 10);

// Same check with the drive taken from params.f under normalized mixing.
int convergence_check(const SystemParams& params, double tolerance, int cap = 10);

}  // namespace dimer
