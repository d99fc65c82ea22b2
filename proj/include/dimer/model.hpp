#pragma once

#include <complex>

#include "dimer/fock.hpp"

namespace dimer {

// Two coupled Kerr cavities in the frame rotating at the drive frequency.
// All rates and energies are expressed in units of the total per-cavity
// linewidth Gamma (gamma_tot), which therefore defaults to 1.
//
// Per cavity j: detuning e_j, Kerr shift u, tunnel coupling j between the
// cavities, output-channel coupling gamma_j, and total linewidth
// gamma_tot = kappa_j + 2 * gamma_j (the input and output couplers each
// contribute gamma_j; kappa_j is the remaining internal loss).
struct SystemParams {
  double e1 = 0.0;
  double e2 = 0.0;
  double u = 0.0;
  double j = 0.0;
  double f = 0.0;            // total drive amplitude, split by input_mixing
  double gamma1 = 0.0;       // output-channel coupling, cavity 1
  double gamma2 = 0.0;       // output-channel coupling, cavity 2
  double gamma_tot1 = 1.0;   // total linewidth, cavity 1
  double gamma_tot2 = 1.0;   // total linewidth, cavity 2
  double gamma_pd1 = 0.0;    // pure dephasing rate, cavity 1
  double gamma_pd2 = 0.0;    // pure dephasing rate, cavity 2
  bool allow_unequal_linewidths = false;

  double kappa1() const { return gamma_tot1 - 2.0 * gamma1; }
  double kappa2() const { return gamma_tot2 - 2.0 * gamma2; }

  // Throws ConfigError on negative rates or drive, kappa_j < 0, or unequal
  // linewidths without the override flag.
  void validate() const;
};

// Per-cavity complex drive amplitudes.
struct DrivePair {
  Complex f1{0.0, 0.0};
  Complex f2{0.0, 0.0};

  double total_power() const { return std::norm(f1) + std::norm(f2); }
};

// How a total drive amplitude F is split between the cavities.
//  - normalized: F_j = sqrt(gamma_j / (gamma1 + gamma2)) * F, so that
//    |F1|^2 + |F2|^2 = |F|^2 (weights match the output-channel mixing).
//  - unnormalized: F_j = sqrt(gamma_j) * F. Breaks the norm identity by the
//    global factor gamma1 + gamma2; kept as a compatibility switch. The
//    difference cancels in g2 but not in n_out.
enum class DriveWeighting { normalized, unnormalized };

// Split a total amplitude across the two cavities with weights set by the
// output couplings. Requires gamma1 + gamma2 > 0.
DrivePair input_mixing(Complex f_total, double gamma1, double gamma2,
                       DriveWeighting weighting = DriveWeighting::normalized);

// The drive pair implied by params.f under the given weighting.
DrivePair drive_from(const SystemParams& params,
                     DriveWeighting weighting = DriveWeighting::normalized);

// H = sum_j [ e_j n_j + u a_j^dag^2 a_j^2 + f_j a_j^dag + conj(f_j) a_j ]
//     - j (a_1^dag a_2 + a_2^dag a_1)
OperatorMatrix build_hamiltonian(const SystemParams& params, const DrivePair& drive,
                                 const FockSpace& space);

// Reference detunings for a deep g2 minimum at gamma2 = 0:
// (+Gamma/(2 sqrt 3), -Gamma/(2 sqrt 3)).
std::pair<double, double> optimal_detunings(double gamma_tot);

// Matching Kerr strength 2 Gamma^3 / (3 sqrt(3) J^2). Requires J > 0.
double optimal_nonlinearity(double gamma_tot, double j);

}  // namespace dimer
