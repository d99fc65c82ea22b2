#include "dimer/model.hpp"

#include <cmath>
#include <vector>

#include "dimer/errors.hpp"

namespace dimer {

void SystemParams::validate() const {
  if (gamma_tot1 < 0.0 || gamma_tot2 < 0.0) {
    throw ConfigError("SystemParams: total linewidths must be non-negative");
  }
  if (gamma1 < 0.0 || gamma2 < 0.0) {
    throw ConfigError("SystemParams: output couplings must be non-negative");
  }
  if (f < 0.0) {
    throw ConfigError("SystemParams: total drive amplitude must be non-negative");
  }
  if (kappa1() < -1e-12 || kappa2() < -1e-12) {
    throw ConfigError(
        "SystemParams: internal loss kappa_j = gamma_tot - 2 gamma_j must stay "
        "non-negative (gamma_j <= gamma_tot / 2)");
  }
  if (gamma_pd1 < 0.0 || gamma_pd2 < 0.0) {
    throw ConfigError("SystemParams: dephasing rates must be non-negative");
  }
  if (!allow_unequal_linewidths && gamma_tot1 != gamma_tot2) {
    throw ConfigError(
        "SystemParams: unequal linewidths require allow_unequal_linewidths");
  }
  for (double v : {e1, e2, u, j, f, gamma1, gamma2, gamma_tot1, gamma_tot2,
                   gamma_pd1, gamma_pd2}) {
    if (!std::isfinite(v)) throw ConfigError("SystemParams: non-finite parameter");
  }
}

DrivePair drive_from(const SystemParams& params, DriveWeighting weighting) {
  return input_mixing(Complex(params.f, 0.0), params.gamma1, params.gamma2,
                      weighting);
}

DrivePair input_mixing(Complex f_total, double gamma1, double gamma2,
                       DriveWeighting weighting) {
  if (gamma1 < 0.0 || gamma2 < 0.0) {
    throw ConfigError("input_mixing: couplings must be non-negative");
  }
  const double sum = gamma1 + gamma2;
  if (!(sum > 0.0)) {
    throw ConfigError("input_mixing: no input channel (gamma1 + gamma2 == 0)");
  }
  DrivePair drive;
  if (weighting == DriveWeighting::normalized) {
    drive.f1 = std::sqrt(gamma1 / sum) * f_total;
    drive.f2 = std::sqrt(gamma2 / sum) * f_total;
  } else {
    drive.f1 = std::sqrt(gamma1) * f_total;
    drive.f2 = std::sqrt(gamma2) * f_total;
  }
  return drive;
}

OperatorMatrix build_hamiltonian(const SystemParams& params, const DrivePair& drive,
                                 const FockSpace& space) {
  params.validate();
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<size_t>(space.dim()) * 4);
  for (int n1 = 0; n1 <= space.n_max1; ++n1) {
    for (int n2 = 0; n2 <= space.n_max2; ++n2) {
      const int col = space.index(n1, n2);
      // Diagonal: detuning + Kerr, u * adag^2 a^2 = u * n (n - 1) per mode.
      const double diag = params.e1 * n1 + params.e2 * n2 +
                          params.u * (n1 * (n1 - 1.0) + n2 * (n2 - 1.0));
      if (diag != 0.0) entries.emplace_back(col, col, Complex(diag, 0.0));
      // Drive: f_j a_j^dag lifts |n_j> to |n_j + 1>; h.c. added explicitly.
      if (n1 < space.n_max1 && drive.f1 != Complex(0.0, 0.0)) {
        const Complex amp = drive.f1 * std::sqrt(n1 + 1.0);
        entries.emplace_back(space.index(n1 + 1, n2), col, amp);
        entries.emplace_back(col, space.index(n1 + 1, n2), std::conj(amp));
      }
      if (n2 < space.n_max2 && drive.f2 != Complex(0.0, 0.0)) {
        const Complex amp = drive.f2 * std::sqrt(n2 + 1.0);
        entries.emplace_back(space.index(n1, n2 + 1), col, amp);
        entries.emplace_back(col, space.index(n1, n2 + 1), std::conj(amp));
      }
      // Hopping: -j a_1^dag a_2 moves a photon 2 -> 1; h.c. added explicitly.
      if (params.j != 0.0 && n2 > 0 && n1 < space.n_max1) {
        const Complex amp(-params.j * std::sqrt((n1 + 1.0) * n2), 0.0);
        entries.emplace_back(space.index(n1 + 1, n2 - 1), col, amp);
        entries.emplace_back(col, space.index(n1 + 1, n2 - 1), amp);
      }
    }
  }
  OperatorMatrix h(space.dim(), space.dim());
  h.setFromTriplets(entries.begin(), entries.end());
  h.makeCompressed();
  return h;
}

std::pair<double, double> optimal_detunings(double gamma_tot) {
  if (!(gamma_tot > 0.0)) {
    throw ConfigError("optimal_detunings: gamma_tot must be positive");
  }
  const double e = gamma_tot / (2.0 * std::sqrt(3.0));
  return {e, -e};
}

double optimal_nonlinearity(double gamma_tot, double j) {
  if (!(j > 0.0)) {
    throw ConfigError("optimal_nonlinearity: coupling j must be positive");
  }
  return 2.0 * gamma_tot * gamma_tot * gamma_tot / (3.0 * std::sqrt(3.0) * j * j);
}

}  // namespace dimer
