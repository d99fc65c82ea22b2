#include "dimer/inout.hpp"

#include <cmath>

#include "dimer/errors.hpp"

namespace dimer {

void OutputMode::validate() const {
  if (gamma1 < 0.0 || gamma2 < 0.0) {
    throw ConfigError("OutputMode: coupling weights must be non-negative");
  }
  if (gamma1 == 0.0 && gamma2 == 0.0) {
    throw ConfigError("OutputMode: at least one coupling weight must be positive");
  }
}

OperatorMatrix output_operator(const FockSpace& space, const OutputMode& out) {
  out.validate();
  OperatorMatrix c = std::sqrt(out.gamma1) * annihilation(space, 1) +
                     std::sqrt(out.gamma2) * annihilation(space, 2);
  c.makeCompressed();
  return c;
}

double n_out(const DenseMatrix& rho, const FockSpace& space,
             const OutputMode& out) {
  out.validate();
  if (rho.rows() != space.dim() || rho.cols() != space.dim()) {
    throw ConfigError("n_out: density matrix does not match the Fock space");
  }
  const OperatorMatrix a1 = annihilation(space, 1);
  const OperatorMatrix a2 = annihilation(space, 2);
  const double pop1 = expectation(rho, number_operator(space, 1)).real();
  const double pop2 = expectation(rho, number_operator(space, 2)).real();
  const OperatorMatrix cross =
      (OperatorMatrix(a1.adjoint()) * a2 + OperatorMatrix(a2.adjoint()) * a1)
          .pruned();
  const double coherence = expectation(rho, cross).real();
  return out.gamma1 * pop1 + out.gamma2 * pop2 +
         std::sqrt(out.gamma1 * out.gamma2) * coherence;
}

double g2_out(const DenseMatrix& rho, const FockSpace& space,
              const OutputMode& out) {
  const double occupation = n_out(rho, space, out);
  if (!(occupation > 0.0)) {
    throw NumericalError("g2_out: zero output occupation, correlation undefined");
  }
  const OperatorMatrix c = output_operator(space, out);
  const OperatorMatrix c2 = (c * c).pruned();
  const OperatorMatrix moment = (OperatorMatrix(c2.adjoint()) * c2).pruned();
  const double pair_rate = expectation(rho, moment).real();
  return pair_rate / (occupation * occupation);
}

double g2_out_expanded(const DenseMatrix& rho, const FockSpace& space,
                       const OutputMode& out) {
  const double occupation = n_out(rho, space, out);
  if (!(occupation > 0.0)) {
    throw NumericalError("g2_out: zero output occupation, correlation undefined");
  }
  const OperatorMatrix ops[2] = {annihilation(space, 1), annihilation(space, 2)};
  const double weights[2] = {out.gamma1, out.gamma2};
  double pair_rate = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      for (int l = 0; l < 2; ++l) {
        for (int m = 0; m < 2; ++m) {
          const double w =
              std::sqrt(weights[j] * weights[k] * weights[l] * weights[m]);
          if (w == 0.0) continue;
          const OperatorMatrix moment =
              (OperatorMatrix(ops[j].adjoint()) *
               OperatorMatrix(OperatorMatrix(ops[k].adjoint()) *
                              OperatorMatrix(ops[l] * ops[m])))
                  .pruned();
          pair_rate += w * expectation(rho, moment).real();
        }
      }
    }
  }
  return pair_rate / (occupation * occupation);
}

CorrelationResult correlations(const DenseMatrix& rho, const FockSpace& space,
                               const OutputMode& out) {
  CorrelationResult result;
  result.n_out = n_out(rho, space, out);
  result.g2_out = g2_out(rho, space, out);
  return result;
}

}  // namespace dimer
