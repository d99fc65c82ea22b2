#pragma once

#include "dimer/fock.hpp"

namespace dimer {

// Coupling weights of a collection waveguide. Either guide of the symmetric
// pair is described the same way, so one type serves both.
struct OutputMode {
  double gamma1 = 0.0;
  double gamma2 = 0.0;

  // Rates must be non-negative and not both zero.
  void validate() const;
};

struct CorrelationResult {
  double n_out = 0.0;
  double g2_out = 0.0;
};

// The collected field operator sqrt(gamma1) a_1 + sqrt(gamma2) a_2. Vacuum
// input contributes nothing to normally ordered moments.
OperatorMatrix output_operator(const FockSpace& space, const OutputMode& out);

// Mean occupation of the collected mode, expanded as
// gamma1 <n_1> + gamma2 <n_2> + sqrt(gamma1 gamma2) <a1^dag a2 + a2^dag a1>.
double n_out(const DenseMatrix& rho, const FockSpace& space,
             const OutputMode& out);

// Zero-delay second-order correlation of the collected field,
// <c^dag c^dag c c> / n_out^2, evaluated from the operator product.
// Throws NumericalError when the output occupation vanishes.
double g2_out(const DenseMatrix& rho, const FockSpace& space,
              const OutputMode& out);

// Same statistic assembled term by term from the sixteen mode-operator
// moments sqrt(g_j g_k g_l g_m) <a_j^dag a_k^dag a_l a_m>; cross-checks the
// operator-product path.
double g2_out_expanded(const DenseMatrix& rho, const FockSpace& space,
                       const OutputMode& out);

// Both observables in one pass.
CorrelationResult correlations(const DenseMatrix& rho, const FockSpace& space,
                               const OutputMode& out);

}  // namespace dimer
