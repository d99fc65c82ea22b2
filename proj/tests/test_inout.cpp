#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dimer/errors.hpp"
#include "dimer/fock.hpp"
#include "dimer/inout.hpp"
#include "dimer/lindblad.hpp"
#include "dimer/model.hpp"

using namespace dimer;

namespace {

SystemParams canonical_point() {
  SystemParams p;
  p.e1 = 0.2886751345948129;
  p.e2 = -0.2886751345948129;
  p.u = 0.06158402871356008;
  p.j = 2.5;
  p.f = 1e-2;
  p.gamma1 = 0.4;
  p.gamma2 = 0.04;
  return p;
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST_CASE("output mode validation") {
  OutputMode ok{0.4, 0.0};
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS((OutputMode{0.0, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((OutputMode{-0.1, 0.2}.validate()), ConfigError);
}

TEST_CASE("output operator is the weighted sum of the two lowering operators") {
  FockSpace space(3);
  const OutputMode out{0.4, 0.09};
  const auto c = output_operator(space, out);
  const OperatorMatrix want = std::sqrt(0.4) * annihilation(space, 1) +
                              std::sqrt(0.09) * annihilation(space, 2);
  CHECK(OperatorMatrix(c - want).norm() < 1e-15);
}

TEST_CASE("mixed-output correlations at the working point match references") {
  SystemParams p = canonical_point();
  FockSpace space(5);
  const auto result = steady_state(p, drive_from(p), space);
  const OutputMode out{p.gamma1, p.gamma2};
  const auto c = correlations(result.rho, space, out);

  // Reference values from an independent implementation of the same model.
  CHECK(close_rel(c.n_out, 1.7186800684963978e-06, 1e-9));
  CHECK(close_rel(c.g2_out, 0.8627007779313852, 1e-9));

  CHECK(c.n_out == n_out(result.rho, space, out));
  CHECK(c.g2_out == g2_out(result.rho, space, out));
}

TEST_CASE("single-channel collection at the working point matches references") {
  SystemParams p = canonical_point();
  p.gamma2 = 0.0;
  FockSpace space(5);
  const auto result = steady_state(p, drive_from(p), space);
  const auto c = correlations(result.rho, space, OutputMode{p.gamma1, 0.0});
  CHECK(close_rel(c.g2_out, 3.966015464225417, 1e-9));
  CHECK(close_rel(c.n_out, 3.076428776919162e-07, 1e-9));
}

TEST_CASE("operator-product and moment-expanded statistics agree") {
  SystemParams p = canonical_point();
  FockSpace space(5);
  const auto result = steady_state(p, drive_from(p), space);
  for (const OutputMode& out :
       {OutputMode{0.4, 0.04}, OutputMode{0.4, 0.0}, OutputMode{0.1, 0.3}}) {
    const double direct = g2_out(result.rho, space, out);
    const double expanded = g2_out_expanded(result.rho, space, out);
    CHECK(close_rel(direct, expanded, 1e-12));
  }
}

TEST_CASE("correlation is invariant under scaling the collection weights") {
  SystemParams p = canonical_point();
  FockSpace space(5);
  const auto result = steady_state(p, drive_from(p), space);
  const OutputMode base{p.gamma1, p.gamma2};
  const OutputMode scaled{3.0 * p.gamma1, 3.0 * p.gamma2};
  const auto cb = correlations(result.rho, space, base);
  const auto cs = correlations(result.rho, space, scaled);
  CHECK(close_rel(cs.n_out, 3.0 * cb.n_out, 1e-13));
  CHECK(close_rel(cs.g2_out, cb.g2_out, 1e-13));
}

TEST_CASE("occupation stays non-negative for physical states") {
  SystemParams p = canonical_point();
  FockSpace space(4);
  SteadyStateSolver solver(space);
  for (double e1 : {-1.5, -0.3, 0.3, 1.5}) {
    SystemParams q = p;
    q.e1 = e1;
    const auto rho = solver.solve(q, drive_from(q)).rho;
    CHECK(n_out(rho, space, OutputMode{q.gamma1, q.gamma2}) >= -1e-12);
  }
}

TEST_CASE("states without two-photon support have exactly zero correlation") {
  FockSpace space(3);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(space.dim());
  psi(space.index(0, 0)) = std::sqrt(0.99);
  psi(space.index(1, 0)) = 0.08;
  psi(space.index(0, 1)) = Complex(0.0, 0.06);
  psi.normalize();
  DenseMatrix rho = psi * psi.adjoint();
  CHECK(g2_out(rho, space, OutputMode{0.4, 0.04}) == 0.0);
  CHECK(g2_out_expanded(rho, space, OutputMode{0.4, 0.04}) == 0.0);
}

TEST_CASE("vacuum output occupation is rejected as undefined") {
  FockSpace space(2);
  DenseMatrix rho = DenseMatrix::Zero(space.dim(), space.dim());
  rho(space.index(0, 0), space.index(0, 0)) = 1.0;
  CHECK(n_out(rho, space, OutputMode{0.4, 0.0}) == 0.0);
  CHECK_THROWS_AS(g2_out(rho, space, OutputMode{0.4, 0.0}), NumericalError);
}

TEST_CASE("dimension mismatches are rejected") {
  FockSpace space(3);
  DenseMatrix rho = DenseMatrix::Identity(4, 4);
  CHECK_THROWS_AS(n_out(rho, space, OutputMode{0.4, 0.0}), ConfigError);
}

TEST_CASE("a linear system bunches at exactly the coherent level") {
  SystemParams p = canonical_point();
  p.u = 0.0;
  FockSpace space(5);
  const auto result = steady_state(p, drive_from(p), space);
  const auto c = correlations(result.rho, space, OutputMode{p.gamma1, p.gamma2});
  CHECK(std::abs(c.g2_out - 1.0) < 1e-6);
}
