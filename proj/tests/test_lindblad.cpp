#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

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

TEST_CASE("steady state at the working point matches an independent solver") {
  SystemParams p = canonical_point();
  FockSpace space(5);
  const auto result = steady_state(p, drive_from(p), space);

  // Reference values from an independent implementation of the same model.
  const double rho00_ref = 0.9999848102332721;
  const double n1_ref = 1.0527694334887826e-06;
  const double n2_ref = 1.413711309103199e-05;

  const double rho00 = result.rho(space.index(0, 0), space.index(0, 0)).real();
  CHECK(close_rel(rho00, rho00_ref, 1e-10));
  const double n1 = expectation(result.rho, number_operator(space, 1)).real();
  const double n2 = expectation(result.rho, number_operator(space, 2)).real();
  CHECK(close_rel(n1, n1_ref, 1e-9));
  CHECK(close_rel(n2, n2_ref, 1e-9));

  // Output is normalized and exactly hermitian.
  CHECK(std::abs(result.rho.trace().real() - 1.0) < 1e-13);
  CHECK(std::abs(result.rho.trace().imag()) < 1e-15);
  CHECK((result.rho - result.rho.adjoint()).norm() == 0.0);

  // Diagnostics sit within the enforced gates.
  CHECK(result.trace_dev <= kTraceTol);
  CHECK(result.herm_dev <= kHermTol);
  CHECK(result.min_eigenvalue >= kPositivityTol);
  CHECK(result.residual <= kResidualTol);
}

TEST_CASE("solver wrapper and generic stationary solve agree") {
  SystemParams p = canonical_point();
  FockSpace space(4);
  const auto drive = drive_from(p);

  SteadyStateSolver solver(space);
  const auto via_solver = solver.solve(p, drive);
  const auto via_wrapper = steady_state(p, drive, space);
  CHECK((via_solver.rho - via_wrapper.rho).cwiseAbs().maxCoeff() < 1e-14);

  const auto h = build_hamiltonian(p, drive, space);
  const auto l = build_liouvillian(h, standard_channels(p, space));
  const auto via_generic = steady_state(l);
  CHECK((via_solver.rho - via_generic.rho).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cached assembly reproduces the reference liouvillian") {
  SystemParams p = canonical_point();
  p.gamma_pd1 = 0.01;
  p.gamma_pd2 = 0.002;
  FockSpace space(4);
  const auto drive = drive_from(p);

  SteadyStateSolver solver(space);
  const auto assembled = solver.assemble(p, drive);
  const auto h = build_hamiltonian(p, drive, space);
  const auto reference = build_liouvillian(h, standard_channels(p, space));
  CHECK(Liouvillian(assembled - reference).norm() < 1e-12);

  // Refilling at a second point must not leak state from the first.
  SystemParams q = p;
  q.e1 = -1.3;
  q.u = 0.3;
  q.gamma_pd1 = 0.0;
  const auto assembled_q = solver.assemble(q, drive_from(q));
  const auto href = build_hamiltonian(q, drive_from(q), space);
  const auto ref_q = build_liouvillian(href, standard_channels(q, space));
  CHECK(Liouvillian(assembled_q - ref_q).norm() < 1e-12);
}

TEST_CASE("liouvillian annihilates the trace of any state") {
  SystemParams p = canonical_point();
  FockSpace space(3);
  const auto h = build_hamiltonian(p, drive_from(p), space);
  const auto l = build_liouvillian(h, standard_channels(p, space));

  const int dim = space.dim();
  DenseMatrix rho = DenseMatrix::Random(dim, dim);
  rho = ((rho + rho.adjoint()) * 0.5).eval();
  Eigen::VectorXcd vec(dim * dim);
  for (int c = 0; c < dim; ++c) {
    for (int r = 0; r < dim; ++r) vec(c * dim + r) = rho(r, c);
  }
  const Eigen::VectorXcd image = l * vec;
  Complex trace(0.0, 0.0);
  for (int d = 0; d < dim; ++d) trace += image(d * dim + d);
  CHECK(std::abs(trace) < 1e-12 * image.cwiseAbs().maxCoeff());
}

TEST_CASE("liouvillian construction validates its inputs") {
  SystemParams p = canonical_point();
  FockSpace space(2);
  const auto a1 = annihilation(space, 1);

  OperatorMatrix not_hermitian = a1;  // plain lowering operator
  CHECK_THROWS_AS(
      build_liouvillian(not_hermitian, standard_channels(p, space)), ConfigError);

  const auto h = build_hamiltonian(p, drive_from(p), space);
  CHECK_THROWS_AS(build_liouvillian(h, {{a1, -0.5}}), ConfigError);

  FockSpace bigger(3);
  CHECK_THROWS_AS(build_liouvillian(h, {{annihilation(bigger, 1), 1.0}}),
                  ConfigError);

  Liouvillian not_square(10, 10);  // 10 is not a perfect-square stacked size
  CHECK_THROWS_AS(steady_state(not_square), ConfigError);
}

TEST_CASE("standard channels carry the four model rates") {
  SystemParams p = canonical_point();
  p.gamma_pd1 = 0.05;
  FockSpace space(3);
  const auto channels = standard_channels(p, space);
  REQUIRE(channels.size() == 4);
  CHECK(channels[0].second == p.gamma_tot1);
  CHECK(channels[1].second == p.gamma_tot2);
  CHECK(channels[2].second == p.gamma_pd1);
  CHECK(channels[3].second == p.gamma_pd2);
  CHECK(Liouvillian(channels[0].first - annihilation(space, 1)).norm() == 0.0);
  CHECK(Liouvillian(channels[2].first - number_operator(space, 1)).norm() == 0.0);
}

TEST_CASE("global drive phase leaves populations and correlations unchanged") {
  SystemParams p = canonical_point();
  FockSpace space(5);
  SteadyStateSolver solver(space);
  const auto base_drive = drive_from(p);
  const auto base = solver.solve(p, base_drive);

  const Complex phase = std::polar(1.0, 1.234);
  DrivePair rotated{base_drive.f1 * phase, base_drive.f2 * phase};
  const auto turned = solver.solve(p, rotated);

  const OutputMode out{p.gamma1, p.gamma2};
  const auto c0 = correlations(base.rho, space, out);
  const auto c1 = correlations(turned.rho, space, out);
  CHECK(close_rel(c0.n_out, c1.n_out, 1e-9));
  CHECK(close_rel(c0.g2_out, c1.g2_out, 1e-9));
  const int vac = space.index(0, 0);
  CHECK(std::abs(base.rho(vac, vac) - turned.rho(vac, vac)) < 1e-12);
}

TEST_CASE("a lossless decoupled cavity leaves the stationary state degenerate") {
  SystemParams p = canonical_point();
  p.j = 0.0;
  p.gamma2 = 0.0;
  p.gamma_tot2 = 0.0;
  p.allow_unequal_linewidths = true;
  FockSpace space(3);
  // Mode 2 is now isolated, undriven, and dissipation-free: any of its
  // diagonal states is stationary, so no unique solution exists.
  CHECK_THROWS_AS(steady_state(p, DrivePair{Complex(1e-2, 0.0), Complex(0.0, 0.0)},
                               space),
                  DegenerateSteadyState);
}

TEST_CASE("physicality stats track extrema across solves") {
  SteadyStateResult a;
  a.trace_dev = 1e-13;
  a.herm_dev = 2e-14;
  a.min_eigenvalue = -3e-12;
  a.residual = 4e-11;
  SteadyStateResult b;
  b.trace_dev = 5e-14;
  b.herm_dev = 6e-13;
  b.min_eigenvalue = 1e-9;
  b.residual = 2e-12;

  PhysicalityStats stats;
  stats.absorb(a);
  stats.absorb(b);
  CHECK(stats.count == 2);
  CHECK(stats.max_trace_dev == 1e-13);
  CHECK(stats.max_herm_dev == 6e-13);
  CHECK(stats.min_eigenvalue == -3e-12);
  CHECK(stats.max_residual == 4e-11);

  PhysicalityStats other;
  other.absorb(b);
  PhysicalityStats merged = stats;
  merged.merge(other);
  CHECK(merged.count == 3);
  CHECK(merged.max_trace_dev == 1e-13);
  CHECK(merged.min_eigenvalue == -3e-12);
}

TEST_CASE("truncation scan reports a small cutoff for a weak pump") {
  SystemParams p = canonical_point();
  CHECK_THROWS_AS(convergence_check(p, 0.0), ConfigError);
  CHECK_THROWS_AS(convergence_check(p, 1e-3, 0), ConfigError);

  SystemParams quiet = p;
  quiet.f = 0.0;
  CHECK(convergence_check(quiet, 1e-3) == 1);

  const int n = convergence_check(p, 1e-3);
  CHECK(n >= 2);
  CHECK(n <= 5);

  // An absurdly tight tolerance with a tiny cap cannot converge.
  CHECK_THROWS_AS(convergence_check(p, 1e-15, 1), NumericalError);
}
