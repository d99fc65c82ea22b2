#include "dimer/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "dimer/errors.hpp"
#include "dimer/inout.hpp"

namespace dimer {

namespace {

using Sparse = Eigen::SparseMatrix<Complex>;

Sparse identity(int n) {
  Sparse id(n, n);
  id.setIdentity();
  return id;
}

// Superoperator for -i [H, rho] on column-stacked rho:
// vec(H rho) = (I (x) H) vec(rho), vec(rho H) = (H^T (x) I) vec(rho).
Sparse hamiltonian_term(const Sparse& h) {
  const int d = static_cast<int>(h.rows());
  const Sparse id = identity(d);
  Sparse left = Eigen::kroneckerProduct(id, h).eval();
  Sparse right = Eigen::kroneckerProduct(Sparse(h.transpose()), id).eval();
  Sparse out = Complex(0.0, -1.0) * (left - right);
  out.prune(0.0, 0.0);
  out.makeCompressed();
  return out;
}

// Superoperator for the unit-rate dissipator
// (1/2) (2 O rho O^dag - O^dag O rho - rho O^dag O).
Sparse dissipator_term(const Sparse& o) {
  const int d = static_cast<int>(o.rows());
  const Sparse id = identity(d);
  const Sparse odag_o = (Sparse(o.adjoint()) * o).pruned();
  Sparse sandwich = Eigen::kroneckerProduct(Sparse(o.conjugate()), o).eval();
  Sparse left = Eigen::kroneckerProduct(id, odag_o).eval();
  Sparse right = Eigen::kroneckerProduct(Sparse(odag_o.transpose()), id).eval();
  Sparse out = sandwich - 0.5 * left - 0.5 * right;
  out.prune(0.0, 0.0);
  out.makeCompressed();
  return out;
}

double hermiticity_deviation(const Sparse& h) {
  Sparse dev = h - Sparse(h.adjoint());
  double worst = 0.0;
  for (int col = 0; col < dev.outerSize(); ++col) {
    for (Sparse::InnerIterator it(dev, col); it; ++it) {
      worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

// Diagnostics and cleanup shared by both solve paths: measure the raw
// solution, then return the hermitized, renormalized state.
SteadyStateResult package_state(const Eigen::VectorXcd& x, int dim) {
  SteadyStateResult result;
  Eigen::Map<const DenseMatrix> raw(x.data(), dim, dim);
  const double trace = raw.real().trace();
  result.trace_dev = std::abs(trace - 1.0);
  result.herm_dev = (DenseMatrix(raw) - DenseMatrix(raw.adjoint())).cwiseAbs().maxCoeff();
  result.rho = ((raw + raw.adjoint()) * (0.5 / trace)).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(result.rho,
                                                 Eigen::EigenvaluesOnly);
  result.min_eigenvalue = eig.eigenvalues().minCoeff();
  return result;
}

void enforce_tolerances(const SteadyStateResult& result) {
  if (result.trace_dev > kTraceTol) {
    throw NumericalError("steady_state: trace deviation above tolerance");
  }
  if (result.herm_dev > kHermTol) {
    throw NumericalError("steady_state: hermiticity deviation above tolerance");
  }
  if (result.min_eigenvalue < kPositivityTol) {
    throw NumericalError("steady_state: negative eigenvalue beyond tolerance");
  }
  if (result.residual > kResidualTol) {
    throw NumericalError("steady_state: stationarity residual above tolerance");
  }
}

}  // namespace

Liouvillian build_liouvillian(
    const OperatorMatrix& hamiltonian,
    const std::vector<std::pair<OperatorMatrix, double>>& channels) {
  const double scale = std::max(1.0, hamiltonian.coeffs().abs().maxCoeff());
  if (hermiticity_deviation(hamiltonian) > 1e-12 * scale) {
    throw ConfigError("build_liouvillian: Hamiltonian is not Hermitian");
  }
  Liouvillian total = hamiltonian_term(hamiltonian);
  for (const auto& [op, rate] : channels) {
    if (rate < 0.0) throw ConfigError("build_liouvillian: negative channel rate");
    if (op.rows() != hamiltonian.rows()) {
      throw ConfigError("build_liouvillian: channel dimension mismatch");
    }
    if (rate == 0.0) continue;
    total = (total + rate * dissipator_term(op)).eval();
  }
  total.makeCompressed();
  return total;
}

std::vector<std::pair<OperatorMatrix, double>> standard_channels(
    const SystemParams& params, const FockSpace& space) {
  return {{annihilation(space, 1), params.gamma_tot1},
          {annihilation(space, 2), params.gamma_tot2},
          {number_operator(space, 1), params.gamma_pd1},
          {number_operator(space, 2), params.gamma_pd2}};
}

void PhysicalityStats::absorb(const SteadyStateResult& r) {
  ++count;
  max_trace_dev = std::max(max_trace_dev, r.trace_dev);
  max_herm_dev = std::max(max_herm_dev, r.herm_dev);
  min_eigenvalue = std::min(min_eigenvalue, r.min_eigenvalue);
  max_residual = std::max(max_residual, r.residual);
}

void PhysicalityStats::merge(const PhysicalityStats& other) {
  count += other.count;
  max_trace_dev = std::max(max_trace_dev, other.max_trace_dev);
  max_herm_dev = std::max(max_herm_dev, other.max_herm_dev);
  min_eigenvalue = std::min(min_eigenvalue, other.min_eigenvalue);
  max_residual = std::max(max_residual, other.max_residual);
}

// The Liouvillian is linear in 12 scalar coefficients, each multiplying a
// constant sparse matrix: two detunings, the Kerr shift, the hopping, the
// real and imaginary drive quadratures of each cavity, two radiative rates,
// and two dephasing rates. The solver precomputes those matrices, their
// union sparsity pattern, and the symbolic factorization; a parameter point
// then costs one value fill plus one numeric factorization.
struct SteadyStateSolver::Impl {
  enum TermId {
    kDetune1, kDetune2, kKerr, kHop,
    kDriveRe1, kDriveIm1, kDriveRe2, kDriveIm2,
    kLoss1, kLoss2, kDephase1, kDephase2,
    kTermCount
  };

  explicit Impl(const FockSpace& s) : space(s), dim(s.dim()) {
    build_terms();
    build_pattern();
    lu.isSymmetric(false);
    lu.analyzePattern(work);
  }

  FockSpace space;
  int dim;
  // Per-term value updates as (offset into the pattern's value array, value).
  std::vector<std::vector<std::pair<int, Complex>>> term_updates;
  // Row-0 slots: offset plus the value the trace-constraint row puts there.
  std::vector<std::pair<int, double>> row0_slots;
  Sparse work;  // union pattern, values rewritten per solve
  Eigen::SparseLU<Sparse> lu;
  Eigen::VectorXcd rhs;

  std::array<Sparse, kTermCount> make_term_matrices() const {
    const Sparse a1 = annihilation(space, 1);
    const Sparse a2 = annihilation(space, 2);
    const Sparse n1 = number_operator(space, 1);
    const Sparse n2 = number_operator(space, 2);
    const Sparse ad1 = a1.adjoint();
    const Sparse ad2 = a2.adjoint();

    // Kerr generator n (n - 1) summed over both modes.
    Sparse kerr = (Sparse(n1 * n1) - n1 + Sparse(n2 * n2) - n2).pruned();
    // Hopping generator -(a1^dag a2 + a2^dag a1).
    Sparse hop = (Complex(-1.0, 0.0) * (Sparse(ad1 * a2) + Sparse(ad2 * a1))).pruned();
    // Drive quadratures: (a^dag + a) and i (a^dag - a), both Hermitian.
    Sparse dre1 = (ad1 + a1).pruned();
    Sparse dim1 = (Complex(0.0, 1.0) * (ad1 - a1)).pruned();
    Sparse dre2 = (ad2 + a2).pruned();
    Sparse dim2 = (Complex(0.0, 1.0) * (ad2 - a2)).pruned();

    std::array<Sparse, kTermCount> t;
    t[kDetune1] = hamiltonian_term(n1);
    t[kDetune2] = hamiltonian_term(n2);
    t[kKerr] = hamiltonian_term(kerr);
    t[kHop] = hamiltonian_term(hop);
    t[kDriveRe1] = hamiltonian_term(dre1);
    t[kDriveIm1] = hamiltonian_term(dim1);
    t[kDriveRe2] = hamiltonian_term(dre2);
    t[kDriveIm2] = hamiltonian_term(dim2);
    t[kLoss1] = dissipator_term(a1);
    t[kLoss2] = dissipator_term(a2);
    t[kDephase1] = dissipator_term(n1);
    t[kDephase2] = dissipator_term(n2);
    return t;
  }

  std::array<Sparse, kTermCount> terms_cache;

  void build_terms() { terms_cache = make_term_matrices(); }

  void build_pattern() {
    const int big = dim * dim;
    std::vector<Eigen::Triplet<double>> shape;
    for (const auto& t : terms_cache) {
      for (int col = 0; col < t.outerSize(); ++col) {
        for (Sparse::InnerIterator it(t, col); it; ++it) {
          shape.emplace_back(static_cast<int>(it.row()), col, 1.0);
        }
      }
    }
    // Trace-constraint slots: row 0 must exist at every stacked diagonal.
    for (int i = 0; i < dim; ++i) shape.emplace_back(0, i * dim + i, 1.0);

    Eigen::SparseMatrix<double> pattern(big, big);
    pattern.setFromTriplets(shape.begin(), shape.end());
    pattern.makeCompressed();

    work = pattern.cast<Complex>();
    work.makeCompressed();

    // Map each term's nonzeros to offsets in the union value array.
    const int* outer = work.outerIndexPtr();
    const int* inner = work.innerIndexPtr();
    auto offset_of = [&](int row, int col) {
      const int* begin = inner + outer[col];
      const int* end = inner + outer[col + 1];
      const int* pos = std::lower_bound(begin, end, row);
      return static_cast<int>(pos - inner);
    };
    term_updates.assign(kTermCount, {});
    for (int t = 0; t < kTermCount; ++t) {
      auto& updates = term_updates[t];
      updates.reserve(terms_cache[t].nonZeros());
      for (int col = 0; col < terms_cache[t].outerSize(); ++col) {
        for (Sparse::InnerIterator it(terms_cache[t], col); it; ++it) {
          updates.emplace_back(offset_of(static_cast<int>(it.row()), col), it.value());
        }
      }
    }
    // All row-0 slots in the union pattern, with the trace-row value.
    for (int col = 0; col < big; ++col) {
      if (outer[col] < outer[col + 1] && inner[outer[col]] == 0) {
        const bool diagonal = (col % dim) == (col / dim);
        row0_slots.emplace_back(outer[col], diagonal ? 1.0 : 0.0);
      }
    }
    rhs = Eigen::VectorXcd::Zero(big);
    rhs(0) = Complex(1.0, 0.0);
  }

  std::array<double, kTermCount> coefficients(const SystemParams& p,
                                              const DrivePair& d) const {
    std::array<double, kTermCount> c{};
    c[kDetune1] = p.e1;
    c[kDetune2] = p.e2;
    c[kKerr] = p.u;
    c[kHop] = p.j;
    c[kDriveRe1] = d.f1.real();
    c[kDriveIm1] = d.f1.imag();
    c[kDriveRe2] = d.f2.real();
    c[kDriveIm2] = d.f2.imag();
    c[kLoss1] = p.gamma_tot1;
    c[kLoss2] = p.gamma_tot2;
    c[kDephase1] = p.gamma_pd1;
    c[kDephase2] = p.gamma_pd2;
    return c;
  }

  void fill_values(const SystemParams& p, const DrivePair& d) {
    Complex* vals = work.valuePtr();
    std::fill(vals, vals + work.nonZeros(), Complex(0.0, 0.0));
    const auto coeff = coefficients(p, d);
    for (int t = 0; t < kTermCount; ++t) {
      if (coeff[t] == 0.0) continue;
      const double c = coeff[t];
      for (const auto& [off, v] : term_updates[t]) vals[off] += c * v;
    }
  }
};

SteadyStateSolver::SteadyStateSolver(const FockSpace& space)
    : impl_(std::make_unique<Impl>(space)) {}
SteadyStateSolver::~SteadyStateSolver() = default;
SteadyStateSolver::SteadyStateSolver(SteadyStateSolver&&) noexcept = default;
SteadyStateSolver& SteadyStateSolver::operator=(SteadyStateSolver&&) noexcept = default;

const FockSpace& SteadyStateSolver::space() const { return impl_->space; }

Liouvillian SteadyStateSolver::assemble(const SystemParams& params,
                                        const DrivePair& drive) {
  params.validate();
  impl_->fill_values(params, drive);
  Liouvillian out = impl_->work;
  out.makeCompressed();
  return out;
}

SteadyStateResult SteadyStateSolver::solve(const SystemParams& params,
                                           const DrivePair& drive) {
  params.validate();
  // Degeneracy is structural, not numerical: a factorization of the singular
  // system can still return one member of the stationary family, and every
  // member passes the residual gate. Radiative loss must reach both modes.
  // Dephasing never relaxes populations, so it cannot stand in for loss.
  if (params.gamma_tot1 == 0.0 && params.gamma_tot2 == 0.0) {
    throw DegenerateSteadyState(
        "steady_state: no radiative loss in either cavity; the stationary "
        "state is not unique");
  }
  if (params.j == 0.0 &&
      (params.gamma_tot1 == 0.0 || params.gamma_tot2 == 0.0)) {
    throw DegenerateSteadyState(
        "steady_state: a lossless cavity decoupled from the lossy one keeps "
        "a stationary family; no unique steady state");
  }
  auto& im = *impl_;
  const int dim = im.dim;

  im.fill_values(params, drive);
  // Impose the trace constraint in place of the vacuum-population row,
  // remembering the displaced Liouvillian values for the residual check.
  Complex* vals = im.work.valuePtr();
  std::vector<Complex> displaced(im.row0_slots.size());
  for (size_t k = 0; k < im.row0_slots.size(); ++k) {
    displaced[k] = vals[im.row0_slots[k].first];
    vals[im.row0_slots[k].first] = Complex(im.row0_slots[k].second, 0.0);
  }

  im.lu.factorize(im.work);
  if (im.lu.info() != Eigen::Success) {
    // A zero pivot here means the trace constraint did not pin a unique
    // state: the dissipative structure leaves a stationary family.
    for (size_t k = 0; k < im.row0_slots.size(); ++k) {
      vals[im.row0_slots[k].first] = displaced[k];
    }
    throw DegenerateSteadyState(
        "steady_state: stationary system is singular (no unique steady state)");
  }
  Eigen::VectorXcd x = im.lu.solve(im.rhs);
  if (im.lu.info() != Eigen::Success) {
    throw NumericalError("steady_state: triangular solve failed");
  }

  SteadyStateResult result = package_state(x, dim);

  // Restore the Liouvillian row and measure || L[rho] ||_inf on the
  // hermitized, normalized state actually returned.
  for (size_t k = 0; k < im.row0_slots.size(); ++k) {
    vals[im.row0_slots[k].first] = displaced[k];
  }
  Eigen::Map<const Eigen::VectorXcd> rho_vec(result.rho.data(),
                                             static_cast<Eigen::Index>(dim) * dim);
  result.residual = (im.work * rho_vec).cwiseAbs().maxCoeff();

  enforce_tolerances(result);
  return result;
}

SteadyStateResult steady_state(const Liouvillian& liouvillian) {
  const Eigen::Index big = liouvillian.rows();
  const int dim = static_cast<int>(std::lround(std::sqrt(double(big))));
  if (liouvillian.cols() != big || Eigen::Index(dim) * dim != big) {
    throw ConfigError("steady_state: Liouvillian must be dim^2 x dim^2");
  }

  // Copy all rows except the vacuum-population one, which the trace
  // constraint replaces.
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<size_t>(liouvillian.nonZeros()) + dim);
  for (int col = 0; col < liouvillian.outerSize(); ++col) {
    for (Sparse::InnerIterator it(liouvillian, col); it; ++it) {
      if (it.row() != 0) {
        entries.emplace_back(static_cast<int>(it.row()), col, it.value());
      }
    }
  }
  for (int i = 0; i < dim; ++i) {
    entries.emplace_back(0, i * dim + i, Complex(1.0, 0.0));
  }
  Sparse constrained(big, big);
  constrained.setFromTriplets(entries.begin(), entries.end());
  constrained.makeCompressed();

  Eigen::SparseLU<Sparse> lu;
  lu.compute(constrained);
  if (lu.info() != Eigen::Success) {
    throw DegenerateSteadyState(
        "steady_state: stationary system is singular (no unique steady state)");
  }
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(big);
  rhs(0) = Complex(1.0, 0.0);
  Eigen::VectorXcd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) {
    throw NumericalError("steady_state: triangular solve failed");
  }

  SteadyStateResult result = package_state(x, dim);
  Eigen::Map<const Eigen::VectorXcd> rho_vec(result.rho.data(), big);
  result.residual = (liouvillian * rho_vec).cwiseAbs().maxCoeff();
  enforce_tolerances(result);
  return result;
}

SteadyStateResult steady_state(const SystemParams& params, const DrivePair& drive,
                               const FockSpace& space) {
  SteadyStateSolver solver(space);
  return solver.solve(params, drive);
}

int convergence_check(const SystemParams& params, const DrivePair& drive,
                      double tolerance, int cap) {
  if (!(tolerance > 0.0)) {
    throw ConfigError("convergence_check: tolerance must be positive");
  }
  if (cap < 1) throw ConfigError("convergence_check: cap must be at least 1");
  if (drive.total_power() == 0.0) return 1;  // undriven: exact vacuum

  const OutputMode out{params.gamma1, params.gamma2};
  double previous = 0.0;
  bool have_previous = false;
  for (int n = 1; n <= cap; ++n) {
    const FockSpace space(n);
    const SteadyStateResult rs = steady_state(params, drive, space);
    const double value = g2_out(rs.rho, space, out);
    if (have_previous) {
      const double change =
          std::abs(value - previous) / std::max(std::abs(value), 1e-12);
      if (change < tolerance) return n - 1;
    }
    previous = value;
    have_previous = true;
  }
  throw NumericalError("convergence_check: no convergence below the cutoff cap");
}

int convergence_check(const SystemParams& params, double tolerance, int cap) {
  if (!(tolerance > 0.0)) {
    throw ConfigError("convergence_check: tolerance must be positive");
  }
  if (params.f == 0.0) return 1;
  return convergence_check(params, drive_from(params, DriveWeighting::normalized),
                           tolerance, cap);
}

}  // namespace dimer
