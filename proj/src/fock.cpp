#include "dimer/fock.hpp"

#include <cmath>
#include <vector>

#include "dimer/errors.hpp"

namespace dimer {

FockSpace::FockSpace(int n_max1_, int n_max2_) : n_max1(n_max1_), n_max2(n_max2_) {
  if (n_max1 < 1 || n_max2 < 1) {
    throw ConfigError("FockSpace: per-mode cutoff must be at least 1");
  }
}

int FockSpace::index(int n1, int n2) const {
  if (n1 < 0 || n1 > n_max1 || n2 < 0 || n2 > n_max2) {
    throw ConfigError("FockSpace::index: occupation out of range");
  }
  return n1 * d2() + n2;
}

std::pair<int, int> FockSpace::occupations(int idx) const {
  if (idx < 0 || idx >= dim()) {
    throw ConfigError("FockSpace::occupations: index out of range");
  }
  return {idx / d2(), idx % d2()};
}

OperatorMatrix annihilation(const FockSpace& space, int mode) {
  if (mode != 1 && mode != 2) {
    throw ConfigError("annihilation: mode must be 1 or 2");
  }
  std::vector<Eigen::Triplet<Complex>> entries;
  const int n_cap = (mode == 1) ? space.n_max1 : space.n_max2;
  entries.reserve(static_cast<size_t>(space.dim()));
  for (int n1 = 0; n1 <= space.n_max1; ++n1) {
    for (int n2 = 0; n2 <= space.n_max2; ++n2) {
      const int n = (mode == 1) ? n1 : n2;
      if (n == 0 || n > n_cap) continue;
      const int row = (mode == 1) ? space.index(n1 - 1, n2) : space.index(n1, n2 - 1);
      entries.emplace_back(row, space.index(n1, n2), Complex(std::sqrt(double(n)), 0.0));
    }
  }
  OperatorMatrix a(space.dim(), space.dim());
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  return a;
}

OperatorMatrix number_operator(const FockSpace& space, int mode) {
  if (mode != 1 && mode != 2) {
    throw ConfigError("number_operator: mode must be 1 or 2");
  }
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<size_t>(space.dim()));
  for (int n1 = 0; n1 <= space.n_max1; ++n1) {
    for (int n2 = 0; n2 <= space.n_max2; ++n2) {
      const int n = (mode == 1) ? n1 : n2;
      if (n == 0) continue;
      const int idx = space.index(n1, n2);
      entries.emplace_back(idx, idx, Complex(double(n), 0.0));
    }
  }
  OperatorMatrix num(space.dim(), space.dim());
  num.setFromTriplets(entries.begin(), entries.end());
  num.makeCompressed();
  return num;
}

Complex expectation(const DenseMatrix& rho, const OperatorMatrix& op) {
  if (rho.rows() != op.rows() || rho.cols() != op.cols()) {
    throw ConfigError("expectation: dimension mismatch");
  }
  // Tr(rho * op) = sum_{ij} rho(i, j) op(j, i).
  Complex trace(0.0, 0.0);
  for (int col = 0; col < op.outerSize(); ++col) {
    for (OperatorMatrix::InnerIterator it(op, col); it; ++it) {
      trace += rho(col, it.row()) * it.value();
    }
  }
  return trace;
}

}  // namespace dimer
