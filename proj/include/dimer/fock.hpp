#pragma once

#include <complex>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dimer {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::SparseMatrix<Complex>;
using DenseMatrix = Eigen::MatrixXcd;

// Truncated two-mode bosonic space. Basis states |n1, n2> with
// n1 in [0, n_max1], n2 in [0, n_max2], flattened with mode 1 slow:
// index(n1, n2) = n1 * (n_max2 + 1) + n2.
struct FockSpace {
  int n_max1;
  int n_max2;

  explicit FockSpace(int n_max) : FockSpace(n_max, n_max) {}
  FockSpace(int n_max1_, int n_max2_);

  int d1() const { return n_max1 + 1; }
  int d2() const { return n_max2 + 1; }
  int dim() const { return d1() * d2(); }

  int index(int n1, int n2) const;
  std::pair<int, int> occupations(int idx) const;
};

// Annihilation operator for the given mode (1 or 2): <n-1|a|n> = sqrt(n).
OperatorMatrix annihilation(const FockSpace& space, int mode);

// Number operator a^dag a for the given mode (diagonal).
OperatorMatrix number_operator(const FockSpace& space, int mode);

// Tr(rho * op).
Complex expectation(const DenseMatrix& rho, const OperatorMatrix& op);

}  // namespace dimer
