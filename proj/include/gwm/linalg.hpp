#pragma once

#include <cstddef>
#include <vector>

namespace gwm {

/// Small dense square matrix, row-major. Sizes here are tiny (<= 16), so
/// everything below is plain O(n^3) with no blocking.
struct SquareMatrix {
  int n = 0;
  std::vector<double> a;  // n*n, row-major

  SquareMatrix() = default;
  explicit SquareMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }

  double trace() const;
};

/// Solves the symmetric positive semidefinite system A x = b for several
/// right-hand sides (rhs is n x m, column j is one rhs; solution overwrites
/// rhs). Root-free LDL^T without pivoting; returns false when a pivot falls
/// below roundoff relative to the largest diagonal entry, which is how
/// rank-deficient moment matrices surface.
bool solve_spd(const SquareMatrix& A, std::vector<double>& rhs, int m);

struct EigenDecomposition {
  std::vector<double> values;   // ascending
  SquareMatrix vectors;         // column j pairs with values[j]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Deterministic: fixed (p, q) sweep order, eigenvalues sorted ascending with
/// index-stable ties, and each eigenvector's sign fixed so its largest-|.|
/// entry is positive. Throws Error(EigenFailure) if the off-diagonal mass has
/// not vanished after max_sweeps.
EigenDecomposition jacobi_eigen(const SquareMatrix& A, int max_sweeps = 100);

}  // namespace gwm
