#include "gwm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gwm/error.hpp"

namespace gwm {

double SquareMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < n; ++i) t += at(i, i);
  return t;
}

bool solve_spd(const SquareMatrix& A, std::vector<double>& rhs, int m) {
  const int n = A.n;
  SquareMatrix L(n);          // unit lower triangle
  std::vector<double> d(n);   // D diagonal

  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::fabs(A.at(i, i)));
  const double tol = std::max(max_diag, 1.0) * n * std::numeric_limits<double>::epsilon();

  for (int j = 0; j < n; ++j) {
    double dj = A.at(j, j);
    for (int k = 0; k < j; ++k) dj -= L.at(j, k) * L.at(j, k) * d[k];
    if (dj <= tol) return false;
    d[j] = dj;
    L.at(j, j) = 1.0;
    for (int i = j + 1; i < n; ++i) {
      double v = A.at(i, j);
      for (int k = 0; k < j; ++k) v -= L.at(i, k) * L.at(j, k) * d[k];
      L.at(i, j) = v / dj;
    }
  }

  // Forward, diagonal, backward passes on each rhs column.
  for (int c = 0; c < m; ++c) {
    double* x = rhs.data();
    auto xi = [&](int i) -> double& { return x[static_cast<std::size_t>(i) * m + c]; };
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < i; ++k) xi(i) -= L.at(i, k) * xi(k);
    for (int i = 0; i < n; ++i) xi(i) /= d[i];
    for (int i = n - 1; i >= 0; --i)
      for (int k = i + 1; k < n; ++k) xi(i) -= L.at(k, i) * xi(k);
  }
  return true;
}

EigenDecomposition jacobi_eigen(const SquareMatrix& A, int max_sweeps) {
  const int n = A.n;
  SquareMatrix work = A;
  SquareMatrix V(n);
  for (int i = 0; i < n; ++i) V.at(i, i) = 1.0;

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::fabs(work.at(i, j)));
  const double stop = std::max(scale, 1.0) * 1e-15;

  bool converged = (n <= 1);
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) off += std::fabs(work.at(p, q));
    if (off <= stop) {
      converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = work.at(p, q);
        if (std::fabs(apq) <= stop / (n * n)) continue;
        const double theta = 0.5 * (work.at(q, q) - work.at(p, p)) / apq;
        double t = 1.0 / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double h = t * apq;

        work.at(p, p) -= h;
        work.at(q, q) += h;
        work.at(p, q) = 0.0;
        work.at(q, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          if (i != p && i != q) {
            const double aip = work.at(i, p);
            const double aiq = work.at(i, q);
            work.at(i, p) = aip - s * (aiq + aip * tau);
            work.at(p, i) = work.at(i, p);
            work.at(i, q) = aiq + s * (aip - aiq * tau);
            work.at(q, i) = work.at(i, q);
          }
          const double vip = V.at(i, p);
          const double viq = V.at(i, q);
          V.at(i, p) = vip - s * (viq + vip * tau);
          V.at(i, q) = viq + s * (vip - viq * tau);
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) off += std::fabs(work.at(p, q));
    if (off > stop) throw Error(ErrorKind::EigenFailure, "Jacobi sweeps did not converge");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    if (work.at(i, i) != work.at(j, j)) return work.at(i, i) < work.at(j, j);
    return i < j;
  });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = SquareMatrix(n);
  for (int j = 0; j < n; ++j) {
    const int src = order[j];
    out.values[j] = work.at(src, src);
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (std::fabs(V.at(i, src)) > std::fabs(V.at(arg, src))) arg = i;
    const double sign = V.at(arg, src) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.vectors.at(i, j) = sign * V.at(i, src);
  }
  return out;
}

}  // namespace gwm
