#include "gwm/motion_models.hpp"

#include <algorithm>
#include <cmath>

#include "gwm/error.hpp"
#include "gwm/linalg.hpp"

namespace gwm {

int lifted_dim(ModelFamily family) {
  switch (family) {
    case ModelFamily::Constant: return 0;
    case ModelFamily::Affine: return 2;
    case ModelFamily::Quadratic12: return 5;
  }
  return 0;
}

const char* to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Constant: return "constant";
    case ModelFamily::Affine: return "affine";
    case ModelFamily::Quadratic12: return "quadratic12";
  }
  return "constant";
}

std::optional<ModelFamily> family_from_string(const std::string& name) {
  if (name == "constant") return ModelFamily::Constant;
  if (name == "affine") return ModelFamily::Affine;
  if (name == "quadratic12") return ModelFamily::Quadratic12;
  return std::nullopt;
}

int lift_into(ModelFamily family, double nx, double ny, double* out) {
  switch (family) {
    case ModelFamily::Constant:
      return 0;
    case ModelFamily::Affine:
      out[0] = nx;
      out[1] = ny;
      return 2;
    case ModelFamily::Quadratic12:
      out[0] = nx;
      out[1] = nx * nx;
      out[2] = ny;
      out[3] = ny * ny;
      out[4] = nx * ny;
      return 5;
  }
  return 0;
}

std::vector<double> lift(ModelFamily family, double nx, double ny) {
  double buf[kMaxLiftDim];
  const int d = lift_into(family, nx, ny, buf);
  return std::vector<double>(buf, buf + d);
}

CoordNormalization CoordNormalization::for_frame(int width, int height) {
  CoordNormalization norm;
  if (width > 1) {
    norm.scale_x = 2.0 / (width - 1);
    norm.offset_x = -1.0;
  } else {
    norm.scale_x = 1.0;
    norm.offset_x = 0.0;
  }
  if (height > 1) {
    norm.scale_y = 2.0 / (height - 1);
    norm.offset_y = -1.0;
  } else {
    norm.scale_y = 1.0;
    norm.offset_y = 0.0;
  }
  return norm;
}

std::array<double, 2> MotionModelParams::flow_at(double nx, double ny) const {
  double basis[kMaxLiftDim];
  const int d = lift_into(family, nx, ny, basis);
  std::array<double, 2> out{b[0], b[1]};
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < d; ++j) out[c] += a[c][j] * basis[j];
  return out;
}

namespace {

struct Moments {
  int d = 0;
  double weight_total = 0.0;
  // Normalized-weight statistics.
  SquareMatrix g;                                      // (d+1)x(d+1): sum w q q^T
  std::array<std::array<double, kMaxLiftDim + 1>, 2> c{};  // 2x(d+1): sum w F q^T
  double s_ff = 0.0;                                   // sum w |F|^2
};

Moments accumulate(const FlowField& flow, std::span<const double> weights, ModelFamily family,
                   const CoordNormalization& norm) {
  const std::size_t n = flow.pixels();
  if (weights.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "weights length does not match flow");

  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(ErrorKind::ZeroWeight, "weights sum to zero");

  Moments mo;
  mo.d = lifted_dim(family);
  mo.weight_total = total;
  const int m = mo.d + 1;
  mo.g = SquareMatrix(m);

  const double inv_total = 1.0 / total;
  double q[kMaxLiftDim + 1];
  std::size_t i = 0;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x, ++i) {
      const double w = weights[i] * inv_total;
      if (w == 0.0) continue;
      lift_into(family, norm.nx(x), norm.ny(y), q);
      q[mo.d] = 1.0;
      const double fu = flow.data[2 * i];
      const double fv = flow.data[2 * i + 1];
      for (int r = 0; r < m; ++r) {
        const double wq = w * q[r];
        for (int col = r; col < m; ++col) mo.g.at(r, col) += wq * q[col];
        mo.c[0][r] += wq * fu;
        mo.c[1][r] += wq * fv;
      }
      mo.s_ff += w * (fu * fu + fv * fv);
    }
  }
  for (int r = 0; r < m; ++r)
    for (int col = 0; col < r; ++col) mo.g.at(r, col) = mo.g.at(col, r);
  return mo;
}

double resolve_ridge(std::optional<double> ridge, double moment_trace, int m) {
  if (ridge) {
    if (*ridge < 0.0) throw Error(ErrorKind::ConfigError, "ridge must be non-negative");
    return *ridge;
  }
  return kAutoRidgeScale * moment_trace / m;
}

/// Unridged objective at M, from normalized statistics:
/// E = s_FF - 2 tr(M C^T) + tr(M G M^T).
double attained_energy(const Moments& mo, const MotionModelParams& params) {
  const int d = mo.d;
  const int m = d + 1;
  double row[2][kMaxLiftDim + 1];
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < d; ++j) row[c][j] = params.a[c][j];
    row[c][d] = params.b[c];
  }
  double e = mo.s_ff;
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < m; ++r) {
      e -= 2.0 * row[c][r] * mo.c[c][r];
      double gm = 0.0;
      for (int col = 0; col < m; ++col) gm += mo.g.at(r, col) * row[c][col];
      e += row[c][r] * gm;
    }
  }
  return std::max(e, 0.0);
}

}  // namespace

MotionModelParams fit_wls(const FlowField& flow, std::span<const double> weights,
                          ModelFamily family, const CoordNormalization& norm,
                          std::optional<double> ridge) {
  const Moments mo = accumulate(flow, weights, family, norm);
  const int m = mo.d + 1;
  const double lambda = resolve_ridge(ridge, mo.g.trace(), m);

  SquareMatrix q = mo.g;
  for (int i = 0; i < m; ++i) q.at(i, i) += lambda;

  // Solve Q M^T = C^T; two right-hand-side columns, one per flow channel.
  std::vector<double> rhs(static_cast<std::size_t>(m) * 2);
  for (int r = 0; r < m; ++r) {
    rhs[2 * r] = mo.c[0][r];
    rhs[2 * r + 1] = mo.c[1][r];
  }
  if (!solve_spd(q, rhs, 2))
    throw Error(ErrorKind::SingularSystem, "moment matrix not solvable (degenerate support)");

  MotionModelParams params;
  params.family = family;
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < mo.d; ++j) params.a[c][j] = rhs[static_cast<std::size_t>(2 * j) + c];
    params.b[c] = rhs[static_cast<std::size_t>(2 * mo.d) + c];
  }
  params.energy = attained_energy(mo, params) * mo.weight_total;
  params.weight_total = mo.weight_total;
  return params;
}

MotionModelParams fit_wls_centered(const FlowField& flow, std::span<const double> weights,
                                   ModelFamily family, const CoordNormalization& norm,
                                   std::optional<double> ridge) {
  const std::size_t n = flow.pixels();
  if (weights.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "weights length does not match flow");

  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(ErrorKind::ZeroWeight, "weights sum to zero");

  const int d = lifted_dim(family);
  const double inv_total = 1.0 / total;

  // Pass 1: weighted means of the lifted basis and the flow.
  double mu[kMaxLiftDim] = {0, 0, 0, 0, 0};
  double mu_f[2] = {0, 0};
  double basis[kMaxLiftDim];
  std::size_t i = 0;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x, ++i) {
      const double w = weights[i] * inv_total;
      if (w == 0.0) continue;
      lift_into(family, norm.nx(x), norm.ny(y), basis);
      for (int j = 0; j < d; ++j) mu[j] += w * basis[j];
      mu_f[0] += w * flow.data[2 * i];
      mu_f[1] += w * flow.data[2 * i + 1];
    }
  }

  // Pass 2: centered covariances.
  SquareMatrix sigma(d);           // sum w (q - mu)(q - mu)^T
  double sigma_fo[2][kMaxLiftDim] = {{0}};  // sum w (F - mu_F)(q - mu)^T
  double s_ff_centered = 0.0;      // sum w |F - mu_F|^2
  i = 0;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x, ++i) {
      const double w = weights[i] * inv_total;
      if (w == 0.0) continue;
      lift_into(family, norm.nx(x), norm.ny(y), basis);
      double cq[kMaxLiftDim];
      for (int j = 0; j < d; ++j) cq[j] = basis[j] - mu[j];
      const double cf[2] = {flow.data[2 * i] - mu_f[0], flow.data[2 * i + 1] - mu_f[1]};
      for (int r = 0; r < d; ++r) {
        const double wq = w * cq[r];
        for (int col = r; col < d; ++col) sigma.at(r, col) += wq * cq[col];
        sigma_fo[0][r] += w * cf[0] * cq[r];
        sigma_fo[1][r] += w * cf[1] * cq[r];
      }
      s_ff_centered += w * (cf[0] * cf[0] + cf[1] * cf[1]);
    }
  }
  for (int r = 0; r < d; ++r)
    for (int col = 0; col < r; ++col) sigma.at(r, col) = sigma.at(col, r);

  // trace of the homogeneous moment matrix, for the shared auto-ridge rule
  double mu_sq = 0.0;
  for (int j = 0; j < d; ++j) mu_sq += mu[j] * mu[j];
  const double hom_trace = sigma.trace() + mu_sq + 1.0;
  const double lambda = resolve_ridge(ridge, hom_trace, d + 1);

  // A ridge on the homogeneous moment matrix reduces exactly to
  //   A (Sigma + l I + l/(1+l) mu mu^T) = Sigma_FO + l/(1+l) mu_F mu^T
  //   b = (mu_F - A mu) / (1 + l),
  // so both fit entry points return the same model for any ridge.
  const double shrink = lambda / (1.0 + lambda);

  MotionModelParams params;
  params.family = family;
  if (d > 0) {
    SquareMatrix q = sigma;
    for (int r = 0; r < d; ++r) {
      q.at(r, r) += lambda;
      for (int col = 0; col < d; ++col) q.at(r, col) += shrink * mu[r] * mu[col];
    }
    std::vector<double> rhs(static_cast<std::size_t>(d) * 2);
    for (int r = 0; r < d; ++r) {
      rhs[2 * r] = sigma_fo[0][r] + shrink * mu_f[0] * mu[r];
      rhs[2 * r + 1] = sigma_fo[1][r] + shrink * mu_f[1] * mu[r];
    }
    if (!solve_spd(q, rhs, 2))
      throw Error(ErrorKind::SingularSystem, "covariance matrix not solvable (degenerate support)");
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < d; ++j) params.a[c][j] = rhs[static_cast<std::size_t>(2 * j) + c];
  }
  for (int c = 0; c < 2; ++c) {
    double a_mu = 0.0;
    for (int j = 0; j < d; ++j) a_mu += params.a[c][j] * mu[j];
    params.b[c] = (mu_f[c] - a_mu) / (1.0 + lambda);
  }

  // Attained unridged objective; the cross terms vanish against the means:
  // E = sum w |(F - mu_F) - A (q - mu)|^2 + |mu_F - A mu - b|^2.
  double e = s_ff_centered;
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < d; ++r) {
      e -= 2.0 * params.a[c][r] * sigma_fo[c][r];
      double sa = 0.0;
      for (int col = 0; col < d; ++col) sa += sigma.at(r, col) * params.a[c][col];
      e += params.a[c][r] * sa;
    }
    double a_mu = 0.0;
    for (int j = 0; j < d; ++j) a_mu += params.a[c][j] * mu[j];
    const double gap = mu_f[c] - a_mu - params.b[c];
    e += gap * gap;
  }
  params.energy = std::max(e, 0.0) * total;
  params.weight_total = total;
  return params;
}

std::vector<double> residual_map(const FlowField& flow, const MotionModelParams& params,
                                 const CoordNormalization& norm) {
  std::vector<double> residuals(flow.pixels());
  std::size_t i = 0;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x, ++i) {
      const auto predicted = params.flow_at(norm.nx(x), norm.ny(y));
      const double du = flow.data[2 * i] - predicted[0];
      const double dv = flow.data[2 * i + 1] - predicted[1];
      residuals[i] = du * du + dv * dv;
    }
  }
  return residuals;
}

FlowField synthesize_flow(const MotionModelParams& params, int width, int height,
                          const CoordNormalization& norm) {
  FlowField field(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto f = params.flow_at(norm.nx(x), norm.ny(y));
      field.u(x, y) = static_cast<float>(f[0]);
      field.v(x, y) = static_cast<float>(f[1]);
    }
  }
  return field;
}

}  // namespace gwm
