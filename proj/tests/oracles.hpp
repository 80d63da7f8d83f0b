// Test-only reference implementations, deliberately independent of the
// library's solver paths: raw normal equations + Gaussian elimination with
// partial pivoting instead of moment-matrix LDL^T, direct residual summation
// instead of trace algebra, and exhaustive search instead of the spectral
// relaxation.
#pragma once

#include <vector>

#include "gwm/flowfield.hpp"
#include "gwm/linalg.hpp"
#include "gwm/motion_models.hpp"
#include "gwm/energy.hpp"
#include "gwm/prng.hpp"

namespace gwm::test {

struct WlsOracleResult {
  std::vector<double> theta;  // 2*(d+1): [row_x basis.. const | row_y basis.. const]
  double energy = 0.0;        // direct weighted residual sum, original scale
};

/// Assembles the explicit 2(d+1)-variable normal equations of the weighted
/// least-squares flow fit (unnormalized weights) and solves them by dense
/// Gaussian elimination with partial pivoting.
WlsOracleResult wls_normal_equation_oracle(const FlowField& flow,
                                           const std::vector<double>& weights, ModelFamily family,
                                           const CoordNormalization& norm);

/// Direct evaluation of the weighted residual objective at given parameters.
double wls_objective(const FlowField& flow, const std::vector<double>& weights,
                     ModelFamily family, const CoordNormalization& norm,
                     const std::vector<double>& theta);

/// Gradient descent with backtracking from a starting point; returns the best
/// objective value reached. Used to confirm a solution cannot be improved.
double descend_objective(const FlowField& flow, const std::vector<double>& weights,
                         ModelFamily family, const CoordNormalization& norm,
                         std::vector<double> theta, int iterations);

/// Direct evaluation of the soft piecewise energy: for each component, fit
/// via the oracle above with the mask column as weights, then literally sum
/// p_{uk} * ||F_u - theta_k(u)||^2 over pixels and components, divided by the
/// pixel count.
double direct_soft_energy(const FlowField& flow, const SoftMasks& masks, ModelFamily family,
                          const CoordNormalization& norm);

struct FdCheckResult {
  double max_rel_err = 0.0;
  int compared = 0;
  int excluded = 0;
};

/// Central finite differences of the full energy (with refitting) against the
/// analytic envelope gradient. Pixels whose two smallest component residuals
/// differ by less than 1e-6 are excluded (the inner minimizer is effectively
/// tied there), as are entries where both gradients are negligible relative
/// to the largest one.
FdCheckResult fd_gradient_check(const FlowField& flow, const Logits& logits, ModelFamily family,
                                double step = 1e-4);

/// Normalized-cut value of a 2-coloring (degrees include the diagonal).
double ncut_value(const SquareMatrix& pi, const std::vector<int>& colors);

/// Exhaustive minimum over all 2^K - 2 nontrivial bipartitions.
double ncut_brute_force_min(const SquareMatrix& pi);

/// Random affinity matrices drawn the way the merge stage sees them: floored
/// cosines of segment-mean features scattered around two appearance
/// directions, including the constant coordinate every real feature vector
/// carries.
SquareMatrix random_segment_affinity(Prng& rng, int k, int dim = 6, double spread = 0.3);

}  // namespace gwm::test
