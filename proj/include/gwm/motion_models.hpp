#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwm/flowfield.hpp"

namespace gwm {

/// Parametric flow families. The lifted basis at normalized coordinates
/// (x, y) is Constant: [], Affine: [x, y], Quadratic12: [x, x^2, y, y^2, xy];
/// the solver appends the constant term, so parameter counts per flow channel
/// are 1, 3 and 6 (12 total for the quadratic model).
enum class ModelFamily { Constant, Affine, Quadratic12 };

constexpr int kMaxLiftDim = 5;

int lifted_dim(ModelFamily family);
const char* to_string(ModelFamily family);
std::optional<ModelFamily> family_from_string(const std::string& name);

/// Writes the lifted basis (without the constant term) to out; returns d.
int lift_into(ModelFamily family, double nx, double ny, double* out);
std::vector<double> lift(ModelFamily family, double nx, double ny);

/// Affine map from pixel coordinates to [-1, 1]^2, shared by every segment of
/// a frame. Pixel (0, 0) maps to (-1, -1) and (W-1, H-1) to (1, 1); a
/// single-pixel axis maps to 0. Raw pixel coordinates would make the
/// quadratic moment matrix wildly ill-conditioned; this is an invertible
/// reparameterization, so attained energies are unchanged.
struct CoordNormalization {
  double scale_x = 1.0, offset_x = 0.0;
  double scale_y = 1.0, offset_y = 0.0;

  static CoordNormalization for_frame(int width, int height);

  double nx(double px) const { return scale_x * px + offset_x; }
  double ny(double py) const { return scale_y * py + offset_y; }
  double px(double nx_) const { return (nx_ - offset_x) / scale_x; }
  double py(double ny_) const { return (ny_ - offset_y) / scale_y; }
};

/// Fitted flow model F(u) ~ A * lift(u) + b, with the attained residual
/// energy (weighted sum of squared residuals, px^2, at the caller's original
/// weight scale) and the total weight it was fitted with. `degenerate` marks
/// models produced for segments whose mass fell below the weight floor.
struct MotionModelParams {
  ModelFamily family = ModelFamily::Constant;
  std::array<std::array<double, kMaxLiftDim>, 2> a{};  // columns beyond lifted_dim stay 0
  std::array<double, 2> b{};
  double energy = 0.0;
  double weight_total = 0.0;
  bool degenerate = false;

  /// Model flow at normalized coordinates.
  std::array<double, 2> flow_at(double nx, double ny) const;
};

/// Default ridge scale: the ridge added to the (d+1)x(d+1) moment matrix when
/// the caller does not pass one is 1e-9 * trace / (d+1), which keeps
/// degenerate supports (tiny masses, collinear pixels) solvable without
/// moving well-posed solutions.
constexpr double kAutoRidgeScale = 1e-9;

/// Weighted least-squares fit of one flow model via uncentered second
/// moments: with homogeneous coordinates q = [lift(u); 1] and weights
/// rescaled to sum to 1 (the minimizer is scale-invariant), solves
/// M (G + ridge I) = C for M = [A b], where G = sum w q q^T and
/// C = sum w F q^T. The energy field holds the attained unridged objective,
/// reported at the original weight scale.
///
/// ridge: absolute value added to the moment diagonal; std::nullopt selects
/// the default above. Throws ZeroWeight when weights sum to <= 0 and
/// SingularSystem when the (ridged) moment matrix is not solvable.
MotionModelParams fit_wls(const FlowField& flow, std::span<const double> weights,
                          ModelFamily family, const CoordNormalization& norm,
                          std::optional<double> ridge = std::nullopt);

/// Same minimizer through centered covariances: A = Sigma_FO Sigma_OO^-1 and
/// b = mu_F - A mu_O in the ridge-free case; with a ridge the centered system
/// is the algebraically exact reduction of the ridged homogeneous one, so the
/// two entry points agree to roundoff for any ridge.
MotionModelParams fit_wls_centered(const FlowField& flow, std::span<const double> weights,
                                   ModelFamily family, const CoordNormalization& norm,
                                   std::optional<double> ridge = std::nullopt);

/// Per-pixel squared residual ||F_u - A lift(u) - b||^2.
std::vector<double> residual_map(const FlowField& flow, const MotionModelParams& params,
                                 const CoordNormalization& norm);

/// Forward evaluation of a model on a full lattice.
FlowField synthesize_flow(const MotionModelParams& params, int width, int height,
                          const CoordNormalization& norm);

}  // namespace gwm
