#pragma once

#include <optional>
#include <vector>

#include "gwm/flowfield.hpp"
#include "gwm/motion_models.hpp"

namespace gwm {

/// Per-pixel K-way probabilities, pixel-major with the K values of one pixel
/// contiguous. Each pixel's vector is non-negative and sums to 1 (within
/// 1e-6).
struct SoftMasks {
  int k = 0;
  int width = 0;
  int height = 0;
  std::vector<double> probs;  // width * height * k

  SoftMasks() = default;
  SoftMasks(int k_, int w, int h)
      : k(k_), width(w), height(h), probs(static_cast<std::size_t>(w) * h * k_, 0.0) {}

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  double at(std::size_t pixel, int comp) const { return probs[pixel * k + comp]; }
  double& at(std::size_t pixel, int comp) { return probs[pixel * k + comp]; }

  void validate() const;  // throws on shape/simplex violations

  /// Hard per-pixel argmax (ties resolve to the lowest component index).
  LabelMap argmax() const;
};

/// Per-pixel K-way logits; same layout as SoftMasks.
struct Logits {
  int k = 0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Logits() = default;
  Logits(int k_, int w, int h)
      : k(k_), width(w), height(h), values(static_cast<std::size_t>(w) * h * k_, 0.0) {}

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  double at(std::size_t pixel, int comp) const { return values[pixel * k + comp]; }
  double& at(std::size_t pixel, int comp) { return values[pixel * k + comp]; }
};

/// Numerically stable per-pixel softmax. Throws NonFiniteLogit.
SoftMasks softmax(const Logits& logits);

/// One frame's energy: `total` is the probability-weighted residual sum over
/// all components divided by the pixel count, so values are
/// resolution-independent px^2. Components whose probability mass fell below
/// the weight floor are flagged degenerate and contribute zero energy with an
/// all-zero residual map (a vanished component can fit any single pixel
/// exactly, so its marginal residual is zero).
struct EnergyReport {
  double total = 0.0;
  std::vector<MotionModelParams> per_component;
  std::vector<std::vector<double>> residuals;  // [k][pixel]
};

/// Default mass floor below which a component is treated as empty, as a
/// fraction of the pixel count.
constexpr double kWeightFloorScale = 1e-8;

/// The segmentation-by-motion-anticipation energy of one frame: each
/// component k is fitted by weighted least squares with weights p(m_u = k),
/// the attained residual energies are summed and divided by |Omega|. The fit
/// parameters are minimized out in closed form, so this is the exact min over
/// flow parameters of the soft piecewise fitting loss.
///
/// weight_floor: absolute mass threshold; std::nullopt = 1e-8 * |Omega|.
EnergyReport segmentation_energy(const FlowField& flow, const SoftMasks& masks,
                                 ModelFamily family,
                                 std::optional<double> ridge = std::nullopt,
                                 std::optional<double> weight_floor = std::nullopt);

/// Energy plus its exact gradient in the logits under the frozen-minimizer
/// (envelope) convention: probs = softmax(logits) and
///   d total / d z_{uk} = p_{uk} (r_{uk} - sum_j p_{uj} r_{uj}) / |Omega|.
/// Where the inner minimizer is unique this is the true gradient; at ties it
/// is a valid supergradient of the concave min-of-linear objective.
struct EnergyGradient {
  EnergyReport report;
  Logits grad;  // same shape as the input logits
};

EnergyGradient energy_grad_logits(const FlowField& flow, const Logits& logits,
                                  ModelFamily family,
                                  std::optional<double> ridge = std::nullopt,
                                  std::optional<double> weight_floor = std::nullopt);

/// Empirical risk: mean per-frame energy over a dataset. Frames may be
/// processed in parallel; the reduction order is fixed. Throws EmptyDataset.
double dataset_risk(std::span<const FlowField> flows, std::span<const SoftMasks> masks,
                    ModelFamily family, std::optional<double> ridge = std::nullopt,
                    std::optional<double> weight_floor = std::nullopt);

}  // namespace gwm
