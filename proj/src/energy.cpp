#include "gwm/energy.hpp"

#include <cmath>

#include "gwm/error.hpp"
#include "gwm/parallel.hpp"

namespace gwm {

void SoftMasks::validate() const {
  if (k < 1) throw Error(ErrorKind::DimensionMismatch, "masks need k >= 1");
  if (probs.size() != pixels() * static_cast<std::size_t>(k))
    throw Error(ErrorKind::DimensionMismatch, "mask buffer does not match dimensions");
  for (std::size_t u = 0; u < pixels(); ++u) {
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      const double p = at(u, c);
      if (!(p >= 0.0)) throw Error(ErrorKind::NonFiniteValue, "negative or NaN probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
      throw Error(ErrorKind::NonFiniteValue, "pixel probabilities do not sum to 1");
  }
}

LabelMap SoftMasks::argmax() const {
  LabelMap map(width, height);
  for (std::size_t u = 0; u < pixels(); ++u) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (at(u, c) > at(u, best)) best = c;
    map.labels[u] = best;
  }
  return map;
}

SoftMasks softmax(const Logits& logits) {
  SoftMasks masks(logits.k, logits.width, logits.height);
  for (std::size_t u = 0; u < logits.pixels(); ++u) {
    double zmax = logits.at(u, 0);
    for (int c = 1; c < logits.k; ++c) zmax = std::max(zmax, logits.at(u, c));
    if (!std::isfinite(zmax)) throw Error(ErrorKind::NonFiniteLogit, "non-finite logit");
    double sum = 0.0;
    for (int c = 0; c < logits.k; ++c) {
      const double z = logits.at(u, c);
      if (!std::isfinite(z)) throw Error(ErrorKind::NonFiniteLogit, "non-finite logit");
      const double e = std::exp(z - zmax);
      masks.at(u, c) = e;
      sum += e;
    }
    for (int c = 0; c < logits.k; ++c) masks.at(u, c) /= sum;
  }
  return masks;
}

EnergyReport segmentation_energy(const FlowField& flow, const SoftMasks& masks,
                                 ModelFamily family, std::optional<double> ridge,
                                 std::optional<double> weight_floor) {
  if (masks.width != flow.width || masks.height != flow.height)
    throw Error(ErrorKind::DimensionMismatch, "masks and flow dimensions disagree");
  const std::size_t n = flow.pixels();
  if (masks.probs.size() != n * static_cast<std::size_t>(masks.k))
    throw Error(ErrorKind::DimensionMismatch, "mask buffer does not match dimensions");

  const double floor = weight_floor.value_or(kWeightFloorScale * static_cast<double>(n));
  const auto norm = CoordNormalization::for_frame(flow.width, flow.height);

  EnergyReport report;
  report.per_component.resize(masks.k);
  report.residuals.resize(masks.k);

  parallel_for(masks.k, [&](std::size_t comp) {
    std::vector<double> weights(n);
    double mass = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      weights[u] = masks.at(u, static_cast<int>(comp));
      mass += weights[u];
    }
    if (mass < floor) {
      MotionModelParams empty;
      empty.family = family;
      empty.degenerate = true;
      empty.weight_total = mass;
      report.per_component[comp] = empty;
      report.residuals[comp].assign(n, 0.0);
      return;
    }
    report.per_component[comp] = fit_wls(flow, weights, family, norm, ridge);
    report.residuals[comp] = residual_map(flow, report.per_component[comp], norm);
  });

  double total = 0.0;
  for (const auto& params : report.per_component) total += params.energy;
  report.total = total / static_cast<double>(n);
  return report;
}

EnergyGradient energy_grad_logits(const FlowField& flow, const Logits& logits,
                                  ModelFamily family, std::optional<double> ridge,
                                  std::optional<double> weight_floor) {
  EnergyGradient out;
  const SoftMasks masks = softmax(logits);
  out.report = segmentation_energy(flow, masks, family, ridge, weight_floor);
  out.grad = Logits(logits.k, logits.width, logits.height);

  const std::size_t n = logits.pixels();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t u = 0; u < n; ++u) {
    double mean_residual = 0.0;
    for (int c = 0; c < logits.k; ++c) mean_residual += masks.at(u, c) * out.report.residuals[c][u];
    for (int c = 0; c < logits.k; ++c)
      out.grad.at(u, c) = masks.at(u, c) * (out.report.residuals[c][u] - mean_residual) * inv_n;
  }
  return out;
}

double dataset_risk(std::span<const FlowField> flows, std::span<const SoftMasks> masks,
                    ModelFamily family, std::optional<double> ridge,
                    std::optional<double> weight_floor) {
  if (flows.empty()) throw Error(ErrorKind::EmptyDataset, "no frames");
  if (flows.size() != masks.size())
    throw Error(ErrorKind::DimensionMismatch, "frame and mask counts disagree");

  std::vector<double> totals(flows.size());
  parallel_for(flows.size(), [&](std::size_t t) {
    totals[t] = segmentation_energy(flows[t], masks[t], family, ridge, weight_floor).total;
  });
  double sum = 0.0;
  for (double v : totals) sum += v;
  return sum / static_cast<double>(flows.size());
}

}  // namespace gwm
