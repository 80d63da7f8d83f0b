#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwm/energy.hpp"
#include "gwm/flowfield.hpp"

namespace gwm {

/// Hand-crafted per-pixel appearance features standing in for a pretrained
/// encoder: [r, g, b scaled to [0,1], x_norm, y_norm, 1], optionally extended
/// with random Fourier pairs (cos(w.f5), sin(w.f5)) of the 5 non-constant
/// base features, frequencies i.i.d. Normal(0, rff_sigma^2) drawn from
/// Prng(rff_seed) in pair-then-component order.
struct FeatureSpec {
  int rff_pairs = 0;
  double rff_sigma = 1.0;
  std::uint64_t rff_seed = 0x5EEDFEA7;

  int dim() const { return 6 + 2 * rff_pairs; }
};

struct FeatureMap {
  int width = 0;
  int height = 0;
  int dim = 0;
  std::vector<double> values;  // pixel-major, dim contiguous

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  const double* at(std::size_t pixel) const { return values.data() + pixel * dim; }
};

FeatureMap featurize(const RgbImage& image, const FeatureSpec& spec = {});

enum class SegmenterMode { PerPixel, Linear };

const char* to_string(SegmenterMode mode);
std::optional<SegmenterMode> mode_from_string(const std::string& name);

struct TrainConfig {
  ModelFamily family = ModelFamily::Quadratic12;
  int k = 4;
  int iterations = 300;
  std::optional<double> learning_rate;  // default 0.5 per-pixel, 0.1 linear
  double momentum = 0.9;
  std::uint64_t seed = 0;
  double init_sigma = 0.01;
  std::optional<double> ridge;         // default: auto (see motion_models)
  std::optional<double> weight_floor;  // default: 1e-8 * |Omega|
  FeatureSpec features;                // linear mode only

  double resolved_rate(SegmenterMode mode) const {
    return learning_rate.value_or(mode == SegmenterMode::PerPixel ? 0.5 : 0.1);
  }
  void validate() const;  // throws ConfigError
};

/// Result of internal learning. Per-pixel mode keeps one logit tensor per
/// training frame; linear mode keeps the shared K x dim weight matrix. Both
/// cache the final soft masks of every training frame.
struct TrainedSegmenter {
  SegmenterMode mode = SegmenterMode::PerPixel;
  TrainConfig config;
  std::vector<Logits> frame_logits;     // per-pixel mode
  std::vector<double> weights;          // linear mode, k x dim() row-major
  std::vector<SoftMasks> final_masks;   // one per training frame
  std::vector<double> loss_trace;       // iterations + 1 entries; [0] = initial

  const SoftMasks& masks(std::size_t frame) const { return final_masks.at(frame); }
};

/// Full-batch gradient descent with classical momentum (v <- m v + g,
/// p <- p - lr v) on the dataset risk, parameters initialized
/// Normal(0, sigma^2) from Prng(seed) in a fixed draw order, so training is
/// bit-reproducible from (inputs, config). Throws DivergedLoss when the loss
/// or the parameters leave the finite range.
TrainedSegmenter train_internal(std::span<const RgbImage> images,
                                std::span<const FlowField> flows, const TrainConfig& config,
                                SegmenterMode mode);

/// Applies a trained linear segmenter to any image: softmax(W phi(u)).
/// Per-pixel segmenters only describe their own training frames, so this
/// throws ModeMismatch for them.
SoftMasks predict(const TrainedSegmenter& segmenter, const RgbImage& image);

/// Linear segmenters serialize to JSON with weights as full-precision decimal
/// strings; load restores a predict-ready segmenter bit-exactly.
void save_segmenter(const TrainedSegmenter& segmenter, const std::string& path);
TrainedSegmenter load_segmenter(const std::string& path);

}  // namespace gwm
