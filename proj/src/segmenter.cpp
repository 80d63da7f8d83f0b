#include "gwm/segmenter.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "gwm/error.hpp"
#include "gwm/parallel.hpp"
#include "gwm/prng.hpp"

namespace gwm {

namespace {

constexpr int kBaseFeatures = 6;

std::vector<double> rff_frequencies(const FeatureSpec& spec) {
  Prng rng(spec.rff_seed);
  std::vector<double> freqs(static_cast<std::size_t>(spec.rff_pairs) * 5);
  for (double& f : freqs) f = spec.rff_sigma * rng.normal();
  return freqs;
}

}  // namespace

FeatureMap featurize(const RgbImage& image, const FeatureSpec& spec) {
  FeatureMap map;
  map.width = image.width;
  map.height = image.height;
  map.dim = spec.dim();
  map.values.resize(map.pixels() * map.dim);

  const auto norm = CoordNormalization::for_frame(image.width, image.height);
  const std::vector<double> freqs = spec.rff_pairs > 0 ? rff_frequencies(spec) : std::vector<double>{};

  std::size_t u = 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x, ++u) {
      double* f = map.values.data() + u * map.dim;
      const std::uint8_t* px = image.pixel(x, y);
      f[0] = px[0] / 255.0;
      f[1] = px[1] / 255.0;
      f[2] = px[2] / 255.0;
      f[3] = norm.nx(x);
      f[4] = norm.ny(y);
      f[5] = 1.0;
      for (int j = 0; j < spec.rff_pairs; ++j) {
        const double* w = freqs.data() + static_cast<std::size_t>(j) * 5;
        double dot = 0.0;
        for (int c = 0; c < 5; ++c) dot += w[c] * f[c];
        f[kBaseFeatures + 2 * j] = std::cos(dot);
        f[kBaseFeatures + 2 * j + 1] = std::sin(dot);
      }
    }
  }
  return map;
}

const char* to_string(SegmenterMode mode) {
  return mode == SegmenterMode::PerPixel ? "perpixel" : "linear";
}

std::optional<SegmenterMode> mode_from_string(const std::string& name) {
  if (name == "perpixel") return SegmenterMode::PerPixel;
  if (name == "linear") return SegmenterMode::Linear;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (k < 2) throw Error(ErrorKind::ConfigError, "k must be >= 2");
  if (iterations < 1) throw Error(ErrorKind::ConfigError, "iterations must be >= 1");
  if (learning_rate && !(*learning_rate > 0.0))
    throw Error(ErrorKind::ConfigError, "learning rate must be > 0");
  if (!(momentum >= 0.0) || momentum >= 1.0)
    throw Error(ErrorKind::ConfigError, "momentum must be in [0, 1)");
  if (!(init_sigma >= 0.0)) throw Error(ErrorKind::ConfigError, "init sigma must be >= 0");
  if (features.rff_pairs < 0) throw Error(ErrorKind::ConfigError, "rff pairs must be >= 0");
}

namespace {

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

// Logits that left the finite range mid-training signal divergence, not a
// caller contract violation.
[[noreturn]] void rethrow_as_diverged(const Error& e) {
  if (e.kind() == ErrorKind::NonFiniteLogit)
    throw Error(ErrorKind::DivergedLoss, "parameters left the finite range");
  throw e;
}

void check_frames(std::span<const RgbImage> images, std::span<const FlowField> flows) {
  if (flows.empty()) throw Error(ErrorKind::EmptyDataset, "no frames");
  if (images.size() != flows.size())
    throw Error(ErrorKind::DimensionMismatch, "image and flow counts disagree");
  for (std::size_t t = 0; t < flows.size(); ++t) {
    if (images[t].width != flows[t].width || images[t].height != flows[t].height ||
        flows[t].width != flows[0].width || flows[t].height != flows[0].height)
      throw Error(ErrorKind::DimensionMismatch, "inconsistent frame dimensions");
  }
}

TrainedSegmenter train_per_pixel(std::span<const FlowField> flows, const TrainConfig& cfg) {
  const std::size_t frame_count = flows.size();
  const double lr = cfg.resolved_rate(SegmenterMode::PerPixel);
  const double inv_frames = 1.0 / static_cast<double>(frame_count);

  TrainedSegmenter seg;
  seg.mode = SegmenterMode::PerPixel;
  seg.config = cfg;
  seg.frame_logits.reserve(frame_count);

  Prng rng(cfg.seed);
  for (std::size_t t = 0; t < frame_count; ++t) {
    Logits logits(cfg.k, flows[t].width, flows[t].height);
    for (double& z : logits.values) z = cfg.init_sigma * rng.normal();
    seg.frame_logits.push_back(std::move(logits));
  }

  std::vector<Logits> velocity;
  velocity.reserve(frame_count);
  for (const auto& l : seg.frame_logits) velocity.emplace_back(l.k, l.width, l.height);

  std::vector<double> frame_loss(frame_count);
  std::vector<Logits> frame_grad(frame_count);

  auto eval_all = [&](bool want_grad) {
    try {
    parallel_for(frame_count, [&](std::size_t t) {
      if (want_grad) {
        auto eg = energy_grad_logits(flows[t], seg.frame_logits[t], cfg.family, cfg.ridge,
                                     cfg.weight_floor);
        frame_loss[t] = eg.report.total;
        frame_grad[t] = std::move(eg.grad);
      } else {
        frame_loss[t] =
            segmentation_energy(flows[t], softmax(seg.frame_logits[t]), cfg.family, cfg.ridge,
                                cfg.weight_floor)
                .total;
      }
    });
    } catch (const Error& e) {
      rethrow_as_diverged(e);
    }
    double risk = 0.0;
    for (double v : frame_loss) risk += v;
    return risk * inv_frames;
  };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const double risk = eval_all(true);
    if (!std::isfinite(risk)) throw Error(ErrorKind::DivergedLoss, "non-finite loss");
    seg.loss_trace.push_back(risk);
    for (std::size_t t = 0; t < frame_count; ++t) {
      auto& z = seg.frame_logits[t].values;
      auto& v = velocity[t].values;
      const auto& g = frame_grad[t].values;
      for (std::size_t i = 0; i < z.size(); ++i) {
        v[i] = cfg.momentum * v[i] + g[i] * inv_frames;
        z[i] -= lr * v[i];
      }
      if (!all_finite(z)) throw Error(ErrorKind::DivergedLoss, "non-finite logits");
    }
  }
  const double final_risk = eval_all(false);
  if (!std::isfinite(final_risk)) throw Error(ErrorKind::DivergedLoss, "non-finite loss");
  seg.loss_trace.push_back(final_risk);

  for (const auto& logits : seg.frame_logits) seg.final_masks.push_back(softmax(logits));
  return seg;
}

Logits linear_logits(const FeatureMap& features, std::span<const double> w, int k) {
  Logits logits(k, features.width, features.height);
  for (std::size_t u = 0; u < features.pixels(); ++u) {
    const double* f = features.at(u);
    for (int c = 0; c < k; ++c) {
      const double* row = w.data() + static_cast<std::size_t>(c) * features.dim;
      double z = 0.0;
      for (int j = 0; j < features.dim; ++j) z += row[j] * f[j];
      logits.at(u, c) = z;
    }
  }
  return logits;
}

TrainedSegmenter train_linear(std::span<const RgbImage> images, std::span<const FlowField> flows,
                              const TrainConfig& cfg) {
  const std::size_t frame_count = flows.size();
  const double lr = cfg.resolved_rate(SegmenterMode::Linear);
  const double inv_frames = 1.0 / static_cast<double>(frame_count);
  const int dim = cfg.features.dim();
  const std::size_t w_size = static_cast<std::size_t>(cfg.k) * dim;

  std::vector<FeatureMap> features(frame_count);
  parallel_for(frame_count, [&](std::size_t t) { features[t] = featurize(images[t], cfg.features); });

  TrainedSegmenter seg;
  seg.mode = SegmenterMode::Linear;
  seg.config = cfg;
  seg.weights.resize(w_size);
  Prng rng(cfg.seed);
  for (double& w : seg.weights) w = cfg.init_sigma * rng.normal();

  std::vector<double> velocity(w_size, 0.0);
  std::vector<double> frame_loss(frame_count);
  std::vector<std::vector<double>> frame_grad_w(frame_count);

  auto eval_all = [&](bool want_grad) {
    try {
    parallel_for(frame_count, [&](std::size_t t) {
      const Logits logits = linear_logits(features[t], seg.weights, cfg.k);
      if (want_grad) {
        auto eg = energy_grad_logits(flows[t], logits, cfg.family, cfg.ridge, cfg.weight_floor);
        frame_loss[t] = eg.report.total;
        std::vector<double> gw(w_size, 0.0);
        for (std::size_t u = 0; u < features[t].pixels(); ++u) {
          const double* f = features[t].at(u);
          for (int c = 0; c < cfg.k; ++c) {
            const double g = eg.grad.at(u, c);
            if (g == 0.0) continue;
            double* row = gw.data() + static_cast<std::size_t>(c) * dim;
            for (int j = 0; j < dim; ++j) row[j] += g * f[j];
          }
        }
        frame_grad_w[t] = std::move(gw);
      } else {
        frame_loss[t] = segmentation_energy(flows[t], softmax(logits), cfg.family, cfg.ridge,
                                            cfg.weight_floor)
                            .total;
      }
    });
    } catch (const Error& e) {
      rethrow_as_diverged(e);
    }
    double risk = 0.0;
    for (double v : frame_loss) risk += v;
    return risk * inv_frames;
  };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const double risk = eval_all(true);
    if (!std::isfinite(risk)) throw Error(ErrorKind::DivergedLoss, "non-finite loss");
    seg.loss_trace.push_back(risk);
    for (std::size_t i = 0; i < w_size; ++i) {
      double g = 0.0;
      for (std::size_t t = 0; t < frame_count; ++t) g += frame_grad_w[t][i];
      velocity[i] = cfg.momentum * velocity[i] + g * inv_frames;
      seg.weights[i] -= lr * velocity[i];
    }
    if (!all_finite(seg.weights)) throw Error(ErrorKind::DivergedLoss, "non-finite weights");
  }
  const double final_risk = eval_all(false);
  if (!std::isfinite(final_risk)) throw Error(ErrorKind::DivergedLoss, "non-finite loss");
  seg.loss_trace.push_back(final_risk);

  for (std::size_t t = 0; t < frame_count; ++t)
    seg.final_masks.push_back(softmax(linear_logits(features[t], seg.weights, cfg.k)));
  return seg;
}

}  // namespace

TrainedSegmenter train_internal(std::span<const RgbImage> images,
                                std::span<const FlowField> flows, const TrainConfig& config,
                                SegmenterMode mode) {
  config.validate();
  check_frames(images, flows);
  return mode == SegmenterMode::PerPixel ? train_per_pixel(flows, config)
                                         : train_linear(images, flows, config);
}

SoftMasks predict(const TrainedSegmenter& segmenter, const RgbImage& image) {
  if (segmenter.mode != SegmenterMode::Linear)
    throw Error(ErrorKind::ModeMismatch, "per-pixel segmenter cannot predict on unseen frames");
  const FeatureMap features = featurize(image, segmenter.config.features);
  return softmax(linear_logits(features, segmenter.weights, segmenter.config.k));
}

namespace {

std::string double_to_string(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_segmenter(const TrainedSegmenter& segmenter, const std::string& path) {
  if (segmenter.mode != SegmenterMode::Linear)
    throw Error(ErrorKind::ModeMismatch, "only linear segmenters serialize");
  nlohmann::json doc;
  doc["mode"] = "linear";
  doc["k"] = segmenter.config.k;
  doc["seed"] = segmenter.config.seed;
  doc["feature_spec"] = {{"rff_pairs", segmenter.config.features.rff_pairs},
                         {"rff_sigma", segmenter.config.features.rff_sigma},
                         {"rff_seed", segmenter.config.features.rff_seed}};
  doc["config"] = {{"family", to_string(segmenter.config.family)},
                   {"iterations", segmenter.config.iterations},
                   {"learning_rate", segmenter.config.resolved_rate(SegmenterMode::Linear)},
                   {"momentum", segmenter.config.momentum},
                   {"init_sigma", segmenter.config.init_sigma}};
  auto& w = doc["weights"] = nlohmann::json::array();
  for (double v : segmenter.weights) w.push_back(double_to_string(v));

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path);
}

TrainedSegmenter load_segmenter(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad segmenter json: ") + e.what());
  }
  if (doc.value("mode", "") != "linear")
    throw Error(ErrorKind::ModeMismatch, "only linear segmenters load");

  TrainedSegmenter seg;
  seg.mode = SegmenterMode::Linear;
  seg.config.k = doc.at("k").get<int>();
  seg.config.seed = doc.at("seed").get<std::uint64_t>();
  const auto& fs = doc.at("feature_spec");
  seg.config.features.rff_pairs = fs.at("rff_pairs").get<int>();
  seg.config.features.rff_sigma = fs.at("rff_sigma").get<double>();
  seg.config.features.rff_seed = fs.at("rff_seed").get<std::uint64_t>();
  if (doc.contains("config")) {
    const auto& cfg = doc.at("config");
    if (auto family = family_from_string(cfg.value("family", "quadratic12")))
      seg.config.family = *family;
    seg.config.iterations = cfg.value("iterations", seg.config.iterations);
    seg.config.momentum = cfg.value("momentum", seg.config.momentum);
    seg.config.init_sigma = cfg.value("init_sigma", seg.config.init_sigma);
    if (cfg.contains("learning_rate")) seg.config.learning_rate = cfg.at("learning_rate").get<double>();
  }
  for (const auto& v : doc.at("weights")) seg.weights.push_back(std::strtod(v.get<std::string>().c_str(), nullptr));
  if (seg.weights.size() !=
      static_cast<std::size_t>(seg.config.k) * seg.config.features.dim())
    throw Error(ErrorKind::DimensionMismatch, "weight count does not match k and feature dim");
  return seg;
}

}  // namespace gwm
