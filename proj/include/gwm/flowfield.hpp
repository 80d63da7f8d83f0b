#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gwm {

/// Dense 2-channel displacement map, px/frame. Row-major, top row first,
/// (u, v) interleaved; x grows rightward, y grows downward, so pixel (x, y)
/// in frame t lands at (x + u, y + v) in frame t + 1.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // 2 * width * height

  FlowField() = default;
  FlowField(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 2, 0.0f) {}

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 2; }

  float u(int x, int y) const { return data[index(x, y)]; }
  float v(int x, int y) const { return data[index(x, y) + 1]; }
  float& u(int x, int y) { return data[index(x, y)]; }
  float& v(int x, int y) { return data[index(x, y) + 1]; }

  bool all_finite() const;
};

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
  std::uint8_t* pixel(int x, int y) { return data.data() + index(x, y); }
  const std::uint8_t* pixel(int x, int y) const { return data.data() + index(x, y); }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = pixel(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

/// Small-integer label image: 0 = background, 1..N = instances (or component
/// ids when used as a component map).
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  int at(int x, int y) const { return labels[index(x, y)]; }
  int& at(int x, int y) { return labels[index(x, y)]; }
  int max_label() const;
};

// --- Middlebury .flo container ------------------------------------------
//
// Little-endian: float32 202021.25, int32 width, int32 height, then
// height * width interleaved float32 (u, v), row-major, top row first.

FlowField read_flo(const std::string& path);
void write_flo(const FlowField& field, const std::string& path);

// --- Netpbm (binary) ------------------------------------------------------

void write_ppm(const RgbImage& image, const std::string& path);
RgbImage read_ppm(const std::string& path);

/// Binary mask PGM: label 0 -> 0, anything else -> 255.
void write_mask_pgm(const LabelMap& mask, const std::string& path);
/// Reads a P5 file as a binary mask: gray >= 128 -> 1, else 0.
LabelMap read_mask_pgm(const std::string& path);

/// Component map PGM with evenly spaced gray levels: label k of K maps to
/// round(255 * k / (K - 1)) (K = 1 writes all zeros).
void write_components_pgm(const LabelMap& components, int k, const std::string& path);
/// Inverse of write_components_pgm: gray g maps to round(g * (K - 1) / 255).
LabelMap read_components_pgm(const std::string& path, int k);

// --- Visualization ---------------------------------------------------------
//
// HSV color wheel: hue = atan2(v, u) with 0 degrees = +x, growing toward +y
// (downward); saturation = |flow| / max_magnitude clamped to [0, 1];
// value = 1. Zero flow is white; (m, 0) at full magnitude is pure red
// (255, 0, 0) and (-m, 0) is its wheel opposite cyan (0, 255, 255).

/// max_magnitude <= 0 selects auto scaling: the 99th-percentile magnitude
/// (sorted, index ceil(0.99 n) - 1), falling back to the maximum and then to
/// 1.0 when the field is all zeros.
RgbImage flow_to_color(const FlowField& field, double max_magnitude = 0.0);

}  // namespace gwm
