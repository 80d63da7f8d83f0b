#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gwm/energy.hpp"
#include "gwm/flowfield.hpp"
#include "gwm/motion_models.hpp"

namespace gwm {

struct Fill {
  bool checker = false;
  std::array<std::uint8_t, 3> color{0, 0, 0};
  std::array<std::uint8_t, 3> color2{0, 0, 0};  // checker only
  int cell = 8;
};

enum class SpriteShape { Rectangle, Ellipse, Triangle };

/// A rigid sprite: a shape around a center, a fill, and one parametric flow
/// model per frame step (a single entry broadcasts to every step). The
/// center advances each step by the model's displacement at the center, so
/// ground-truth flow inside the sprite is exactly the model's field.
struct Sprite {
  SpriteShape shape = SpriteShape::Rectangle;
  double cx = 0.0, cy = 0.0;  // frame-0 center, pixels
  double rx = 1.0, ry = 1.0;  // half extents / semi-axes
  std::array<std::array<double, 2>, 3> triangle{};  // vertex offsets from center
  Fill fill;
  std::vector<MotionModelParams> motion;  // size 1 or frame count
};

/// Synthetic scene description. Ground-truth flow is composed per pixel from
/// the topmost owner's motion model plus i.i.d. Normal(0, sigma^2) noise per
/// channel; masks are the exact pre-noise memberships. Occlusion follows
/// painter's order: later sprites over earlier, all over background.
struct SceneSpec {
  int width = 0, height = 0;
  int frames = 1;
  double sigma = 0.0;  // flow noise, px
  std::uint64_t seed = 0;
  /// When > 0, frames [0, train_frames) are the training split and the rest
  /// are held out (used by the heldout-pair preset).
  int train_frames = 0;
  Fill background_fill;
  std::vector<MotionModelParams> background_motion;  // size 1 or frame count
  std::vector<Sprite> sprites;
};

struct SceneFrame {
  RgbImage image;
  FlowField flow;       // ground truth, with noise
  LabelMap instances;   // 0 = background, 1..N = sprites
  LabelMap foreground;  // union of sprites
};

struct Scene {
  SceneSpec spec;
  std::vector<SceneFrame> frames;
};

/// Deterministic given the spec (noise streams are split per frame:
/// Prng(seed).split(t), drawn row-major, u before v). Throws
/// SpriteOutOfBounds when a sprite's extent leaves the frame at any step.
Scene generate(const SceneSpec& spec);

/// Named presets: smoke (48x48, T=2, one sprite, sigma=0), two-sprites
/// (64x64, T=4, two distinctly colored sprites with affine motions,
/// sigma=0.1), parallax (background with a quadratic depth-gradient flow the
/// affine family cannot fit), nonrigid-proxy (one object made of two rigidly
/// but differently moving parts), heldout-pair (train/test frame split with
/// shared sprite appearance). Throws UnknownPreset.
SceneSpec preset(const std::string& name);

/// One-hot masks from an instance/component map (labels in [0, k)).
SoftMasks one_hot_masks(const LabelMap& labels, int k);

/// Directory layout: frame_%04d.ppm, flow_%04d.flo, gt_%04d.pgm (instance
/// map, evenly spaced gray), fg_%04d.pgm (binary), scene.json (spec echo).
void save_scene(const Scene& scene, const std::string& dir);
Scene load_scene(const std::string& dir);

}  // namespace gwm
