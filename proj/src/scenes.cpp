#include "gwm/scenes.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gwm/error.hpp"
#include "gwm/prng.hpp"

namespace gwm {

namespace {

const MotionModelParams& motion_at(const std::vector<MotionModelParams>& trajectory, int t) {
  if (trajectory.empty()) throw Error(ErrorKind::ConfigError, "empty motion trajectory");
  return trajectory.size() == 1 ? trajectory.front() : trajectory.at(t);
}

struct Extent {
  double x_min, x_max, y_min, y_max;
};

Extent sprite_extent(const Sprite& sprite, double cx, double cy) {
  switch (sprite.shape) {
    case SpriteShape::Rectangle:
    case SpriteShape::Ellipse:
      return {cx - sprite.rx, cx + sprite.rx, cy - sprite.ry, cy + sprite.ry};
    case SpriteShape::Triangle: {
      Extent e{cx, cx, cy, cy};
      for (const auto& v : sprite.triangle) {
        e.x_min = std::min(e.x_min, cx + v[0]);
        e.x_max = std::max(e.x_max, cx + v[0]);
        e.y_min = std::min(e.y_min, cy + v[1]);
        e.y_max = std::max(e.y_max, cy + v[1]);
      }
      return e;
    }
  }
  return {cx, cx, cy, cy};
}

bool inside_sprite(const Sprite& sprite, double cx, double cy, double px, double py) {
  const double dx = px - cx;
  const double dy = py - cy;
  switch (sprite.shape) {
    case SpriteShape::Rectangle:
      return std::fabs(dx) <= sprite.rx && std::fabs(dy) <= sprite.ry;
    case SpriteShape::Ellipse: {
      const double ex = dx / sprite.rx;
      const double ey = dy / sprite.ry;
      return ex * ex + ey * ey <= 1.0;
    }
    case SpriteShape::Triangle: {
      const auto& t = sprite.triangle;
      auto cross = [&](int i, int j) {
        return (t[j][0] - t[i][0]) * (dy - t[i][1]) - (t[j][1] - t[i][1]) * (dx - t[i][0]);
      };
      const double c0 = cross(0, 1);
      const double c1 = cross(1, 2);
      const double c2 = cross(2, 0);
      const bool neg = c0 < 0 || c1 < 0 || c2 < 0;
      const bool pos = c0 > 0 || c1 > 0 || c2 > 0;
      return !(neg && pos);
    }
  }
  return false;
}

void fill_color(const Fill& fill, double x, double y, double phase_x, double phase_y,
                std::uint8_t* out) {
  const std::array<std::uint8_t, 3>* c = &fill.color;
  if (fill.checker) {
    const long ix = static_cast<long>(std::floor((x - phase_x) / fill.cell));
    const long iy = static_cast<long>(std::floor((y - phase_y) / fill.cell));
    if (((ix + iy) % 2 + 2) % 2 != 0) c = &fill.color2;
  }
  out[0] = (*c)[0];
  out[1] = (*c)[1];
  out[2] = (*c)[2];
}

}  // namespace

Scene generate(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || spec.frames < 1)
    throw Error(ErrorKind::ConfigError, "bad scene dimensions");
  if (spec.sprites.empty()) throw Error(ErrorKind::ConfigError, "scene needs at least one sprite");
  if (spec.sigma < 0.0) throw Error(ErrorKind::ConfigError, "sigma must be >= 0");

  const auto norm = CoordNormalization::for_frame(spec.width, spec.height);
  const std::size_t sprite_count = spec.sprites.size();

  // Advance sprite centers by each step's displacement at the center and
  // check extents up front.
  std::vector<std::vector<std::array<double, 2>>> centers(sprite_count);
  for (std::size_t s = 0; s < sprite_count; ++s) {
    const Sprite& sprite = spec.sprites[s];
    double cx = sprite.cx, cy = sprite.cy;
    centers[s].resize(spec.frames);
    for (int t = 0; t < spec.frames; ++t) {
      const Extent e = sprite_extent(sprite, cx, cy);
      if (e.x_min < 0.0 || e.y_min < 0.0 || e.x_max > spec.width - 1.0 ||
          e.y_max > spec.height - 1.0) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "sprite %zu leaves the frame at t=%d", s, t);
        throw Error(ErrorKind::SpriteOutOfBounds, msg);
      }
      centers[s][t] = {cx, cy};
      const auto d = motion_at(sprite.motion, t).flow_at(norm.nx(cx), norm.ny(cy));
      cx += d[0];
      cy += d[1];
    }
  }

  Prng base(spec.seed);
  Scene scene;
  scene.spec = spec;
  scene.frames.resize(spec.frames);

  // Background texture scrolls by the background displacement at the frame
  // center (cosmetic; the flow field itself is exact everywhere).
  double bg_phase_x = 0.0, bg_phase_y = 0.0;
  const double mid_nx = norm.nx((spec.width - 1) / 2.0);
  const double mid_ny = norm.ny((spec.height - 1) / 2.0);

  for (int t = 0; t < spec.frames; ++t) {
    SceneFrame& frame = scene.frames[t];
    frame.image = RgbImage(spec.width, spec.height);
    frame.flow = FlowField(spec.width, spec.height);
    frame.instances = LabelMap(spec.width, spec.height);
    frame.foreground = LabelMap(spec.width, spec.height);

    const MotionModelParams& bg_motion = motion_at(spec.background_motion, t);
    Prng noise = base.split(static_cast<std::uint64_t>(t));

    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        int owner = -1;  // topmost sprite
        for (int s = static_cast<int>(sprite_count) - 1; s >= 0; --s) {
          if (inside_sprite(spec.sprites[s], centers[s][t][0], centers[s][t][1], x, y)) {
            owner = s;
            break;
          }
        }

        if (owner >= 0) {
          const Sprite& sprite = spec.sprites[owner];
          fill_color(sprite.fill, x, y, centers[owner][t][0], centers[owner][t][1],
                     frame.image.pixel(x, y));
          frame.instances.at(x, y) = owner + 1;
          frame.foreground.at(x, y) = 1;
        } else {
          fill_color(spec.background_fill, x, y, bg_phase_x, bg_phase_y, frame.image.pixel(x, y));
        }

        const MotionModelParams& model =
            owner >= 0 ? motion_at(spec.sprites[owner].motion, t) : bg_motion;
        auto f = model.flow_at(norm.nx(x), norm.ny(y));
        if (spec.sigma > 0.0) {
          f[0] += spec.sigma * noise.normal();
          f[1] += spec.sigma * noise.normal();
        }
        frame.flow.u(x, y) = static_cast<float>(f[0]);
        frame.flow.v(x, y) = static_cast<float>(f[1]);
      }
    }

    const auto bg_step = bg_motion.flow_at(mid_nx, mid_ny);
    bg_phase_x += bg_step[0];
    bg_phase_y += bg_step[1];
  }
  return scene;
}

SoftMasks one_hot_masks(const LabelMap& labels, int k) {
  SoftMasks masks(k, labels.width, labels.height);
  for (std::size_t u = 0; u < labels.labels.size(); ++u) {
    const int label = labels.labels[u];
    if (label < 0 || label >= k)
      throw Error(ErrorKind::DimensionMismatch, "label outside [0, k)");
    masks.probs[u * k + label] = 1.0;
  }
  return masks;
}

namespace {

MotionModelParams constant_motion(double bx, double by) {
  MotionModelParams m;
  m.family = ModelFamily::Constant;
  m.b = {bx, by};
  return m;
}

MotionModelParams affine_motion(std::array<double, 2> row_x, std::array<double, 2> row_y,
                                double bx, double by) {
  MotionModelParams m;
  m.family = ModelFamily::Affine;
  m.a[0][0] = row_x[0];
  m.a[0][1] = row_x[1];
  m.a[1][0] = row_y[0];
  m.a[1][1] = row_y[1];
  m.b = {bx, by};
  return m;
}

Fill flat(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Fill f;
  f.color = {r, g, b};
  return f;
}

Fill checker(std::array<std::uint8_t, 3> c1, std::array<std::uint8_t, 3> c2, int cell) {
  Fill f;
  f.checker = true;
  f.color = c1;
  f.color2 = c2;
  f.cell = cell;
  return f;
}

}  // namespace

SceneSpec preset(const std::string& name) {
  SceneSpec spec;
  if (name == "smoke") {
    spec.width = 48;
    spec.height = 48;
    spec.frames = 2;
    spec.sigma = 0.0;
    spec.seed = 7;
    spec.background_fill = flat(38, 40, 46);
    spec.background_motion = {constant_motion(-22.0, -14.0)};
    Sprite box;
    box.shape = SpriteShape::Rectangle;
    box.cx = 16;
    box.cy = 24;
    box.rx = 6;
    box.ry = 5;
    box.fill = flat(226, 72, 56);
    box.motion = {constant_motion(9.0, 6.0)};
    spec.sprites = {box};
    return spec;
  }
  if (name == "two-sprites") {
    spec.width = 64;
    spec.height = 64;
    spec.frames = 4;
    spec.sigma = 0.1;
    spec.seed = 11;
    spec.background_fill = checker({26, 28, 34}, {40, 42, 50}, 8);
    spec.background_motion = {constant_motion(-48.0, -30.0)};
    Sprite red;
    red.shape = SpriteShape::Rectangle;
    red.cx = 17;
    red.cy = 21;
    red.rx = 7;
    red.ry = 5;
    red.fill = flat(228, 70, 58);
    red.motion = {constant_motion(7.0, 5.0)};
    Sprite orange;
    orange.shape = SpriteShape::Ellipse;
    orange.cx = 38;
    orange.cy = 44;
    orange.rx = 8;
    orange.ry = 6;
    orange.fill = flat(245, 168, 84);
    orange.motion = {affine_motion({0.5, 0.0}, {0.0, -0.4}, 5.0, -5.0)};
    spec.sprites = {red, orange};
    return spec;
  }
  if (name == "parallax") {
    spec.width = 64;
    spec.height = 64;
    spec.frames = 4;
    spec.sigma = 0.05;
    spec.seed = 23;
    spec.background_fill = checker({52, 54, 60}, {62, 64, 70}, 8);
    MotionModelParams bg;  // quadratic depth-gradient surrogate
    bg.family = ModelFamily::Quadratic12;
    bg.a[0] = {6.0, 2.2, 0.0, 0.0, 0.0};
    bg.a[1] = {0.0, 0.0, 5.0, 1.8, 0.0};
    bg.b = {-6.0, -4.0};
    spec.background_motion = {bg};
    Sprite box;
    box.shape = SpriteShape::Rectangle;
    box.cx = 16;
    box.cy = 38;
    box.rx = 7;
    box.ry = 5;
    box.fill = flat(70, 200, 190);
    // sits inside the background's flow-value range (so flow-space clusters
    // leak) while differing strongly from the local background flow
    box.motion = {constant_motion(-2.45, 1.0)};
    spec.sprites = {box};
    return spec;
  }
  if (name == "nonrigid-proxy") {
    spec.width = 64;
    spec.height = 64;
    spec.frames = 4;
    spec.sigma = 0.05;
    spec.seed = 31;
    spec.background_fill = flat(44, 46, 52);
    spec.background_motion = {constant_motion(-10.0, -6.0)};
    Sprite body;
    body.shape = SpriteShape::Rectangle;
    body.cx = 30;
    body.cy = 32;
    body.rx = 12;
    body.ry = 9;
    body.fill = flat(198, 82, 144);
    body.motion = {constant_motion(7.0, 4.0)};
    Sprite core;
    core.shape = SpriteShape::Ellipse;
    core.cx = 30;
    core.cy = 32;
    core.rx = 6;
    core.ry = 4.5;
    core.fill = flat(205, 88, 150);
    core.motion = {constant_motion(-5.0, -1.0)};
    spec.sprites = {body, core};
    return spec;
  }
  if (name == "heldout-pair") {
    spec.width = 64;
    spec.height = 64;
    spec.frames = 6;
    spec.train_frames = 4;
    spec.sigma = 0.1;
    spec.seed = 43;
    spec.background_fill = flat(40, 44, 54);
    spec.background_motion = {constant_motion(-2.0, -1.5)};
    Sprite blob;
    blob.shape = SpriteShape::Ellipse;
    blob.cx = 14;
    blob.cy = 18;
    blob.rx = 7;
    blob.ry = 6;
    blob.fill = flat(120, 220, 96);
    blob.motion = {constant_motion(4.0, 2.5)};
    spec.sprites = {blob};
    return spec;
  }
  throw Error(ErrorKind::UnknownPreset, "unknown preset '" + name + "'");
}

// --- directory I/O ---------------------------------------------------------

namespace {

using nlohmann::json;

json motion_to_json(const MotionModelParams& m) {
  json j;
  j["family"] = to_string(m.family);
  const int d = lifted_dim(m.family);
  json rows = json::array();
  for (int c = 0; c < 2; ++c) {
    json row = json::array();
    for (int col = 0; col < d; ++col) row.push_back(m.a[c][col]);
    rows.push_back(row);
  }
  j["a"] = rows;
  j["b"] = {m.b[0], m.b[1]};
  return j;
}

MotionModelParams motion_from_json(const json& j) {
  MotionModelParams m;
  const auto family = family_from_string(j.at("family").get<std::string>());
  if (!family) throw Error(ErrorKind::ConfigError, "unknown model family in scene.json");
  m.family = *family;
  const int d = lifted_dim(m.family);
  const auto& rows = j.at("a");
  for (int c = 0; c < 2; ++c)
    for (int col = 0; col < d; ++col) m.a[c][col] = rows.at(c).at(col).get<double>();
  m.b[0] = j.at("b").at(0).get<double>();
  m.b[1] = j.at("b").at(1).get<double>();
  return m;
}

json fill_to_json(const Fill& f) {
  json j;
  j["checker"] = f.checker;
  j["color"] = {f.color[0], f.color[1], f.color[2]};
  if (f.checker) {
    j["color2"] = {f.color2[0], f.color2[1], f.color2[2]};
    j["cell"] = f.cell;
  }
  return j;
}

Fill fill_from_json(const json& j) {
  Fill f;
  f.checker = j.value("checker", false);
  for (int c = 0; c < 3; ++c) f.color[c] = j.at("color").at(c).get<int>();
  if (f.checker) {
    for (int c = 0; c < 3; ++c) f.color2[c] = j.at("color2").at(c).get<int>();
    f.cell = j.at("cell").get<int>();
  }
  return f;
}

json motions_to_json(const std::vector<MotionModelParams>& motions) {
  json arr = json::array();
  for (const auto& m : motions) arr.push_back(motion_to_json(m));
  return arr;
}

std::vector<MotionModelParams> motions_from_json(const json& arr) {
  std::vector<MotionModelParams> out;
  for (const auto& j : arr) out.push_back(motion_from_json(j));
  return out;
}

const char* shape_name(SpriteShape s) {
  switch (s) {
    case SpriteShape::Rectangle: return "rectangle";
    case SpriteShape::Ellipse: return "ellipse";
    case SpriteShape::Triangle: return "triangle";
  }
  return "rectangle";
}

SpriteShape shape_from_name(const std::string& name) {
  if (name == "rectangle") return SpriteShape::Rectangle;
  if (name == "ellipse") return SpriteShape::Ellipse;
  if (name == "triangle") return SpriteShape::Triangle;
  throw Error(ErrorKind::ConfigError, "unknown sprite shape '" + name + "'");
}

std::string frame_path(const std::string& dir, const char* stem, int t, const char* ext) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%04d.%s", stem, t, ext);
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

void save_scene(const Scene& scene, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir);

  const SceneSpec& spec = scene.spec;
  json doc;
  doc["width"] = spec.width;
  doc["height"] = spec.height;
  doc["frames"] = spec.frames;
  doc["sigma"] = spec.sigma;
  doc["seed"] = spec.seed;
  doc["train_frames"] = spec.train_frames;
  doc["background"] = {{"fill", fill_to_json(spec.background_fill)},
                       {"motion", motions_to_json(spec.background_motion)}};
  json sprites = json::array();
  for (const auto& s : spec.sprites) {
    json j;
    j["shape"] = shape_name(s.shape);
    j["center"] = {s.cx, s.cy};
    j["radii"] = {s.rx, s.ry};
    if (s.shape == SpriteShape::Triangle) {
      json tri = json::array();
      for (const auto& v : s.triangle) tri.push_back({v[0], v[1]});
      j["triangle"] = tri;
    }
    j["fill"] = fill_to_json(s.fill);
    j["motion"] = motions_to_json(s.motion);
    sprites.push_back(j);
  }
  doc["sprites"] = sprites;

  std::ofstream out(std::filesystem::path(dir) / "scene.json", std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write scene.json in " + dir);
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write scene.json in " + dir);

  const int n_labels = static_cast<int>(spec.sprites.size()) + 1;
  for (int t = 0; t < spec.frames; ++t) {
    const SceneFrame& frame = scene.frames.at(t);
    write_ppm(frame.image, frame_path(dir, "frame", t, "ppm"));
    write_flo(frame.flow, frame_path(dir, "flow", t, "flo"));
    write_components_pgm(frame.instances, n_labels, frame_path(dir, "gt", t, "pgm"));
    write_mask_pgm(frame.foreground, frame_path(dir, "fg", t, "pgm"));
  }
}

Scene load_scene(const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / "scene.json");
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open scene.json in " + dir);
  json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad scene.json: ") + e.what());
  }

  Scene scene;
  SceneSpec& spec = scene.spec;
  try {
    spec.width = doc.at("width").get<int>();
    spec.height = doc.at("height").get<int>();
    spec.frames = doc.at("frames").get<int>();
    spec.sigma = doc.at("sigma").get<double>();
    spec.seed = doc.at("seed").get<std::uint64_t>();
    spec.train_frames = doc.value("train_frames", 0);
    spec.background_fill = fill_from_json(doc.at("background").at("fill"));
    spec.background_motion = motions_from_json(doc.at("background").at("motion"));
    for (const auto& j : doc.at("sprites")) {
      Sprite s;
      s.shape = shape_from_name(j.at("shape").get<std::string>());
      s.cx = j.at("center").at(0).get<double>();
      s.cy = j.at("center").at(1).get<double>();
      s.rx = j.at("radii").at(0).get<double>();
      s.ry = j.at("radii").at(1).get<double>();
      if (j.contains("triangle"))
        for (int v = 0; v < 3; ++v)
          for (int c = 0; c < 2; ++c) s.triangle[v][c] = j.at("triangle").at(v).at(c).get<double>();
      s.fill = fill_from_json(j.at("fill"));
      s.motion = motions_from_json(j.at("motion"));
      spec.sprites.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad scene.json: ") + e.what());
  }

  const int n_labels = static_cast<int>(spec.sprites.size()) + 1;
  scene.frames.resize(spec.frames);
  for (int t = 0; t < spec.frames; ++t) {
    SceneFrame& frame = scene.frames[t];
    frame.image = read_ppm(frame_path(dir, "frame", t, "ppm"));
    frame.flow = read_flo(frame_path(dir, "flow", t, "flo"));
    frame.instances = read_components_pgm(frame_path(dir, "gt", t, "pgm"), n_labels);
    frame.foreground = read_mask_pgm(frame_path(dir, "fg", t, "pgm"));
    if (frame.image.width != spec.width || frame.flow.width != spec.width ||
        frame.instances.width != spec.width || frame.foreground.width != spec.width ||
        frame.image.height != spec.height || frame.flow.height != spec.height)
      throw Error(ErrorKind::DimensionMismatch, "frame files disagree with scene.json");
  }
  return scene;
}

}  // namespace gwm
