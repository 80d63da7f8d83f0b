#include "gwm/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "gwm/error.hpp"

namespace gwm {

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr int kMaxDim = 65535;

std::uint32_t load_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_le32(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

float bits_to_float(std::uint32_t bits) {
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::uint32_t float_to_bits(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  return bits;
}

}  // namespace

bool FlowField::all_finite() const {
  for (float f : data)
    if (!std::isfinite(f)) return false;
  return true;
}

int LabelMap::max_label() const {
  int m = 0;
  for (int v : labels) m = std::max(m, v);
  return m;
}

FlowField read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);

  unsigned char header[12];
  if (!in.read(reinterpret_cast<char*>(header), 12))
    throw Error(ErrorKind::TruncatedFile, path + ": header short");

  if (bits_to_float(load_le32(header)) != kFloMagic)
    throw Error(ErrorKind::BadMagic, path + ": first float is not 202021.25");

  const auto w = static_cast<std::int32_t>(load_le32(header + 4));
  const auto h = static_cast<std::int32_t>(load_le32(header + 8));
  if (w <= 0 || h <= 0 || w > kMaxDim || h > kMaxDim)
    throw Error(ErrorKind::DimensionOverflow, path + ": bad dimensions");

  FlowField field(w, h);
  const std::size_t count = field.data.size();
  std::vector<unsigned char> raw(count * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw Error(ErrorKind::TruncatedFile, path + ": payload short");

  for (std::size_t i = 0; i < count; ++i) {
    const float f = bits_to_float(load_le32(raw.data() + i * 4));
    if (!std::isfinite(f)) throw Error(ErrorKind::NonFiniteValue, path + ": non-finite flow");
    field.data[i] = f;
  }
  return field;
}

void write_flo(const FlowField& field, const std::string& path) {
  if (field.data.size() != field.pixels() * 2)
    throw Error(ErrorKind::DimensionMismatch, "flow buffer does not match dimensions");
  if (!field.all_finite())
    throw Error(ErrorKind::NonFiniteValue, "refusing to write non-finite flow");
  if (field.width <= 0 || field.height <= 0 || field.width > kMaxDim || field.height > kMaxDim)
    throw Error(ErrorKind::DimensionOverflow, "bad dimensions");

  std::vector<unsigned char> raw(12 + field.data.size() * 4);
  store_le32(float_to_bits(kFloMagic), raw.data());
  store_le32(static_cast<std::uint32_t>(field.width), raw.data() + 4);
  store_le32(static_cast<std::uint32_t>(field.height), raw.data() + 8);
  for (std::size_t i = 0; i < field.data.size(); ++i)
    store_le32(float_to_bits(field.data[i]), raw.data() + 12 + i * 4);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(reinterpret_cast<const char*>(raw.data()),
                         static_cast<std::streamsize>(raw.size())))
    throw Error(ErrorKind::IoFailure, "cannot write " + path);
}

namespace {

void write_pnm(const std::string& magic, int w, int h, const unsigned char* bytes,
               std::size_t count, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  out << magic << "\n" << w << " " << h << "\n255\n";
  if (!out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(count)))
    throw Error(ErrorKind::IoFailure, "cannot write " + path);
}

// Reads magic + dimensions + maxval, skipping '#' comments, and leaves the
// stream right after the single whitespace byte that precedes the payload.
void read_pnm_header(std::ifstream& in, const std::string& path, const std::string& want_magic,
                     int& w, int& h) {
  std::string magic;
  in >> magic;
  if (magic != want_magic) throw Error(ErrorKind::BadMagic, path + ": expected " + want_magic);
  int maxval = 0;
  int fields[3];
  for (int i = 0; i < 3; ++i) {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    if (!(in >> fields[i])) throw Error(ErrorKind::TruncatedFile, path + ": header short");
  }
  w = fields[0];
  h = fields[1];
  maxval = fields[2];
  if (w <= 0 || h <= 0 || w > kMaxDim || h > kMaxDim)
    throw Error(ErrorKind::DimensionOverflow, path + ": bad dimensions");
  if (maxval != 255) throw Error(ErrorKind::BadMagic, path + ": only maxval 255 supported");
  in.get();  // single whitespace before payload
}

}  // namespace

void write_ppm(const RgbImage& image, const std::string& path) {
  write_pnm("P6", image.width, image.height, image.data.data(), image.data.size(), path);
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  int w = 0, h = 0;
  read_pnm_header(in, path, "P6", w, h);
  RgbImage image(w, h);
  if (!in.read(reinterpret_cast<char*>(image.data.data()),
               static_cast<std::streamsize>(image.data.size())))
    throw Error(ErrorKind::TruncatedFile, path + ": payload short");
  return image;
}

void write_mask_pgm(const LabelMap& mask, const std::string& path) {
  std::vector<unsigned char> bytes(mask.labels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.labels[i] != 0 ? 255 : 0;
  write_pnm("P5", mask.width, mask.height, bytes.data(), bytes.size(), path);
}

LabelMap read_mask_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  int w = 0, h = 0;
  read_pnm_header(in, path, "P5", w, h);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw Error(ErrorKind::TruncatedFile, path + ": payload short");
  LabelMap mask(w, h);
  for (std::size_t i = 0; i < bytes.size(); ++i) mask.labels[i] = bytes[i] >= 128 ? 1 : 0;
  return mask;
}

void write_components_pgm(const LabelMap& components, int k, const std::string& path) {
  std::vector<unsigned char> bytes(components.labels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int label = components.labels[i];
    bytes[i] = k > 1 ? static_cast<unsigned char>(std::lround(255.0 * label / (k - 1))) : 0;
  }
  write_pnm("P5", components.width, components.height, bytes.data(), bytes.size(), path);
}

LabelMap read_components_pgm(const std::string& path, int k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  int w = 0, h = 0;
  read_pnm_header(in, path, "P5", w, h);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw Error(ErrorKind::TruncatedFile, path + ": payload short");
  LabelMap map(w, h);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    map.labels[i] = k > 1 ? static_cast<int>(std::lround(bytes[i] * (k - 1) / 255.0)) : 0;
  return map;
}

namespace {

void hsv_to_rgb(double h_deg, double s, double v, std::uint8_t* out) {
  const double c = v * s;
  const double hp = h_deg / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  out[0] = static_cast<std::uint8_t>(std::lround(255.0 * (r + m)));
  out[1] = static_cast<std::uint8_t>(std::lround(255.0 * (g + m)));
  out[2] = static_cast<std::uint8_t>(std::lround(255.0 * (b + m)));
}

}  // namespace

RgbImage flow_to_color(const FlowField& field, double max_magnitude) {
  const std::size_t n = field.pixels();
  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = field.data[2 * i];
    const double v = field.data[2 * i + 1];
    mags[i] = std::sqrt(u * u + v * v);
  }

  double scale = max_magnitude;
  if (scale <= 0.0 && n > 0) {
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t idx =
        std::min(n - 1, static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n))) -
                            (n > 1 ? 1 : 0));
    scale = sorted[idx];
    if (scale < 1e-12) scale = sorted.back();
  }
  if (scale < 1e-12) scale = 1.0;

  RgbImage image(field.width, field.height);
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) {
      const double u = field.u(x, y);
      const double v = field.v(x, y);
      const double mag = mags[static_cast<std::size_t>(y) * field.width + x];
      double hue = 0.0;
      if (mag > 0.0) {
        hue = std::atan2(v, u) * (180.0 / 3.14159265358979323846);
        if (hue < 0.0) hue += 360.0;
      }
      const double sat = std::clamp(mag / scale, 0.0, 1.0);
      hsv_to_rgb(hue, sat, 1.0, image.pixel(x, y));
    }
  }
  return image;
}

}  // namespace gwm
