#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgrl/common.hpp"
#include "pgrl/geometry.hpp"

namespace pgrl::render {

// Interleaved HWC float image, values in [0, 1].
struct Image {
  int h = 0;
  int w = 0;
  std::vector<float> px;

  Image() = default;
  Image(int height, int width) : h(height), w(width), px(static_cast<std::size_t>(h) * w * 3) {}

  float* at(int y, int x) { return px.data() + (static_cast<std::size_t>(y) * w + x) * 3; }
  const float* at(int y, int x) const {
    return px.data() + (static_cast<std::size_t>(y) * w + x) * 3;
  }

  void clamp01() {
    for (auto& v : px) v = pgrl::clamp(v, 0.0f, 1.0f);
  }
};

struct Mask {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> v;  // {0, 1}
  // Optional sub-pixel area coverage in [0,1] (same layout). Produced by the
  // renderer; lets geometric warps reconstruct edges below the pixel grid.
  std::vector<float> coverage;
  // Renderer metadata: the convex footprint polygon (pixel coordinates) that
  // generated this mask, minus an optional occluding polygon. Geometric
  // warps map these exactly instead of resampling the raster. Empty for
  // masks loaded from disk.
  geom::Poly poly;
  geom::Poly occluder;

  Mask() = default;
  Mask(int height, int width) : h(height), w(width), v(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }

  long count() const {
    long n = 0;
    for (auto b : v) n += b;
    return n;
  }

  bool empty_mask() const { return count() == 0; }
};

double mask_iou(const Mask& a, const Mask& b);

// Bilinear sample at continuous pixel-center coordinates, edge clamped.
void sample_bilinear(const Image& img, double x, double y, float out[3]);
double sample_bilinear_mask(const Mask& m, double x, double y);
// Interpolates the coverage plane when present, the binary values otherwise.
double sample_bilinear_coverage(const Mask& m, double x, double y);

// 8-bit binary portable pixmap / graymap files. Masks use {0, 255}.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);
void write_pgm(const std::string& path, const Mask& m);
Mask read_pgm(const std::string& path);

}  // namespace pgrl::render
