#include "pgrl/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace pgrl::render {

double mask_iou(const Mask& a, const Mask& b) {
  require(a.h == b.h && a.w == b.w, "mask_iou: size mismatch");
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    inter += a.v[i] & b.v[i];
    uni += a.v[i] | b.v[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void sample_bilinear(const Image& img, double x, double y, float out[3]) {
  const double sx = x - 0.5, sy = y - 0.5;
  int x0 = static_cast<int>(std::floor(sx));
  int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  const int x1 = clamp(x0 + 1, 0, img.w - 1), y1 = clamp(y0 + 1, 0, img.h - 1);
  x0 = clamp(x0, 0, img.w - 1);
  y0 = clamp(y0, 0, img.h - 1);
  const float* p00 = img.at(y0, x0);
  const float* p01 = img.at(y0, x1);
  const float* p10 = img.at(y1, x0);
  const float* p11 = img.at(y1, x1);
  for (int c = 0; c < 3; ++c) {
    const double top = p00[c] * (1 - fx) + p01[c] * fx;
    const double bot = p10[c] * (1 - fx) + p11[c] * fx;
    out[c] = static_cast<float>(top * (1 - fy) + bot * fy);
  }
}

double sample_bilinear_mask(const Mask& m, double x, double y) {
  const double sx = x - 0.5, sy = y - 0.5;
  int x0 = static_cast<int>(std::floor(sx));
  int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  const int x1 = clamp(x0 + 1, 0, m.w - 1), y1 = clamp(y0 + 1, 0, m.h - 1);
  x0 = clamp(x0, 0, m.w - 1);
  y0 = clamp(y0, 0, m.h - 1);
  const double top = m.at(y0, x0) * (1 - fx) + m.at(y0, x1) * fx;
  const double bot = m.at(y1, x0) * (1 - fx) + m.at(y1, x1) * fx;
  return top * (1 - fy) + bot * fy;
}

double sample_bilinear_coverage(const Mask& m, double x, double y) {
  // Zero padding outside the frame: there is no mask content beyond the data.
  const double sx = x - 0.5, sy = y - 0.5;
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  auto cv = [&](int yy, int xx) -> double {
    if (xx < 0 || xx >= m.w || yy < 0 || yy >= m.h) return 0.0;
    if (m.coverage.empty()) return m.at(yy, xx);
    return m.coverage[static_cast<std::size_t>(yy) * m.w + xx];
  };
  const double top = cv(y0, x0) * (1 - fx) + cv(y0, x0 + 1) * fx;
  const double bot = cv(y0 + 1, x0) * (1 - fx) + cv(y0 + 1, x0 + 1) * fx;
  return top * (1 - fy) + bot * fy;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), "write_ppm: cannot open '" + path + "'");
  os << "P6\n" << img.w << " " << img.h << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.w) * 3);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c)
        row[static_cast<std::size_t>(x) * 3 + c] = static_cast<unsigned char>(
            std::lround(clamp(img.at(y, x)[c], 0.0f, 1.0f) * 255.0f));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  require(os.good(), "write_ppm: write failed for '" + path + "'");
}

namespace {

void skip_ws_and_comments(std::istream& is) {
  int c = is.peek();
  while (c == '#' || std::isspace(c)) {
    if (c == '#')
      while (is.get() != '\n' && is.good()) {}
    else
      is.get();
    c = is.peek();
  }
}

int read_pnm_int(std::istream& is) {
  skip_ws_and_comments(is);
  int v = 0;
  is >> v;
  return v;
}

}  // namespace

Image read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_ppm: cannot open '" + path + "'");
  std::string magic;
  is >> magic;
  require(magic == "P6", "read_ppm: '" + path + "' is not a P6 file");
  const int w = read_pnm_int(is), h = read_pnm_int(is), maxv = read_pnm_int(is);
  require(maxv == 255, "read_ppm: only 8-bit files supported");
  is.get();  // single whitespace after header
  Image img(h, w);
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(is.good(), "read_ppm: truncated file '" + path + "'");
  for (std::size_t i = 0; i < buf.size(); ++i) img.px[i] = buf[i] / 255.0f;
  return img;
}

void write_pgm(const std::string& path, const Mask& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), "write_pgm: cannot open '" + path + "'");
  os << "P5\n" << m.w << " " << m.h << "\n255\n";
  std::vector<unsigned char> buf(m.v.size());
  for (std::size_t i = 0; i < m.v.size(); ++i) buf[i] = m.v[i] ? 255 : 0;
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(os.good(), "write_pgm: write failed for '" + path + "'");
}

Mask read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_pgm: cannot open '" + path + "'");
  std::string magic;
  is >> magic;
  require(magic == "P5", "read_pgm: '" + path + "' is not a P5 file");
  const int w = read_pnm_int(is), h = read_pnm_int(is), maxv = read_pnm_int(is);
  require(maxv == 255, "read_pgm: only 8-bit files supported");
  is.get();
  Mask m(h, w);
  std::vector<unsigned char> buf(m.v.size());
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(is.good(), "read_pgm: truncated file '" + path + "'");
  for (std::size_t i = 0; i < buf.size(); ++i) m.v[i] = buf[i] >= 128 ? 1 : 0;
  return m;
}

}  // namespace pgrl::render
