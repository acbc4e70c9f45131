#include "pgrl/augment.hpp"

#include <cmath>

namespace pgrl::aug {

void AugmentationSpec::validate() const {
  auto p01 = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(p01(crop.prob) && p01(blur.prob) && p01(brightness.prob) && p01(perspective.prob) &&
              p01(channel_noise.prob),
          "augment: probabilities must lie in [0, 1]");
  require(crop.min_keep > 0.0 && crop.min_keep <= 1.0, "augment: crop keep fraction in (0, 1]");
  require(blur.sigma_min >= 0.0 && blur.sigma_max >= blur.sigma_min, "augment: bad blur range");
  require(perspective.max_disp >= 0.0 && perspective.max_disp < 0.5,
          "augment: corner displacement must stay below half the image");
}

Homography Homography::compose(const Homography& o) const {
  Homography r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
      r.m[i * 3 + j] = s;
    }
  return r;
}

Homography Homography::inverse() const {
  // Adjugate over determinant.
  const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5], g = m[6],
               h = m[7], i = m[8];
  const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  require(std::fabs(det) > 1e-15, "homography: singular matrix");
  Homography r;
  r.m = {(e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det,
         (f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det,
         (d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det};
  return r;
}

Homography Homography::from_quad(const std::array<double, 8>& dst,
                                 const std::array<double, 8>& src) {
  // Solve the standard 8x8 DLT system for h with h[8] = 1.
  double A[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double u = dst[2 * i], v = dst[2 * i + 1];
    const double x = src[2 * i], y = src[2 * i + 1];
    double* r1 = A[2 * i];
    double* r2 = A[2 * i + 1];
    r1[0] = u; r1[1] = v; r1[2] = 1; r1[6] = -u * x; r1[7] = -v * x; r1[8] = x;
    r2[3] = u; r2[4] = v; r2[5] = 1; r2[6] = -u * y; r2[7] = -v * y; r2[8] = y;
  }
  for (int c = 0; c < 8; ++c) {
    int piv = c;
    for (int r = c + 1; r < 8; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
    for (int k = 0; k < 9; ++k) std::swap(A[c][k], A[piv][k]);
    require(std::fabs(A[c][c]) > 1e-12, "homography: degenerate quad");
    const double p = A[c][c];
    for (int k = c; k < 9; ++k) A[c][k] /= p;
    for (int r = 0; r < 8; ++r) {
      if (r == c) continue;
      const double f = A[r][c];
      for (int k = c; k < 9; ++k) A[r][k] -= f * A[c][k];
    }
  }
  Homography h;
  for (int i = 0; i < 8; ++i) h.m[i] = A[i][8];
  h.m[8] = 1.0;
  return h;
}

namespace {

bool quad_convex(const std::array<double, 8>& q) {
  double sign = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double ax = q[2 * ((i + 1) % 4)] - q[2 * i];
    const double ay = q[2 * ((i + 1) % 4) + 1] - q[2 * i + 1];
    const double bx = q[2 * ((i + 2) % 4)] - q[2 * ((i + 1) % 4)];
    const double by = q[2 * ((i + 2) % 4) + 1] - q[2 * ((i + 1) % 4) + 1];
    const double cross = ax * by - ay * bx;
    if (std::fabs(cross) < 1e-9) return false;
    if (sign == 0.0)
      sign = cross;
    else if (sign * cross < 0.0)
      return false;
  }
  return true;
}

// Deterministic per-element noise derived from a key; independent of thread
// scheduling.
float keyed_noise(std::uint64_t key, std::uint64_t index, double amplitude) {
  std::uint64_t z = key ^ (index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
  return static_cast<float>((2.0 * u - 1.0) * amplitude);
}

render::Image warp_image(const render::Image& src, const Homography& h) {
  render::Image out(src.h, src.w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      const Vec2 s = h.apply(x + 0.5, y + 0.5);
      sample_bilinear(src, s.x, s.y, out.at(y, x));
    }
  return out;
}

// h maps output pixels to source pixels.
render::Mask warp_mask(const render::Mask& src, const Homography& h) {
  render::Mask out(src.h, src.w);
  if (!src.poly.empty()) {
    // Exact path: map the generating polygons forward and re-rasterize.
    // Content outside the source frame does not exist, so the footprint is
    // clipped to the warped frame.
    const Homography fwd = h.inverse();
    auto map_poly = [&](const geom::Poly& p) {
      geom::Poly q;
      q.reserve(p.size());
      for (const Vec2& v : p) q.push_back(fwd.apply(v.x, v.y));
      geom::make_ccw(q);
      return q;
    };
    geom::Poly frame = {{0, 0}, {double(src.w), 0}, {double(src.w), double(src.h)},
                        {0, double(src.h)}};
    geom::Poly warped_frame = map_poly(frame);
    geom::Poly poly = geom::clip_to_poly(map_poly(src.poly), warped_frame);
    geom::Poly occ;
    if (!src.occluder.empty()) occ = map_poly(src.occluder);
    for (int y = 0; y < src.h; ++y)
      for (int x = 0; x < src.w; ++x) {
        const Vec2 c{x + 0.5, y + 0.5};
        out.at(y, x) =
            (geom::point_in_convex(poly, c) && !geom::point_in_convex(occ, c)) ? 1 : 0;
      }
    out.poly = poly;
    out.occluder = occ;
    return out;
  }
  // Fallback for masks without geometry: interpolate the coverage plane (or
  // the binary raster) and threshold.
  out.coverage.assign(out.v.size(), 0.0f);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      const Vec2 s = h.apply(x + 0.5, y + 0.5);
      const double cover = sample_bilinear_coverage(src, s.x, s.y);
      out.at(y, x) = cover > 0.5 ? 1 : 0;
      out.coverage[static_cast<std::size_t>(y) * src.w + x] =
          static_cast<float>(clamp(cover, 0.0, 1.0));
    }
  return out;
}

void gaussian_blur(render::Image& img, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(radius + 1);
  double sum = 0.0;
  for (int i = 0; i <= radius; ++i) {
    k[i] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += (i == 0) ? k[i] : 2.0 * k[i];
  }
  for (auto& v : k) v /= sum;

  render::Image tmp(img.h, img.w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double acc[3] = {};
      for (int i = -radius; i <= radius; ++i) {
        const float* p = img.at(y, clamp(x + i, 0, img.w - 1));
        const double wk = k[std::abs(i)];
        for (int c = 0; c < 3; ++c) acc[c] += wk * p[c];
      }
      float* o = tmp.at(y, x);
      for (int c = 0; c < 3; ++c) o[c] = static_cast<float>(acc[c]);
    }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double acc[3] = {};
      for (int i = -radius; i <= radius; ++i) {
        const float* p = tmp.at(clamp(y + i, 0, img.h - 1), x);
        const double wk = k[std::abs(i)];
        for (int c = 0; c < 3; ++c) acc[c] += wk * p[c];
      }
      float* o = img.at(y, x);
      for (int c = 0; c < 3; ++c) o[c] = clamp(static_cast<float>(acc[c]), 0.0f, 1.0f);
    }
}

}  // namespace

Homography AppliedAugmentation::geometry(int w, int h) const {
  // Output pixel -> source pixel. The image pipeline crops first, then
  // warps, so the inverse map applies the perspective inverse first.
  Homography g = Homography::identity();
  if (perspective) {
    const std::array<double, 8> frame = {0, 0, double(w), 0, double(w), double(h), 0, double(h)};
    g = Homography::from_quad(frame, quad);
  }
  if (crop) {
    Homography c;
    c.m = {crop_keep, 0, crop_x0, 0, crop_keep, crop_y0, 0, 0, 1};
    g = c.compose(g);
  }
  return g;
}

AppliedAugmentation sample_augmentation(const AugmentationSpec& spec, int w, int h, Rng& rng) {
  spec.validate();
  AppliedAugmentation a;

  if (rng.uniform01() < spec.crop.prob) {
    a.crop = true;
    a.crop_keep = rng.uniform(spec.crop.min_keep, 1.0);
    a.crop_x0 = rng.uniform(0.0, w * (1.0 - a.crop_keep));
    a.crop_y0 = rng.uniform(0.0, h * (1.0 - a.crop_keep));
  }
  if (rng.uniform01() < spec.blur.prob) {
    a.blur = true;
    a.sigma = rng.uniform(spec.blur.sigma_min, spec.blur.sigma_max);
  }
  if (rng.uniform01() < spec.brightness.prob) {
    a.brightness = true;
    a.delta = rng.uniform(-spec.brightness.max_delta, spec.brightness.max_delta);
  }
  if (rng.uniform01() < spec.perspective.prob) {
    a.perspective = true;
    const double dw = spec.perspective.max_disp * w, dh = spec.perspective.max_disp * h;
    const std::array<double, 8> corners = {0, 0, double(w), 0, double(w), double(h), 0,
                                           double(h)};
    // Degenerate (non-convex) quads are re-sampled, never emitted.
    for (int attempt = 0;; ++attempt) {
      for (int i = 0; i < 4; ++i) {
        a.quad[2 * i] = corners[2 * i] + rng.uniform(-dw, dw);
        a.quad[2 * i + 1] = corners[2 * i + 1] + rng.uniform(-dh, dh);
      }
      if (quad_convex(a.quad)) break;
      require(attempt < 64, "augment: could not sample a convex quad");
    }
  }
  if (rng.uniform01() < spec.channel_noise.prob) {
    a.channel_noise = true;
    a.amplitude = rng.uniform(0.0, spec.channel_noise.max_amplitude);
    a.noise_key = rng.next_u64();
  }
  return a;
}

AugmentResult apply_augmentation(const render::Image& img, const render::MaskPair* masks,
                                 const AppliedAugmentation& a) {
  AugmentResult res;
  res.applied = a;

  render::Image work = img;

  if (a.crop) {
    Homography c;
    c.m = {a.crop_keep, 0, a.crop_x0, 0, a.crop_keep, a.crop_y0, 0, 0, 1};
    work = warp_image(work, c);
  }
  if (a.blur) gaussian_blur(work, a.sigma);
  if (a.brightness) {
    for (auto& v : work.px) v = clamp(v + static_cast<float>(a.delta), 0.0f, 1.0f);
  }
  if (a.perspective) {
    const std::array<double, 8> frame = {0, 0, double(img.w), 0, double(img.w), double(img.h),
                                         0, double(img.h)};
    work = warp_image(work, Homography::from_quad(frame, a.quad));
  }
  if (a.channel_noise) {
    for (std::size_t i = 0; i < work.px.size(); ++i)
      work.px[i] = clamp(work.px[i] + keyed_noise(a.noise_key, i, a.amplitude), 0.0f, 1.0f);
  }
  res.augmented = std::move(work);

  // Denoised target and masks follow only the geometric transforms.
  if (a.any_geometric()) {
    const Homography g = a.geometry(img.w, img.h);
    res.denoised_target = warp_image(img, g);
    if (masks) {
      res.masks.box = warp_mask(masks->box, g);
      res.masks.gripper = warp_mask(masks->gripper, g);
    }
  } else {
    res.denoised_target = img;
    if (masks) res.masks = *masks;
  }
  return res;
}

AugmentResult augment(const render::Image& img, const render::MaskPair* masks,
                      const AugmentationSpec& spec, Rng& rng) {
  return apply_augmentation(img, masks, sample_augmentation(spec, img.w, img.h, rng));
}

EvalRandomization sample_eval_randomization(const render::AdaptationRanges& ranges,
                                            const AugmentationSpec& spec, Rng& rng) {
  EvalRandomization er;
  er.scene_draw = render::sample_adaptations(ranges, rng);
  er.image_noise = spec;
  return er;
}

}  // namespace pgrl::aug
