#include "pgrl/scene.hpp"

#include <cmath>

namespace pgrl::render {

namespace {

bool in_rect(Vec2 p, Vec2 center, double half_w, double half_h) {
  return std::fabs(p.x - center.x) <= half_w && std::fabs(p.y - center.y) <= half_h;
}

double dist_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 <= 1e-18) return (p - a).norm();
  double t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
  t = clamp(t, 0.0, 1.0);
  return (p - Vec2{a.x + t * ab.x, a.y + t * ab.y}).norm();
}

bool on_arm(const SceneSpec& s, Vec2 p) {
  const double r = s.arm_width / 2.0;
  for (int j = 0; j < arm::kNumJoints; ++j)
    if (dist_to_segment(p, s.arm_points[j], s.arm_points[j + 1]) <= r) return true;
  return false;
}

bool on_box(const SceneSpec& s, Vec2 p) {
  return in_rect(p, s.box_position, s.box_size / 2.0, s.box_size / 2.0);
}

bool on_gripper(const SceneSpec& s, Vec2 p) {
  return in_rect(p, s.gripper_position, s.gripper_width / 2.0, s.gripper_depth / 2.0);
}

bool on_any_object(const SceneSpec& s, Vec2 p) {
  return on_gripper(s, p) || on_box(s, p) || on_arm(s, p);
}

Rgb floor_color(const SceneSpec& s, Vec2 p) {
  Rgb c = s.palette.floor;
  auto cell = [](double v, double size) {
    return static_cast<long>(std::floor(v / size));
  };
  switch (s.floor_pattern) {
    case 1: {  // checkerboard
      const bool odd = ((cell(p.x, 0.08) + cell(p.y, 0.08)) & 1) != 0;
      const float d = odd ? -0.06f : 0.06f;
      c.r += d;
      c.g += d;
      c.b += d;
      break;
    }
    case 2: {  // stripes
      const bool odd = (cell(p.x + 0.5 * p.y, 0.06) & 1) != 0;
      if (odd) {
        c.r -= 0.08f;
        c.g -= 0.05f;
        c.b -= 0.02f;
      }
      break;
    }
    case 3: {  // dot grid
      const double mx = p.x - std::floor(p.x / 0.1) * 0.1 - 0.05;
      const double my = p.y - std::floor(p.y / 0.1) * 0.1 - 0.05;
      if (mx * mx + my * my < 0.028 * 0.028) {
        c.r -= 0.10f;
        c.g -= 0.10f;
        c.b -= 0.06f;
      }
      break;
    }
    default: break;
  }
  return c;
}

}  // namespace

SceneSpec make_scene(const arm::ArmModel& m, const arm::JointConfig& q, Vec2 box,
                     double box_width, double gripper_opening) {
  SceneSpec s;
  s.arm_points = arm::link_endpoints(m, q);
  s.box_position = box;
  s.box_size = box_width;
  s.gripper_position = s.arm_points[arm::kNumJoints];
  s.gripper_width = gripper_opening;
  return s;
}

SceneSpec make_scene(const env::GraspEnv& env) {
  return make_scene(env.arm_model(), env.state().q, env.state().box_position,
                    env.config().box_width, env.config().gripper_opening);
}

Image render(const SceneSpec& s) {
  Image img(s.camera.h, s.camera.w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.camera.h; ++y) {
    for (int x = 0; x < s.camera.w; ++x) {
      const Vec2 p = s.camera.px_to_world(x + 0.5, y + 0.5);
      Rgb c;
      if (on_gripper(s, p)) {
        c = s.palette.gripper;
      } else if (on_box(s, p)) {
        c = s.palette.box;
      } else if (on_arm(s, p)) {
        c = s.palette.arm;
      } else {
        c = floor_color(s, p);
        if (s.shadow.enabled && on_any_object(s, p - s.shadow.offset)) {
          const float f = static_cast<float>(s.shadow.darken);
          c = {c.r * f, c.g * f, c.b * f};
        }
      }
      float* px = img.at(y, x);
      px[0] = clamp(c.r, 0.0f, 1.0f);
      px[1] = clamp(c.g, 0.0f, 1.0f);
      px[2] = clamp(c.b, 0.0f, 1.0f);
    }
  }
  return img;
}

namespace {

// World axis-aligned rect projected into (counter-clockwise) pixel space.
geom::Poly rect_quad_px(const Camera& cam, Vec2 c, double hw, double hh) {
  geom::Poly q = {cam.world_to_px({c.x - hw, c.y - hh}), cam.world_to_px({c.x + hw, c.y - hh}),
                  cam.world_to_px({c.x + hw, c.y + hh}), cam.world_to_px({c.x - hw, c.y + hh})};
  geom::make_ccw(q);
  return q;
}

void rasterize_coverage(const geom::Poly& quad, const geom::Poly* occluder, Mask& m) {
  double x_lo = 1e18, x_hi = -1e18, y_lo = 1e18, y_hi = -1e18;
  for (const Vec2& p : quad) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(x_lo)));
  const int x1 = std::min(m.w - 1, static_cast<int>(std::ceil(x_hi)));
  const int y0 = std::max(0, static_cast<int>(std::floor(y_lo)));
  const int y1 = std::min(m.h - 1, static_cast<int>(std::ceil(y_hi)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      geom::Poly vis = geom::clip_to_poly(quad, geom::pixel_square(x, y));
      if (vis.empty()) continue;
      double a = geom::poly_area(vis);
      if (occluder) {
        geom::Poly hidden = geom::clip_to_poly(vis, *occluder);
        if (!hidden.empty()) a -= geom::poly_area(hidden);
      }
      m.coverage[static_cast<std::size_t>(y) * m.w + x] =
          static_cast<float>(clamp(a, 0.0, 1.0));
    }
}

}  // namespace

MaskPair render_masks(const SceneSpec& s) {
  // Binary values come from the pixel-center test, matching the rendered
  // colors exactly. The coverage planes hold the exact footprint area per
  // pixel, and the generating polygons travel with the masks so geometric
  // warps can re-rasterize instead of resampling.
  MaskPair mp{Mask(s.camera.h, s.camera.w), Mask(s.camera.h, s.camera.w)};
  mp.box.coverage.assign(mp.box.v.size(), 0.0f);
  mp.gripper.coverage.assign(mp.gripper.v.size(), 0.0f);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.camera.h; ++y) {
    for (int x = 0; x < s.camera.w; ++x) {
      const Vec2 p = s.camera.px_to_world(x + 0.5, y + 0.5);
      if (on_gripper(s, p))
        mp.gripper.at(y, x) = 1;
      else if (on_box(s, p))
        mp.box.at(y, x) = 1;
    }
  }
  const geom::Poly box_q =
      rect_quad_px(s.camera, s.box_position, s.box_size / 2, s.box_size / 2);
  const geom::Poly grip_q =
      rect_quad_px(s.camera, s.gripper_position, s.gripper_width / 2, s.gripper_depth / 2);
  rasterize_coverage(box_q, &grip_q, mp.box);
  rasterize_coverage(grip_q, nullptr, mp.gripper);
  mp.box.poly = box_q;
  mp.box.occluder = grip_q;
  mp.gripper.poly = grip_q;
  return mp;
}

Rgb hue_shift(const Rgb& c, double shift) {
  if (shift == 0.0) return c;
  // RGB -> HSV, rotate hue (shift in turns), back to RGB.
  const double r = c.r, g = c.g, b = c.b;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0) {
    if (mx == r)
      h = std::fmod((g - b) / d, 6.0);
    else if (mx == g)
      h = (b - r) / d + 2.0;
    else
      h = (r - g) / d + 4.0;
    h /= 6.0;
  }
  const double s = mx <= 0 ? 0.0 : d / mx;
  const double v = mx;
  h = h + shift;
  h -= std::floor(h);
  const double hh = h * 6.0;
  const int i = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double out[3];
  switch (i) {
    case 0: out[0] = v; out[1] = t; out[2] = p; break;
    case 1: out[0] = q; out[1] = v; out[2] = p; break;
    case 2: out[0] = p; out[1] = v; out[2] = t; break;
    case 3: out[0] = p; out[1] = q; out[2] = v; break;
    case 4: out[0] = t; out[1] = p; out[2] = v; break;
    default: out[0] = v; out[1] = p; out[2] = q; break;
  }
  return {static_cast<float>(out[0]), static_cast<float>(out[1]), static_cast<float>(out[2])};
}

AdaptationDraw sample_adaptations(const AdaptationRanges& r, Rng& rng) {
  // The draw count is fixed so downstream streams stay aligned no matter
  // which ranges are active.
  AdaptationDraw d;
  const int pat = rng.uniform_int(0, std::max(1, r.floor_pattern_count));
  d.resample_floor = r.floor_pattern_count > 0;
  d.floor_pattern = pat;
  d.hue_arm = rng.uniform(-r.hue_shift, r.hue_shift);
  d.hue_box = rng.uniform(-r.hue_shift, r.hue_shift);
  d.shadow_flip = rng.uniform01() < r.shadow_toggle_prob;
  d.shadow_offset_jitter = {rng.uniform(-r.shadow_offset, r.shadow_offset),
                            rng.uniform(-r.shadow_offset, r.shadow_offset)};
  d.camera_offset = {rng.uniform(-r.camera_offset, r.camera_offset),
                     rng.uniform(-r.camera_offset, r.camera_offset)};
  d.camera_rotation = rng.uniform(-r.camera_rotation, r.camera_rotation);
  d.camera_scale_mul = 1.0 + rng.uniform(-r.camera_scale_jitter, r.camera_scale_jitter);
  return d;
}

SceneSpec apply_adaptations(const SceneSpec& scene, const AdaptationDraw& d) {
  SceneSpec s = scene;
  if (d.resample_floor) s.floor_pattern = d.floor_pattern;
  s.palette.arm = hue_shift(s.palette.arm, d.hue_arm);
  s.palette.box = hue_shift(s.palette.box, d.hue_box);
  if (d.shadow_flip) s.shadow.enabled = !s.shadow.enabled;
  s.shadow.offset = s.shadow.offset + d.shadow_offset_jitter;
  s.camera.center = s.camera.center + d.camera_offset;
  s.camera.rotation += d.camera_rotation;
  s.camera.scale *= d.camera_scale_mul;
  return s;
}

SceneSpec physical_adaptations(const SceneSpec& scene, const AdaptationRanges& ranges,
                               Rng& rng) {
  return apply_adaptations(scene, sample_adaptations(ranges, rng));
}

}  // namespace pgrl::render
