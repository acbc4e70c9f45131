#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pgrl/scene.hpp"

using namespace pgrl::render;
using pgrl::Rng;
using pgrl::Vec2;
using pgrl::deg2rad;
namespace arm = pgrl::arm;

namespace {

// Everything far outside the 0.64 m view around (0, 0.40).
SceneSpec empty_scene() {
  SceneSpec s;
  for (auto& p : s.arm_points) p = {5.0, 5.0};
  s.box_position = {5.0, 5.0};
  s.gripper_position = {-5.0, 5.0};
  s.shadow.enabled = false;
  return s;
}

SceneSpec basic_scene() {
  SceneSpec s = empty_scene();
  s.box_position = {0.10, 0.45};
  s.gripper_position = {-0.10, 0.30};
  s.arm_points = {{{0.0, 0.0}, {-0.05, 0.06}, {-0.09, 0.12}, {-0.12, 0.18},
                   {-0.13, 0.24}, {-0.13, 0.27}, {-0.12, 0.29}, {-0.10, 0.30}}};
  return s;
}

Vec2 mask_centroid_px(const Mask& m) {
  double sx = 0, sy = 0;
  long n = 0;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m.at(y, x)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
  return {sx / n, sy / n};
}

bool same_scene(const SceneSpec& a, const SceneSpec& b) {
  auto eq = [](double x, double y) { return x == y; };
  for (int i = 0; i < arm::kNumJoints + 1; ++i)
    if (!eq(a.arm_points[i].x, b.arm_points[i].x) || !eq(a.arm_points[i].y, b.arm_points[i].y))
      return false;
  return eq(a.box_position.x, b.box_position.x) && eq(a.box_position.y, b.box_position.y) &&
         eq(a.gripper_position.x, b.gripper_position.x) &&
         eq(a.gripper_position.y, b.gripper_position.y) && a.floor_pattern == b.floor_pattern &&
         a.palette.arm.r == b.palette.arm.r && a.palette.arm.g == b.palette.arm.g &&
         a.palette.box.r == b.palette.box.r && a.palette.box.b == b.palette.box.b &&
         a.shadow.enabled == b.shadow.enabled && eq(a.shadow.offset.x, b.shadow.offset.x) &&
         eq(a.shadow.offset.y, b.shadow.offset.y) &&
         eq(a.camera.center.x, b.camera.center.x) && eq(a.camera.center.y, b.camera.center.y) &&
         eq(a.camera.rotation, b.camera.rotation) && eq(a.camera.scale, b.camera.scale);
}

}  // namespace

TEST_CASE("empty scene renders a constant background") {
  SceneSpec s = empty_scene();
  Image img = render(s);
  const float* first = img.at(0, 0);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) CHECK(img.at(y, x)[c] == first[c]);
}

TEST_CASE("rendering is deterministic: equal specs, equal bytes") {
  SceneSpec s = basic_scene();
  s.floor_pattern = 1;
  s.shadow.enabled = true;
  Image a = render(s);
  Image b = render(s);
  REQUIRE(a.px.size() == b.px.size());
  for (std::size_t i = 0; i < a.px.size(); ++i) CHECK(a.px[i] == b.px[i]);
}

TEST_CASE("box blob area matches the analytic footprint") {
  SceneSpec s = empty_scene();
  s.box_position = s.camera.center;  // view center
  Image img = render(s);
  long area = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      if (img.at(y, x)[0] == s.palette.box.r && img.at(y, x)[1] == s.palette.box.g &&
          img.at(y, x)[2] == s.palette.box.b)
        ++area;
  const double expected = 0.05 * 0.05 * s.camera.scale * s.camera.scale;  // 25 px
  CHECK(area >= expected * 0.6);
  CHECK(area <= expected * 1.4);
}

TEST_CASE("masks: gripper occludes box, always disjoint") {
  SceneSpec s = empty_scene();
  s.box_position = {0.0, 0.40};
  s.gripper_position = {0.0, 0.40};  // fully over the box
  MaskPair mp = render_masks(s);
  CHECK(!mp.gripper.empty_mask());
  for (int y = 0; y < mp.box.h; ++y)
    for (int x = 0; x < mp.box.w; ++x) CHECK(!(mp.box.at(y, x) && mp.gripper.at(y, x)));
  // The gripper footprint covers the box in x, so only box pixels above and
  // below the gripper strip survive.
  long overlap_zone = 0;
  for (int y = 0; y < mp.box.h; ++y)
    for (int x = 0; x < mp.box.w; ++x)
      if (mp.box.at(y, x)) {
        Vec2 p = s.camera.px_to_world(x + 0.5, y + 0.5);
        CHECK(std::fabs(p.y - s.box_position.y) > s.gripper_depth / 2.0 * 0.99);
        ++overlap_zone;
      }
  CHECK(overlap_zone > 0);
}

TEST_CASE("mask centroid round-trips through the camera projection") {
  Rng rng(414);
  for (int it = 0; it < 50; ++it) {
    SceneSpec s = empty_scene();
    s.box_position = {rng.uniform(-0.2, 0.2), rng.uniform(0.25, 0.55)};
    MaskPair mp = render_masks(s);
    REQUIRE(!mp.box.empty_mask());
    Vec2 centroid = mask_centroid_px(mp.box);
    Vec2 projected = s.camera.world_to_px(s.box_position);
    CHECK(std::fabs(centroid.x - projected.x) <= 1.0);
    CHECK(std::fabs(centroid.y - projected.y) <= 1.0);
  }
}

TEST_CASE("1000 random in-view scenes: masks nonempty and disjoint") {
  Rng rng(1000);
  for (int it = 0; it < 1000; ++it) {
    SceneSpec s = basic_scene();
    s.box_position = {rng.uniform(-0.25, 0.25), rng.uniform(0.2, 0.6)};
    s.gripper_position = {rng.uniform(-0.25, 0.25), rng.uniform(0.2, 0.6)};
    s.floor_pattern = rng.uniform_int(0, 4);
    MaskPair mp = render_masks(s);
    CHECK(!mp.gripper.empty_mask());
    CHECK(!mp.box.empty_mask() == (mask_iou(mp.box, mp.box) == 1.0));  // box may be occluded
    long both = 0;
    for (std::size_t i = 0; i < mp.box.v.size(); ++i) both += mp.box.v[i] & mp.gripper.v[i];
    CHECK(both == 0);
    // When the footprints are far apart the box mask must be present too.
    double sep = (s.box_position - s.gripper_position).norm();
    if (sep > 0.1) CHECK(!mp.box.empty_mask());
  }
}

TEST_CASE("physical adaptations: zero ranges are the identity, draws deterministic") {
  SceneSpec s = basic_scene();
  AdaptationRanges zero;
  zero.floor_pattern_count = 0;
  zero.hue_shift = 0.0;
  zero.shadow_toggle_prob = 0.0;
  zero.shadow_offset = 0.0;
  zero.camera_offset = 0.0;
  zero.camera_rotation = 0.0;
  zero.camera_scale_jitter = 0.0;
  Rng rng(9);
  SceneSpec t = physical_adaptations(s, zero, rng);
  CHECK(same_scene(s, t));

  AdaptationRanges full;
  Rng r1(77), r2(77);
  SceneSpec a = physical_adaptations(s, full, r1);
  SceneSpec b = physical_adaptations(s, full, r2);
  CHECK(same_scene(a, b));
  CHECK(!same_scene(a, s));
}

TEST_CASE("camera perturbation shifts the mask centroid with the projection") {
  SceneSpec s = empty_scene();
  s.box_position = {0.08, 0.46};

  AdaptationDraw d;
  d.camera_rotation = deg2rad(3.0);  // max rotation
  d.camera_offset = {0.02, -0.01};
  d.camera_scale_mul = 1.04;
  SceneSpec t = apply_adaptations(s, d);

  MaskPair mp = render_masks(t);
  REQUIRE(!mp.box.empty_mask());
  Vec2 centroid = mask_centroid_px(mp.box);
  Vec2 projected = t.camera.world_to_px(t.box_position);
  CHECK(std::fabs(centroid.x - projected.x) <= 1.0);
  CHECK(std::fabs(centroid.y - projected.y) <= 1.0);
}

TEST_CASE("hue shift keeps colors valid and zero shift is exact") {
  Rgb c{0.85f, 0.15f, 0.10f};
  Rgb same = hue_shift(c, 0.0);
  CHECK(same.r == c.r);
  CHECK(same.g == c.g);
  CHECK(same.b == c.b);
  for (double sft : {-0.05, -0.01, 0.02, 0.05}) {
    Rgb o = hue_shift(c, sft);
    for (float v : {o.r, o.g, o.b}) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}
