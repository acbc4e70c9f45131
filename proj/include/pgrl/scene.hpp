#pragma once

#include <array>

#include "pgrl/env.hpp"
#include "pgrl/image.hpp"
#include "pgrl/rng.hpp"

namespace pgrl::render {

// Top-down orthographic camera; pixel row 0 is the top of the view (+y world
// points up the image).
struct Camera {
  Vec2 center{0.0, 0.40};
  double rotation = 0.0;  // rad
  double scale = 100.0;   // px per meter
  int h = 64;
  int w = 64;

  // Continuous pixel coordinates; integer pixel (x, y) has center (x+.5, y+.5).
  Vec2 world_to_px(Vec2 p) const {
    const Vec2 d = p - center;
    const double c = std::cos(-rotation), s = std::sin(-rotation);
    const double rx = c * d.x - s * d.y;
    const double ry = s * d.x + c * d.y;
    return {w / 2.0 + rx * scale, h / 2.0 - ry * scale};
  }

  Vec2 px_to_world(double u, double v) const {
    const double rx = (u - w / 2.0) / scale;
    const double ry = (h / 2.0 - v) / scale;
    const double c = std::cos(rotation), s = std::sin(rotation);
    return {center.x + c * rx - s * ry, center.y + s * rx + c * ry};
  }
};

struct Rgb {
  float r = 0, g = 0, b = 0;
};

struct Palette {
  Rgb floor{0.82f, 0.80f, 0.78f};
  Rgb arm{0.35f, 0.45f, 0.75f};
  Rgb box{0.85f, 0.15f, 0.10f};       // unique: defines the box mask
  Rgb gripper{0.10f, 0.75f, 0.20f};   // unique: defines the gripper mask
};

struct Shadow {
  bool enabled = true;
  Vec2 offset{0.012, -0.012};
  double darken = 0.55;
};

// Full description of one rendered frame. Rendering is a pure function of
// this struct: equal specs produce equal bytes.
struct SceneSpec {
  std::array<Vec2, arm::kNumJoints + 1> arm_points{};
  double arm_width = 0.035;
  Vec2 box_position;
  double box_size = 0.05;  // square top-down footprint
  Vec2 gripper_position;
  double gripper_width = 0.085;
  double gripper_depth = 0.03;
  int floor_pattern = 0;  // 0 plain, 1 checker, 2 stripes, 3 dots
  Palette palette;
  Shadow shadow;
  Camera camera;
};

struct MaskPair {
  Mask box;
  Mask gripper;
};

SceneSpec make_scene(const env::GraspEnv& env);
SceneSpec make_scene(const arm::ArmModel& arm, const arm::JointConfig& q, Vec2 box,
                     double box_width, double gripper_opening);

Image render(const SceneSpec& scene);
// Ground-truth masks from geometry (gripper occludes box), not from pixels.
MaskPair render_masks(const SceneSpec& scene);

// Physical-adaptation randomization: floor appearance, per-object hue shift,
// shadow toggle/offset, camera pose and scale perturbations. Zero ranges make
// this the identity; the number of rng draws does not depend on the ranges.
struct AdaptationRanges {
  int floor_pattern_count = 4;  // 0 keeps the current pattern
  double hue_shift = 0.05;
  double shadow_toggle_prob = 0.5;
  double shadow_offset = 0.02;
  double camera_offset = 0.03;
  double camera_rotation = deg2rad(3.0);
  double camera_scale_jitter = 0.05;
};

struct AdaptationDraw {
  bool resample_floor = false;
  int floor_pattern = 0;
  double hue_arm = 0.0;
  double hue_box = 0.0;
  bool shadow_flip = false;
  Vec2 shadow_offset_jitter;
  Vec2 camera_offset;
  double camera_rotation = 0.0;
  double camera_scale_mul = 1.0;
};

AdaptationDraw sample_adaptations(const AdaptationRanges& ranges, Rng& rng);
SceneSpec apply_adaptations(const SceneSpec& scene, const AdaptationDraw& draw);
SceneSpec physical_adaptations(const SceneSpec& scene, const AdaptationRanges& ranges, Rng& rng);

Rgb hue_shift(const Rgb& c, double shift);

}  // namespace pgrl::render
