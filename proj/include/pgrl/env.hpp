#pragma once

#include <array>

#include "pgrl/arm.hpp"
#include "pgrl/rng.hpp"

namespace pgrl::env {

struct SpawnRegion {
  double x_min = -0.30, x_max = 0.30;
  double y_min = 0.40, y_max = 0.70;

  bool contains(Vec2 p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  SpawnRegion inflated(double m) const { return {x_min - m, x_max + m, y_min - m, y_max + m}; }
};

struct EnvConfig {
  int horizon = 400;
  double dt = 0.05;  // 20 Hz control cycle
  double v_max = 0.035;
  double w_x = 1.0;
  double w_y = 1.0;
  double collision_penalty = -100.0;
  double box_width = 0.05;   // grasp axis (x)
  double box_height = 0.10;
  double box_depth = 0.05;   // perpendicular axis (y, top-down)
  double gripper_opening = 0.085;
  SpawnRegion spawn;
  double workspace_margin = 0.10;  // spawn region inflated by this is the legal EE area
  double state_noise_fraction = 0.05;
  bool additive_state_noise = true;  // false: multiplicative (relative) noise
  double delta_scale = 0.40;          // workspace half-extent used to scale dx, dy
  Vec2 home_ee{0.0, 0.35};

  SpawnRegion workspace() const { return spawn.inflated(workspace_margin); }
  double grasp_tol_x() const { return (gripper_opening - box_width) / 2.0; }
  double finger_hit_x() const { return gripper_opening / 2.0; }
  double grasp_tol_y() const { return box_depth / 2.0; }
  void validate(const arm::ArmModel& arm) const;
};

enum class CollisionKind { none, joint_safety, workspace_exit };

struct EnvState {
  arm::JointConfig q;
  Vec2 box_position;
  bool collided = false;
  CollisionKind collision_kind = CollisionKind::none;
  int t = 0;
  Vec2 prev_delta;  // |EE - box| per axis at the previous step
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
  CollisionKind collision = CollisionKind::none;  // collision raised by *this* step
  Vec2 delta;                                     // |EE - box| per axis after the step
};

enum class GraspOutcome { success, finger_collision, failure };

using NumericState = std::array<double, 9>;  // [dx, dy, q1..q7], scaled to [-1, 1]

// Scripted terminal grasp: pure geometry from the paper's gripper opening and
// box width. Collided episodes can never succeed.
GraspOutcome terminal_grasp(const EnvConfig& cfg, bool collided, Vec2 ee, Vec2 box);

NumericState scale_numeric_state(const EnvConfig& cfg, const arm::ArmModel& arm, Vec2 delta,
                                 const arm::JointConfig& q);
// Inverse of the affine scaling, valid for in-range states.
void unscale_numeric_state(const EnvConfig& cfg, const arm::ArmModel& arm,
                           const NumericState& s, Vec2* delta, arm::JointConfig* q);

// Per-component noise: multiplicative (1 + u) by default, u ~ U(-f, f);
// additive u as the documented alternative. Result re-clamped to [-1, 1].
NumericState randomize_numeric_state(const NumericState& s, double fraction, bool additive,
                                     Rng& rng);

// The grasping MDP. Episodes have fixed length: collisions freeze the arm
// and zero the reward but do not terminate early.
class GraspEnv {
 public:
  GraspEnv(EnvConfig cfg, arm::ArmModel arm_model, arm::ControlGains gains = {});

  const EnvConfig& config() const { return cfg_; }
  const arm::ArmModel& arm_model() const { return arm_; }
  const EnvState& state() const { return state_; }
  double orientation_target() const { return orientation_target_; }
  const arm::JointConfig& home() const { return home_; }

  EnvState reset(Rng& rng);
  EnvState reset_with_box(Vec2 box_position);
  StepOutcome step(Vec2 action);  // components clamped to [-1, 1]

  Vec2 ee_position() const;
  Vec2 delta() const;  // |EE - box| per axis
  NumericState numeric_state() const;
  GraspOutcome terminal_grasp() const;
  double episode_return() const { return episode_return_; }

  // Full-state serialization for resumable training checkpoints.
  std::array<double, 15> serialize() const;
  void deserialize(const std::array<double, 15>& blob);

 private:
  EnvState begin_episode(Vec2 box);

  EnvConfig cfg_;
  arm::ArmModel arm_;
  arm::ControlGains gains_;
  arm::JointConfig home_;
  double orientation_target_ = 0.0;
  EnvState state_;
  double episode_return_ = 0.0;
};

}  // namespace pgrl::env
