#pragma once

#include <array>

#include "pgrl/common.hpp"

namespace pgrl::arm {

inline constexpr int kNumJoints = 7;

struct JointConfig {
  std::array<double, kNumJoints> q{};
};

struct JointLimits {
  double lo = 0.0;
  double hi = 0.0;
};

struct ArmModel {
  std::array<double, kNumJoints> link_lengths{};
  std::array<JointLimits, kNumJoints> physical_limits{};
  double safety_margin = deg2rad(10.0);
  Vec2 base_position{0.0, 0.0};

  // Seven equal links summing to 1.2 m, +-165 deg physical limits,
  // 10 deg safety margin.
  static ArmModel standard();

  JointLimits safety_limits(int joint) const;
  double reach() const;
  bool within_safety_limits(const JointConfig& q, int* violating_joint = nullptr) const;
  void validate() const;
};

struct ControlGains {
  double k_pos = 0.5;  // holds uncontrolled coordinates; unused in the planar reduction
  double k_rot = 1.5;
};

struct Pose {
  Vec2 position;
  double orientation = 0.0;
};

Pose forward_kinematics(const ArmModel& arm, const JointConfig& q);

// World positions of every joint plus the end effector (kNumJoints + 1 points).
std::array<Vec2, kNumJoints + 1> link_endpoints(const ArmModel& arm, const JointConfig& q);

// Rows: d(x, y, orientation)/dq. Columns: joints.
using Jacobian = std::array<std::array<double, kNumJoints>, 3>;
Jacobian jacobian(const ArmModel& arm, const JointConfig& q);

struct StepResult {
  bool ok = false;
  JointConfig q;            // valid when ok
  int violating_joint = -1; // valid when !ok
};

// Integrates one control cycle of the damped-least-squares velocity controller.
// The commanded twist is [v_cmd.x, v_cmd.y, k_rot * (orientation_target - orientation)].
// Returns the new config, or the violated joint when it would leave the safety limits.
StepResult step_task_velocity(const ArmModel& arm, const JointConfig& q, Vec2 v_cmd,
                              double orientation_target, double dt, const ControlGains& gains,
                              double damping = 1e-4);

// Deterministic elbow-bent configuration placing the end effector at ee_target:
// joints 2..7 share one curl angle found by bisection, joint 1 aims the chain.
JointConfig home_config(const ArmModel& arm, Vec2 ee_target);

}  // namespace pgrl::arm
