#include "pgrl/env.hpp"

#include <cmath>

namespace pgrl::env {

void EnvConfig::validate(const arm::ArmModel& arm) const {
  require(horizon > 0, "env: horizon must be positive");
  require(dt > 0.0, "env: dt must be positive");
  require(v_max > 0.0, "env: v_max must be positive");
  require(spawn.x_min < spawn.x_max && spawn.y_min < spawn.y_max, "env: empty spawn region");
  require(gripper_opening > box_width, "env: gripper cannot open past the box width");
  require(delta_scale > 0.0, "env: delta_scale must be positive");
  // Every spawn corner (and the inflated workspace) must be reachable.
  const SpawnRegion ws = workspace();
  const Vec2 corners[4] = {{ws.x_min, ws.y_min}, {ws.x_min, ws.y_max},
                           {ws.x_max, ws.y_min}, {ws.x_max, ws.y_max}};
  for (const Vec2& c : corners)
    require((c - arm.base_position).norm() < arm.reach(),
            "env: spawn region extends beyond the arm's reach");
  require(state_noise_fraction >= 0.0 && state_noise_fraction < 1.0,
          "env: state noise fraction out of range");
}

GraspOutcome terminal_grasp(const EnvConfig& cfg, bool collided, Vec2 ee, Vec2 box) {
  if (collided) return GraspOutcome::failure;
  const double ex = std::fabs(ee.x - box.x);
  const double ey = std::fabs(ee.y - box.y);
  if (ex <= cfg.grasp_tol_x() && ey <= cfg.grasp_tol_y()) return GraspOutcome::success;
  if (ex > cfg.grasp_tol_x() && ex <= cfg.finger_hit_x()) return GraspOutcome::finger_collision;
  return GraspOutcome::failure;
}

NumericState scale_numeric_state(const EnvConfig& cfg, const arm::ArmModel& arm, Vec2 delta,
                                 const arm::JointConfig& q) {
  NumericState s{};
  s[0] = clamp(delta.x / cfg.delta_scale, -1.0, 1.0);
  s[1] = clamp(delta.y / cfg.delta_scale, -1.0, 1.0);
  for (int j = 0; j < arm::kNumJoints; ++j) {
    const arm::JointLimits lim = arm.safety_limits(j);
    const double half = std::max(std::fabs(lim.lo), std::fabs(lim.hi));
    s[2 + j] = clamp(q.q[j] / half, -1.0, 1.0);
  }
  return s;
}

void unscale_numeric_state(const EnvConfig& cfg, const arm::ArmModel& arm,
                           const NumericState& s, Vec2* delta, arm::JointConfig* q) {
  if (delta) *delta = {s[0] * cfg.delta_scale, s[1] * cfg.delta_scale};
  if (q)
    for (int j = 0; j < arm::kNumJoints; ++j) {
      const arm::JointLimits lim = arm.safety_limits(j);
      q->q[j] = s[2 + j] * std::max(std::fabs(lim.lo), std::fabs(lim.hi));
    }
}

NumericState randomize_numeric_state(const NumericState& s, double fraction, bool additive,
                                     Rng& rng) {
  NumericState out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double u = rng.uniform(-fraction, fraction);
    out[i] = clamp(additive ? s[i] + u : s[i] * (1.0 + u), -1.0, 1.0);
  }
  return out;
}

GraspEnv::GraspEnv(EnvConfig cfg, arm::ArmModel arm_model, arm::ControlGains gains)
    : cfg_(cfg), arm_(arm_model), gains_(gains) {
  arm_.validate();
  cfg_.validate(arm_);
  home_ = arm::home_config(arm_, cfg_.home_ee);
  orientation_target_ = arm::forward_kinematics(arm_, home_).orientation;
  state_ = begin_episode({0.5 * (cfg_.spawn.x_min + cfg_.spawn.x_max),
                          0.5 * (cfg_.spawn.y_min + cfg_.spawn.y_max)});
}

EnvState GraspEnv::begin_episode(Vec2 box) {
  EnvState s;
  s.q = home_;
  s.box_position = box;
  s.collided = false;
  s.collision_kind = CollisionKind::none;
  s.t = 0;
  const Vec2 ee = arm::forward_kinematics(arm_, home_).position;
  s.prev_delta = {std::fabs(ee.x - box.x), std::fabs(ee.y - box.y)};
  state_ = s;
  episode_return_ = 0.0;
  return state_;
}

EnvState GraspEnv::reset(Rng& rng) {
  const double bx = rng.uniform(cfg_.spawn.x_min, cfg_.spawn.x_max);
  const double by = rng.uniform(cfg_.spawn.y_min, cfg_.spawn.y_max);
  return begin_episode({bx, by});
}

EnvState GraspEnv::reset_with_box(Vec2 box_position) {
  require(cfg_.spawn.contains(box_position), "reset: box outside the spawn region");
  return begin_episode(box_position);
}

Vec2 GraspEnv::ee_position() const {
  return arm::forward_kinematics(arm_, state_.q).position;
}

Vec2 GraspEnv::delta() const {
  const Vec2 ee = ee_position();
  return {std::fabs(ee.x - state_.box_position.x), std::fabs(ee.y - state_.box_position.y)};
}

StepOutcome GraspEnv::step(Vec2 action) {
  require(state_.t < cfg_.horizon, "step: episode already finished");

  StepOutcome out;
  if (state_.collided) {
    // Zero reward, zero velocities for the remaining steps.
    ++state_.t;
    out.reward = 0.0;
    out.done = state_.t == cfg_.horizon;
    out.delta = state_.prev_delta;
    return out;
  }

  const Vec2 v{clamp(action.x, -1.0, 1.0) * cfg_.v_max, clamp(action.y, -1.0, 1.0) * cfg_.v_max};
  const arm::StepResult r =
      arm::step_task_velocity(arm_, state_.q, v, orientation_target_, cfg_.dt, gains_);

  if (!r.ok) {
    state_.collided = true;
    state_.collision_kind = CollisionKind::joint_safety;
    out.collision = CollisionKind::joint_safety;
    out.reward = cfg_.collision_penalty;
    out.delta = state_.prev_delta;
  } else {
    state_.q = r.q;
    const Vec2 ee = ee_position();
    if (!cfg_.workspace().contains(ee)) {
      state_.collided = true;
      state_.collision_kind = CollisionKind::workspace_exit;
      out.collision = CollisionKind::workspace_exit;
      out.reward = cfg_.collision_penalty;
      out.delta = {std::fabs(ee.x - state_.box_position.x),
                   std::fabs(ee.y - state_.box_position.y)};
      state_.prev_delta = out.delta;
    } else {
      const Vec2 d{std::fabs(ee.x - state_.box_position.x),
                   std::fabs(ee.y - state_.box_position.y)};
      // Per-axis normalized progress; each axis contributes at most +-1 so a
      // single step's shaping reward stays in [-2, 2].
      const double denom = cfg_.v_max * cfg_.dt;
      const double ddx = clamp((state_.prev_delta.x - d.x) / denom, -1.0, 1.0);
      const double ddy = clamp((state_.prev_delta.y - d.y) / denom, -1.0, 1.0);
      out.reward = cfg_.w_x * ddx + cfg_.w_y * ddy;
      out.delta = d;
      state_.prev_delta = d;
    }
  }

  ++state_.t;
  out.done = state_.t == cfg_.horizon;
  episode_return_ += out.reward;
  return out;
}

NumericState GraspEnv::numeric_state() const {
  const Vec2 ee = ee_position();
  const Vec2 delta{state_.box_position.x - ee.x, state_.box_position.y - ee.y};
  return scale_numeric_state(cfg_, arm_, delta, state_.q);
}

GraspOutcome GraspEnv::terminal_grasp() const {
  return env::terminal_grasp(cfg_, state_.collided, ee_position(), state_.box_position);
}

std::array<double, 15> GraspEnv::serialize() const {
  std::array<double, 15> b{};
  for (int j = 0; j < arm::kNumJoints; ++j) b[j] = state_.q.q[j];
  b[7] = state_.box_position.x;
  b[8] = state_.box_position.y;
  b[9] = static_cast<double>(state_.t);
  b[10] = state_.collided ? 1.0 : 0.0;
  b[11] = static_cast<double>(static_cast<int>(state_.collision_kind));
  b[12] = state_.prev_delta.x;
  b[13] = state_.prev_delta.y;
  b[14] = episode_return_;
  return b;
}

void GraspEnv::deserialize(const std::array<double, 15>& b) {
  for (int j = 0; j < arm::kNumJoints; ++j) state_.q.q[j] = b[j];
  state_.box_position = {b[7], b[8]};
  state_.t = static_cast<int>(b[9]);
  state_.collided = b[10] != 0.0;
  state_.collision_kind = static_cast<CollisionKind>(static_cast<int>(b[11]));
  state_.prev_delta = {b[12], b[13]};
  episode_return_ = b[14];
}

}  // namespace pgrl::env
