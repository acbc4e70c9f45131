#include "pgrl/arm.hpp"

#include <cmath>

namespace pgrl::arm {

ArmModel ArmModel::standard() {
  ArmModel m;
  m.link_lengths.fill(1.2 / kNumJoints);
  for (auto& lim : m.physical_limits) lim = {-deg2rad(165.0), deg2rad(165.0)};
  m.safety_margin = deg2rad(10.0);
  m.base_position = {0.0, 0.0};
  return m;
}

JointLimits ArmModel::safety_limits(int joint) const {
  const auto& p = physical_limits[joint];
  return {p.lo + safety_margin, p.hi - safety_margin};
}

double ArmModel::reach() const {
  double r = 0.0;
  for (double l : link_lengths) r += l;
  return r;
}

bool ArmModel::within_safety_limits(const JointConfig& q, int* violating_joint) const {
  for (int j = 0; j < kNumJoints; ++j) {
    JointLimits lim = safety_limits(j);
    if (q.q[j] < lim.lo || q.q[j] > lim.hi) {
      if (violating_joint) *violating_joint = j;
      return false;
    }
  }
  return true;
}

void ArmModel::validate() const {
  for (double l : link_lengths) require(l > 0.0, "arm: link lengths must be positive");
  require(safety_margin >= 0.0, "arm: safety margin must be non-negative");
  for (int j = 0; j < kNumJoints; ++j) {
    const auto& p = physical_limits[j];
    require(p.lo < p.hi, "arm: physical limits inverted");
    JointLimits s = safety_limits(j);
    require(s.lo < s.hi, "arm: safety margin leaves no admissible range");
  }
}

Pose forward_kinematics(const ArmModel& arm, const JointConfig& q) {
  double x = arm.base_position.x;
  double y = arm.base_position.y;
  double theta = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    theta += q.q[j];
    x += arm.link_lengths[j] * std::cos(theta);
    y += arm.link_lengths[j] * std::sin(theta);
  }
  return {{x, y}, theta};
}

std::array<Vec2, kNumJoints + 1> link_endpoints(const ArmModel& arm, const JointConfig& q) {
  std::array<Vec2, kNumJoints + 1> pts;
  pts[0] = arm.base_position;
  double theta = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    theta += q.q[j];
    pts[j + 1] = {pts[j].x + arm.link_lengths[j] * std::cos(theta),
                  pts[j].y + arm.link_lengths[j] * std::sin(theta)};
  }
  return pts;
}

Jacobian jacobian(const ArmModel& arm, const JointConfig& q) {
  // d pos / dq_j = sum over links i >= j of L_i * (-sin, cos)(cumulative angle i)
  std::array<double, kNumJoints> cum{};
  double theta = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    theta += q.q[j];
    cum[j] = theta;
  }
  Jacobian J{};
  for (int j = kNumJoints - 1; j >= 0; --j) {
    double sx = (j + 1 < kNumJoints) ? J[0][j + 1] : 0.0;
    double sy = (j + 1 < kNumJoints) ? J[1][j + 1] : 0.0;
    J[0][j] = sx - arm.link_lengths[j] * std::sin(cum[j]);
    J[1][j] = sy + arm.link_lengths[j] * std::cos(cum[j]);
    J[2][j] = 1.0;
  }
  return J;
}

namespace {

// Solves the symmetric positive definite 3x3 system A x = b in place.
void solve3(const double A[3][3], const double b[3], double x[3]) {
  double m[3][4] = {{A[0][0], A[0][1], A[0][2], b[0]},
                    {A[1][0], A[1][1], A[1][2], b[1]},
                    {A[2][0], A[2][1], A[2][2], b[2]}};
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
    for (int k = c; k < 4; ++k) std::swap(m[c][k], m[piv][k]);
    double d = m[c][c];
    for (int k = c; k < 4; ++k) m[c][k] /= d;
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      double f = m[r][c];
      for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
    }
  }
  x[0] = m[0][3];
  x[1] = m[1][3];
  x[2] = m[2][3];
}

}  // namespace

StepResult step_task_velocity(const ArmModel& arm, const JointConfig& q, Vec2 v_cmd,
                              double orientation_target, double dt, const ControlGains& gains,
                              double damping) {
  require(dt > 0.0, "step_task_velocity: dt must be positive");
  require(std::isfinite(v_cmd.x) && std::isfinite(v_cmd.y), "step_task_velocity: NaN velocity");
  for (double qi : q.q) require(std::isfinite(qi), "step_task_velocity: NaN joint angle");

  Pose pose = forward_kinematics(arm, q);
  double twist[3] = {v_cmd.x, v_cmd.y, gains.k_rot * (orientation_target - pose.orientation)};

  Jacobian J = jacobian(arm, q);

  // Damped least squares: qdot = J^T (J J^T + damping^2 I)^-1 twist.
  double A[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int j = 0; j < kNumJoints; ++j) s += J[r][j] * J[c][j];
      A[r][c] = s + (r == c ? damping * damping : 0.0);
    }
  double y[3];
  solve3(A, twist, y);

  StepResult out;
  out.q = q;
  for (int j = 0; j < kNumJoints; ++j) {
    double qdot = J[0][j] * y[0] + J[1][j] * y[1] + J[2][j] * y[2];
    out.q.q[j] += qdot * dt;
  }
  int bad = -1;
  if (!arm.within_safety_limits(out.q, &bad)) {
    out.ok = false;
    out.violating_joint = bad;
    return out;
  }
  out.ok = true;
  return out;
}

JointConfig home_config(const ArmModel& arm, Vec2 ee_target) {
  Vec2 rel = ee_target - arm.base_position;
  double dist = rel.norm();
  require(dist > 0.0 && dist < arm.reach(), "home_config: target outside reachable annulus");

  auto ee_distance = [&](double curl) {
    JointConfig q;
    for (int j = 1; j < kNumJoints; ++j) q.q[j] = curl;
    return (forward_kinematics(arm, q).position - arm.base_position).norm();
  };

  // EE distance decreases monotonically with the shared curl angle on [0, pi/4].
  double lo = 0.0, hi = kPi / 4.0;
  require(ee_distance(hi) <= dist, "home_config: target too close to the base");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (ee_distance(mid) > dist)
      lo = mid;
    else
      hi = mid;
  }
  double curl = 0.5 * (lo + hi);

  JointConfig q;
  for (int j = 1; j < kNumJoints; ++j) q.q[j] = curl;
  Pose p = forward_kinematics(arm, q);
  Vec2 d = p.position - arm.base_position;
  q.q[0] = std::atan2(rel.y, rel.x) - std::atan2(d.y, d.x);

  int bad = -1;
  require(arm.within_safety_limits(q, &bad), "home_config: outside safety limits");
  return q;
}

}  // namespace pgrl::arm
