#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "pgrl/env.hpp"

using namespace pgrl;
using namespace pgrl::env;

namespace {

GraspEnv make_env() { return GraspEnv(EnvConfig{}, arm::ArmModel::standard()); }

}  // namespace

TEST_CASE("reset is deterministic and spawns inside the region") {
  GraspEnv e = make_env();
  Rng a(42), b(42);
  EnvState s1 = e.reset(a);
  GraspEnv e2 = make_env();
  EnvState s2 = e2.reset(b);
  CHECK(s1.box_position.x == s2.box_position.x);
  CHECK(s1.box_position.y == s2.box_position.y);
  CHECK(s1.t == 0);
  CHECK(!s1.collided);

  const EnvConfig& cfg = e.config();
  Rng rng(7);
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (int i = 0; i < 10000; ++i) {
    EnvState s = e.reset(rng);
    min_x = std::min(min_x, s.box_position.x);
    max_x = std::max(max_x, s.box_position.x);
    min_y = std::min(min_y, s.box_position.y);
    max_y = std::max(max_y, s.box_position.y);
    CHECK(cfg.spawn.contains(s.box_position));
  }
  // Empirical support nearly fills the region.
  CHECK(min_x < cfg.spawn.x_min + 0.01);
  CHECK(max_x > cfg.spawn.x_max - 0.01);
  CHECK(min_y < cfg.spawn.y_min + 0.005);
  CHECK(max_y > cfg.spawn.y_max - 0.005);
}

TEST_CASE("appendix evaluation box is a legal spawn") {
  GraspEnv e = make_env();
  EnvState s = e.reset_with_box({-0.26, 0.54});
  CHECK(s.box_position.x == -0.26);
  CHECK(s.box_position.y == 0.54);
}

TEST_CASE("zero action earns zero reward") {
  GraspEnv e = make_env();
  e.reset_with_box({0.1, 0.5});
  StepOutcome o = e.step({0.0, 0.0});
  CHECK(o.reward == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(!o.done);
  CHECK(o.collision == CollisionKind::none);
}

TEST_CASE("closing both axes at full speed earns ~2, matching the FK oracle") {
  GraspEnv e = make_env();
  e.reset_with_box({0.2, 0.55});  // up and to the right of the home EE
  Vec2 before = e.delta();
  StepOutcome o = e.step({1.0, 1.0});
  Vec2 after = e.delta();
  CHECK(std::fabs(o.reward - 2.0) <= 0.05);
  // Oracle: recompute from FK deltas before/after.
  const double denom = e.config().v_max * e.config().dt;
  double oracle = clamp((before.x - after.x) / denom, -1.0, 1.0) +
                  clamp((before.y - after.y) / denom, -1.0, 1.0);
  CHECK(o.reward == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("collision penalty fires once, then zero rewards with a frozen arm") {
  GraspEnv e = make_env();
  e.reset_with_box({0.0, 0.5});
  // Drive straight down out of the workspace.
  double total = 0.0;
  int penalties = 0;
  bool collided = false;
  Vec2 frozen_ee;
  for (int t = 0; t < e.config().horizon; ++t) {
    StepOutcome o = e.step({0.0, -1.0});
    total += o.reward;
    if (o.collision != CollisionKind::none) {
      ++penalties;
      collided = true;
      frozen_ee = e.ee_position();
      CHECK(o.reward == e.config().collision_penalty);
    } else if (collided) {
      CHECK(o.reward == 0.0);
      Vec2 ee = e.ee_position();
      CHECK(std::fabs(ee.x - frozen_ee.x) <= 1e-9);
      CHECK(std::fabs(ee.y - frozen_ee.y) <= 1e-9);
    }
    if (t + 1 == e.config().horizon) CHECK(o.done);
  }
  CHECK(collided);
  CHECK(penalties == 1);
  CHECK(e.state().collision_kind == CollisionKind::workspace_exit);
  CHECK(e.state().t == e.config().horizon);
  CHECK(e.terminal_grasp() == GraspOutcome::failure);
}

TEST_CASE("episodes are fixed length and returns match a re-summation oracle") {
  GraspEnv e = make_env();
  Rng rng(11);
  for (int ep = 0; ep < 20; ++ep) {
    e.reset(rng);
    std::vector<double> deltas_x, deltas_y, rewards;
    deltas_x.push_back(e.delta().x);
    deltas_y.push_back(e.delta().y);
    bool saw_done = false;
    while (!saw_done) {
      Vec2 a{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      StepOutcome o = e.step(a);
      rewards.push_back(o.reward);
      deltas_x.push_back(o.delta.x);
      deltas_y.push_back(o.delta.y);
      saw_done = o.done;
      CHECK(std::fabs(o.reward) <= std::fabs(e.config().collision_penalty));
      if (o.collision == CollisionKind::none && !e.state().collided)
        CHECK(std::fabs(o.reward) <= 2.0);
    }
    CHECK(e.state().t == e.config().horizon);

    // Brute-force oracle: recompute the shaped return from logged deltas up
    // to the collision (if any), and add the single penalty.
    const double denom = e.config().v_max * e.config().dt;
    double resum = 0.0;
    bool hit = false;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      if (!hit && rewards[i] == e.config().collision_penalty) {
        resum += e.config().collision_penalty;
        hit = true;
      } else if (!hit) {
        resum += clamp((deltas_x[i] - deltas_x[i + 1]) / denom, -1.0, 1.0) +
                 clamp((deltas_y[i] - deltas_y[i + 1]) / denom, -1.0, 1.0);
      }
    }
    CHECK(e.episode_return() == doctest::Approx(resum).epsilon(1e-9));
  }
}

TEST_CASE("terminal grasp thresholds from the gripper and box geometry") {
  EnvConfig cfg;
  CHECK(cfg.grasp_tol_x() == doctest::Approx(0.0175).epsilon(1e-12));
  CHECK(cfg.finger_hit_x() == doctest::Approx(0.0425).epsilon(1e-12));
  CHECK(cfg.grasp_tol_y() == doctest::Approx(0.025).epsilon(1e-12));

  Vec2 box{0.0, 0.5};
  CHECK(terminal_grasp(cfg, false, box, box) == GraspOutcome::success);
  CHECK(terminal_grasp(cfg, false, {0.0175, 0.5}, box) == GraspOutcome::success);
  CHECK(terminal_grasp(cfg, false, {0.0180, 0.5}, box) == GraspOutcome::finger_collision);
  CHECK(terminal_grasp(cfg, false, {0.0425, 0.5}, box) == GraspOutcome::finger_collision);
  CHECK(terminal_grasp(cfg, false, {0.0430, 0.5}, box) == GraspOutcome::failure);
  CHECK(terminal_grasp(cfg, false, {0.0, 0.5251}, box) == GraspOutcome::failure);
  CHECK(terminal_grasp(cfg, true, box, box) == GraspOutcome::failure);
}

TEST_CASE("numeric state: zero at perfect alignment, bounded, affine round-trip") {
  GraspEnv e = make_env();
  const EnvConfig& cfg = e.config();
  const arm::ArmModel& m = e.arm_model();

  NumericState z = scale_numeric_state(cfg, m, {0.0, 0.0}, arm::JointConfig{});
  for (double v : z) CHECK(v == 0.0);

  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    Vec2 d{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    arm::JointConfig q;
    for (int j = 0; j < arm::kNumJoints; ++j)
      q.q[j] = rng.uniform(-2.0 * kPi, 2.0 * kPi);  // deliberately out of range too
    NumericState s = scale_numeric_state(cfg, m, d, q);
    for (double v : s) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }

  // Round trip for in-range values.
  for (int i = 0; i < 1000; ++i) {
    Vec2 d{rng.uniform(-cfg.delta_scale, cfg.delta_scale),
           rng.uniform(-cfg.delta_scale, cfg.delta_scale)};
    arm::JointConfig q;
    for (int j = 0; j < arm::kNumJoints; ++j) {
      arm::JointLimits lim = m.safety_limits(j);
      q.q[j] = rng.uniform(lim.lo, lim.hi);
    }
    NumericState s = scale_numeric_state(cfg, m, d, q);
    Vec2 d2;
    arm::JointConfig q2;
    unscale_numeric_state(cfg, m, s, &d2, &q2);
    CHECK(std::fabs(d2.x - d.x) <= 1e-12);
    CHECK(std::fabs(d2.y - d.y) <= 1e-12);
    for (int j = 0; j < arm::kNumJoints; ++j) CHECK(std::fabs(q2.q[j] - q.q[j]) <= 1e-12);
  }
}

TEST_CASE("state randomization: multiplicative 5% uniform noise") {
  Rng rng(99);
  NumericState s{};
  s.fill(0.5);

  NumericState id = randomize_numeric_state(s, 0.0, false, rng);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(id[i] == s[i]);

  NumericState zero{};
  NumericState zn = randomize_numeric_state(zero, 0.05, false, rng);
  for (double v : zn) CHECK(v == 0.0);

  double sum = 0.0, lo = 1e9, hi = -1e9;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    NumericState r = randomize_numeric_state(s, 0.05, false, rng);
    sum += r[0];
    lo = std::min(lo, r[0]);
    hi = std::max(hi, r[0]);
  }
  CHECK(lo >= 0.475);
  CHECK(hi <= 0.525);
  CHECK(std::fabs(sum / n - 0.5) <= 0.001);
}

TEST_CASE("contract violations: stepping a finished episode, unreachable spawn region") {
  GraspEnv e = make_env();
  e.reset_with_box({0.0, 0.5});
  for (int t = 0; t < e.config().horizon; ++t) e.step({0.0, 0.0});
  CHECK_THROWS(e.step({0.0, 0.0}));

  // Spawn region beyond the arm's reach fails at construction, not at reset.
  EnvConfig cfg;
  cfg.spawn = {1.0, 2.0, 1.0, 2.0};
  CHECK_THROWS(GraspEnv(cfg, arm::ArmModel::standard()));
}

TEST_CASE("env state serialization round-trip") {
  GraspEnv e = make_env();
  Rng rng(3);
  e.reset(rng);
  for (int i = 0; i < 37; ++i) e.step({rng.uniform(-1, 1), rng.uniform(-1, 1)});
  auto blob = e.serialize();

  GraspEnv e2 = make_env();
  e2.deserialize(blob);
  StepOutcome a = e.step({0.3, -0.2});
  StepOutcome b = e2.step({0.3, -0.2});
  CHECK(a.reward == b.reward);
  CHECK(e.state().t == e2.state().t);
  CHECK(e.ee_position().x == e2.ee_position().x);
}
