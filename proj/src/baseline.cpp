#include "pgrl/baseline.hpp"

#include <cmath>

namespace pgrl::harness {

Vec2 baseline_policy(const env::GraspEnv& env) {
  const Vec2 ee = env.ee_position();
  const Vec2 box = env.state().box_position;
  const double step = env.config().v_max * env.config().dt;
  auto axis = [&](double delta) {
    if (std::fabs(delta) > step) return delta > 0 ? 1.0 : -1.0;
    return delta / step;
  };
  return {axis(box.x - ee.x), axis(box.y - ee.y)};
}

}  // namespace pgrl::harness
