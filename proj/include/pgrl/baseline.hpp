#pragma once

#include "pgrl/env.hpp"

namespace pgrl::harness {

// Per-axis time-optimal policy with full state knowledge: full speed toward
// the box while the remaining error exceeds one step, then the exact landing
// command. With only velocity limits this is time optimal per axis.
Vec2 baseline_policy(const env::GraspEnv& env);

}  // namespace pgrl::harness
