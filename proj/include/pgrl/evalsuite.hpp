#pragma once

#include "pgrl/config.hpp"

namespace pgrl::harness {

// Fixed list of evaluation box positions shared by every strategy and
// checkpoint. Box #4 (1-based) is pinned to (-0.26, 0.54).
struct EvalSuite {
  std::vector<Vec2> boxes;

  static EvalSuite generate(const env::EnvConfig& cfg, int n, std::uint64_t seed);
  void save_csv(const std::string& path) const;
  static EvalSuite load_csv(const std::string& path);
  std::uint64_t content_hash() const;
};

enum class EvalOutcome { success, finger_collision, other_collision, miss };
const char* outcome_name(EvalOutcome o);

struct TrajectoryRow {
  int episode = 0;
  int t = 0;
  double ee_x = 0, ee_y = 0;
  double action_x = 0, action_y = 0;
  double reward = 0;
  double delta_x = 0, delta_y = 0;
};

struct EvalReport {
  std::vector<EvalOutcome> outcomes;
  std::vector<double> episode_returns;
  double success_rate = 0.0;
  std::uint64_t suite_hash = 0;
  std::vector<TrajectoryRow> trajectories;  // filled when requested

  void write_outcomes_csv(const std::string& path) const;
  void write_trajectories_csv(const std::string& path) const;
};

// Runs one deterministic episode per box (policy mean action, no sampling).
// Under randomized evaluation, vision observations pass through a per-episode
// physical-adaptation draw plus per-step image noise.
EvalReport evaluate_agent(ppo::AgentBundle& agent, const EvalSuite& suite,
                          const ExperimentConfig& cfg, bool randomized, std::uint64_t eval_seed,
                          bool record_trajectories = false);

EvalReport evaluate_baseline(const EvalSuite& suite, const ExperimentConfig& cfg,
                             bool record_trajectories = false);

}  // namespace pgrl::harness
