#pragma once

#include <map>
#include <string>
#include <vector>

#include "pgrl/augment.hpp"
#include "pgrl/ppo.hpp"

namespace pgrl::harness {

// Single human-readable `key = value` file covering every constant of the
// experiment. Unknown keys are rejected; the effective (defaults + overrides)
// configuration is what gets hashed and copied into run directories.
struct ExperimentConfig {
  env::EnvConfig env;
  arm::ArmModel arm = arm::ArmModel::standard();
  render::Camera camera;
  render::AdaptationRanges adapt;
  aug::AugmentationSpec augspec;

  // AE / IGAE loss weights.
  repr::AELossWeights ae_weights;

  // Pretraining.
  int pretrain_samples = 5000;
  int pretrain_epochs = 40;
  double pretrain_lr = 0.001;
  int pretrain_batch = 32;
  double pretrain_val_fraction = 0.1;
  std::uint64_t pretrain_seed = 7;
  double dataset_joint_jitter = 0.15;

  // PPO shared values plus profile-scale numbers. Vision strategies train at
  // their own (matched) budget so the desk profile stays tractable.
  double entropy_coef = 0.02;
  double gamma = 0.96;
  double gae_lambda = 0.92;
  int n_steps = 512;
  int n_epochs = 10;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int batch_size = 32;
  int n_envs = 8;
  long total_steps = 300000;
  long vision_total_steps = 40960;
  int checkpoint_count = 30;
  int eval_every_iters = 0;
  std::map<std::string, double> lr_overrides;    // ppo.lr.<strategy>
  std::map<std::string, double> clip_overrides;  // ppo.clip.<strategy>

  // Evaluation.
  int eval_boxes = 50;
  std::uint64_t eval_seed = 2024;

  // Run orchestration.
  std::vector<repr::Strategy> strategies = {repr::Strategy::state};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string profile = "desk";  // desk | paper

  static ExperimentConfig defaults();
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  std::string canonical() const;
  std::uint64_t hash() const { return fnv1a(canonical()); }

  ppo::PPOConfig ppo_for(repr::Strategy s) const;
  void validate() const;
};

// Run-directory root; the only environment-variable knob.
std::string run_root();

}  // namespace pgrl::harness
