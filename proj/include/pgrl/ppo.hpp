#pragma once

#include <functional>
#include <optional>
#include <string>

#include "pgrl/backbone.hpp"
#include "pgrl/policy.hpp"

namespace pgrl::ppo {

struct PPOConfig {
  double lr = 0.001;          // per-strategy (Table I)
  double clip_range = 0.3;    // per-strategy (Table I)
  double entropy_coef = 0.02;
  double gamma = 0.96;
  double gae_lambda = 0.92;
  int n_steps = 512;
  int n_epochs = 10;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int batch_size = 32;
  int n_envs = 16;
  long total_steps = 1500000;
  int checkpoint_count = 30;
  int eval_every_iters = 0;  // 0 disables in-training evaluation
  bool normalize_advantage = true;  // per minibatch, mean 0 / std 1

  long buffer_size() const { return static_cast<long>(n_steps) * n_envs; }
  void validate() const;

  // Model-specific learning rate and clip range; shared values above.
  static PPOConfig defaults_for(repr::Strategy s);
};

struct RolloutBuffer {
  int n_steps = 0, n_envs = 0, obs_dim = 0;
  std::vector<float> obs;        // [t * n_envs + e][obs_dim]
  std::vector<float> actions;    // [t * n_envs + e][2]
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> bootstrap_values;  // per env, value after the last step
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> finished_episode_returns;

  void resize(int steps, int envs, int dim);
  std::size_t idx(int t, int e) const { return static_cast<std::size_t>(t) * n_envs + e; }
  long size() const { return static_cast<long>(n_steps) * n_envs; }
  std::uint64_t checksum() const;
};

// delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
void compute_gae(RolloutBuffer& buf, double gamma, double lambda);
// Whole-buffer normalization to mean 0, std 1.
void normalize_advantages(RolloutBuffer& buf);

// Policy plus the encoders its strategy needs; `trainable` is what PPO
// updates (the frozen strategies exclude their encoder).
struct AgentBundle {
  repr::Strategy strategy = repr::Strategy::state;
  PolicyNet policy;
  repr::EncoderStack stack;
  nn::ParamList<float> trainable;

  void init(repr::Strategy s, std::uint64_t seed);
  void rebuild_trainable();
  // Maps stored observation rows to the policy-input tensor. For end-to-end
  // this runs the encoder forward (with caches, so a backward can follow).
  nn::Tensor policy_input(const nn::Tensor& stored_rows);
};

struct UpdateStats {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double clip_fraction = 0;
  double approx_kl = 0;
  double max_postclip_grad_norm = 0;
};

RolloutBuffer collect_rollouts(std::vector<env::GraspEnv>& envs, std::vector<Rng>& env_rngs,
                               AgentBundle& agent, const PPOConfig& cfg);

UpdateStats ppo_update(AgentBundle& agent, const RolloutBuffer& buf, const PPOConfig& cfg,
                       nn::Adam& adam, Rng& shuffle_rng);

struct IterationLog {
  int iteration = 0;
  long env_steps = 0;
  std::optional<double> mean_episode_return;
  UpdateStats stats;
  std::optional<double> eval_success_rate;
  double wall_seconds = 0;
};

struct CheckpointInfo {
  int index = 0;
  long env_steps = 0;
  std::string path;
};

// Alternates rollout collection, GAE and updates; saves evenly spaced
// checkpoints (total_steps / checkpoint_count apart) and appends one metrics
// row per iteration. Fully resumable: checkpoints carry the optimizer state,
// every RNG stream and the mid-episode environment states.
struct Trainer {
  repr::Strategy strategy = repr::Strategy::state;
  PPOConfig cfg;
  env::EnvConfig env_cfg;
  arm::ArmModel arm_model = arm::ArmModel::standard();
  AgentBundle agent;
  nn::Adam adam;
  std::vector<env::GraspEnv> envs;
  std::vector<Rng> env_rngs;
  Rng update_rng;
  long steps_done = 0;
  int iteration = 0;
  int next_checkpoint = 1;
  std::uint64_t config_hash = 0;
  std::vector<CheckpointInfo> saved;

  std::string checkpoint_dir;  // empty: keep checkpoints in memory only? no - required for saving
  std::function<void(const IterationLog&)> on_iteration;
  std::function<double(AgentBundle&)> eval_fn;

  void init(std::uint64_t seed);
  void run();
  void save_checkpoint(const std::string& path);
  void load_checkpoint(const std::string& path);
};

}  // namespace pgrl::ppo
