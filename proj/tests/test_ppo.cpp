#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ppo_oracles.hpp"
#include "pgrl/ppo.hpp"

using namespace pgrl;
using namespace pgrl::ppo;

namespace {

RolloutBuffer buffer_from_sequence(const ppo_oracle::Sequence& s) {
  RolloutBuffer buf;
  buf.resize(static_cast<int>(s.rewards.size()), 1, 1);
  for (std::size_t t = 0; t < s.rewards.size(); ++t) {
    buf.rewards[t] = s.rewards[t];
    buf.values[t] = s.values[t];
    buf.dones[t] = s.dones[t] ? 1 : 0;
  }
  buf.bootstrap_values[0] = s.bootstrap;
  return buf;
}

PPOConfig tiny_cfg(repr::Strategy s, int n_steps, int n_envs, long total) {
  PPOConfig cfg = PPOConfig::defaults_for(s);
  cfg.n_steps = n_steps;
  cfg.n_envs = n_envs;
  cfg.batch_size = 32;
  cfg.total_steps = total;
  cfg.checkpoint_count = 2;
  return cfg;
}

}  // namespace

TEST_CASE("GAE: analytic one-step cases") {
  // Terminal one-step episode: A0 = r0 - V(s0), no bootstrap.
  ppo_oracle::Sequence s;
  s.rewards = {1.5};
  s.values = {0.4};
  s.dones = {1};
  s.bootstrap = 123.0;  // must be ignored
  RolloutBuffer buf = buffer_from_sequence(s);
  compute_gae(buf, 0.96, 0.92);
  CHECK(buf.advantages[0] == doctest::Approx(1.5 - 0.4).epsilon(1e-12));
  CHECK(buf.returns[0] == doctest::Approx(1.5).epsilon(1e-12));

  // Non-terminal single step with bootstrap: A0 = r + gamma*V(s1) - V(s0).
  s.rewards = {1.0};
  s.values = {0.5};
  s.dones = {0};
  s.bootstrap = 0.25;
  buf = buffer_from_sequence(s);
  compute_gae(buf, 0.96, 0.92);
  CHECK(buf.advantages[0] == doctest::Approx(1.0 + 0.96 * 0.25 - 0.5).epsilon(1e-12));
  CHECK(buf.advantages[0] == doctest::Approx(0.74).epsilon(1e-12));
}

TEST_CASE("GAE matches the brute-force oracle on random sequences") {
  Rng rng(2718);
  for (int it = 0; it < 1000; ++it) {
    const int T = rng.uniform_int(1, 101);
    ppo_oracle::Sequence s;
    for (int t = 0; t < T; ++t) {
      s.rewards.push_back(rng.uniform(-2, 2));
      s.values.push_back(rng.uniform(-1, 1));
      s.dones.push_back(rng.uniform01() < 0.1 ? 1 : 0);
    }
    s.bootstrap = rng.uniform(-1, 1);
    RolloutBuffer buf = buffer_from_sequence(s);
    compute_gae(buf, 0.96, 0.92);
    auto oracle = ppo_oracle::brute_force_gae(s, 0.96, 0.92);
    for (int t = 0; t < T; ++t) CHECK(std::fabs(buf.advantages[t] - oracle[t]) <= 1e-10);
  }
}

TEST_CASE("advantage normalization: mean 0, std 1") {
  RolloutBuffer buf;
  buf.resize(64, 2, 1);
  Rng rng(5);
  for (auto& a : buf.advantages) a = rng.uniform(-3, 7);
  normalize_advantages(buf);
  double m = 0;
  for (double a : buf.advantages) m += a;
  m /= buf.size();
  double v = 0;
  for (double a : buf.advantages) v += (a - m) * (a - m);
  CHECK(std::fabs(m) <= 1e-9);
  CHECK(std::fabs(std::sqrt(v / buf.size()) - 1.0) <= 1e-6);
}

TEST_CASE("collect_rollouts: buffer shape, determinism, episode return cross-check") {
  env::EnvConfig ecfg;
  ecfg.horizon = 50;  // short episodes so several finish inside the buffer
  arm::ArmModel arm_model = arm::ArmModel::standard();

  auto collect_once = [&](std::uint64_t seed) {
    PPOConfig cfg = tiny_cfg(repr::Strategy::state, 128, 4, 512);
    AgentBundle agent;
    agent.init(repr::Strategy::state, seed);
    std::vector<env::GraspEnv> envs;
    std::vector<Rng> rngs;
    Rng root(seed);
    for (int e = 0; e < cfg.n_envs; ++e) {
      envs.emplace_back(ecfg, arm_model);
      rngs.push_back(root.fork(e));
      envs.back().reset(rngs.back());
    }
    return collect_rollouts(envs, rngs, agent, cfg);
  };

  RolloutBuffer a = collect_once(7);
  RolloutBuffer b = collect_once(7);
  CHECK(a.size() == 128 * 4);
  CHECK(a.checksum() == b.checksum());

  // Re-sum rewards per finished episode from the reward/done columns.
  std::vector<double> resummed;
  std::vector<double> acc(a.n_envs, 0.0);
  for (int t = 0; t < a.n_steps; ++t)
    for (int e = 0; e < a.n_envs; ++e) {
      acc[e] += a.rewards[a.idx(t, e)];
      if (a.dones[a.idx(t, e)]) {
        resummed.push_back(acc[e]);
        acc[e] = 0.0;
      }
    }
  REQUIRE(resummed.size() == a.finished_episode_returns.size());
  CHECK(!resummed.empty());
  for (std::size_t i = 0; i < resummed.size(); ++i)
    CHECK(resummed[i] == doctest::Approx(a.finished_episode_returns[i]).epsilon(1e-12));
}

TEST_CASE("paper-profile buffer is 512 x 16 = 8192 transitions") {
  PPOConfig cfg;  // defaults carry the shared table values
  CHECK(cfg.n_steps == 512);
  CHECK(cfg.buffer_size() == 8192 * 2 - 8192);  // 512 * 16
  CHECK(cfg.buffer_size() == 8192);
}

TEST_CASE("ppo_update: clip arithmetic, positive-advantage improvement, clip fraction") {
  // One minibatch per epoch, one epoch: stats are exact, not averaged.
  PPOConfig cfg = tiny_cfg(repr::Strategy::state, 8, 4, 32);
  cfg.batch_size = 32;
  cfg.n_epochs = 1;
  cfg.clip_range = 0.25;
  cfg.entropy_coef = 0.0;
  cfg.normalize_advantage = false;  // probe the raw clip arithmetic
  cfg.lr = 1e-9;  // keep weights effectively fixed for the arithmetic check

  AgentBundle agent;
  agent.init(repr::Strategy::state, 3);
  nn::Adam adam;
  adam.init(agent.trainable);

  RolloutBuffer buf;
  buf.resize(cfg.n_steps, cfg.n_envs, 9);
  Rng rng(11);
  for (auto& o : buf.obs) o = static_cast<float>(rng.uniform(-1, 1));
  for (auto& a : buf.actions) a = static_cast<float>(rng.uniform(-1, 1));
  for (auto& r : buf.returns) r = rng.uniform(-1, 1);
  for (auto& a : buf.advantages) a = 1.0;  // identical positive advantages

  // log_probs chosen so that rho = 1.5 everywhere.
  for (int t = 0; t < cfg.n_steps; ++t)
    for (int e = 0; e < cfg.n_envs; ++e) {
      const std::size_t i = buf.idx(t, e);
      nn::Tensor obs({1, 9});
      for (int k = 0; k < 9; ++k) obs[k] = buf.obs[i * 9 + k];
      nn::Tensor mean = agent.policy.actor_forward(obs);
      double mu[2] = {mean[0], mean[1]};
      double ls[2] = {agent.policy.log_std.w[0], agent.policy.log_std.w[1]};
      double act[2] = {buf.actions[i * 2], buf.actions[i * 2 + 1]};
      buf.log_probs[i] = nn::gaussian_log_prob(mu, ls, act, 2) - std::log(1.5);
    }

  Rng shuffle(1);
  UpdateStats stats = ppo_update(agent, buf, cfg, adam, shuffle);
  // min(1.5 * 1, clamp(1.5, .75, 1.25) * 1) = 1.25, loss = -1.25.
  CHECK(stats.policy_loss == doctest::Approx(-1.25).epsilon(1e-5));
  CHECK(stats.clip_fraction == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats.max_postclip_grad_norm <= cfg.max_grad_norm + 1e-6);
  // Pessimistic-bound property: the clipped surrogate never exceeds the
  // unclipped one (here -mean(rho * A) = -1.5).
  CHECK(stats.policy_loss >= -1.5 - 1e-6);

  // With rho = 1 the clipped surrogate equals the unclipped one and the
  // clip fraction is zero.
  for (int t = 0; t < cfg.n_steps; ++t)
    for (int e = 0; e < cfg.n_envs; ++e) {
      const std::size_t i = buf.idx(t, e);
      buf.log_probs[i] += std::log(1.5);
    }
  AgentBundle agent2;
  agent2.init(repr::Strategy::state, 3);
  nn::Adam adam2;
  adam2.init(agent2.trainable);
  Rng shuffle2(1);
  UpdateStats s2 = ppo_update(agent2, buf, cfg, adam2, shuffle2);
  CHECK(s2.clip_fraction == 0.0);
  CHECK(s2.approx_kl == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(s2.policy_loss == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("one update on all-positive advantages raises the taken-action log-prob") {
  PPOConfig cfg = tiny_cfg(repr::Strategy::state, 16, 4, 64);
  cfg.batch_size = 32;
  cfg.n_epochs = 1;
  cfg.entropy_coef = 0.0;
  cfg.normalize_advantage = false;
  cfg.lr = 1e-3;

  AgentBundle agent;
  agent.init(repr::Strategy::state, 5);
  nn::Adam adam;
  adam.init(agent.trainable);

  RolloutBuffer buf;
  buf.resize(cfg.n_steps, cfg.n_envs, 9);
  Rng rng(17);
  for (auto& o : buf.obs) o = static_cast<float>(rng.uniform(-1, 1));
  for (auto& r : buf.returns) r = rng.uniform(-1, 1);
  for (auto& adv : buf.advantages) adv = rng.uniform(0.5, 1.5);  // positive, non-constant

  auto mean_log_prob = [&]() {
    double sum = 0;
    for (long i = 0; i < buf.size(); ++i) {
      nn::Tensor obs({1, 9});
      for (int k = 0; k < 9; ++k) obs[k] = buf.obs[i * 9 + k];
      nn::Tensor mean = agent.policy.actor_forward(obs);
      double mu[2] = {mean[0], mean[1]};
      double ls[2] = {agent.policy.log_std.w[0], agent.policy.log_std.w[1]};
      double act[2] = {buf.actions[i * 2], buf.actions[i * 2 + 1]};
      sum += nn::gaussian_log_prob(mu, ls, act, 2);
    }
    return sum / buf.size();
  };

  // Sample actions from the current policy so log_probs are consistent.
  for (long i = 0; i < buf.size(); ++i) {
    nn::Tensor obs({1, 9});
    for (int k = 0; k < 9; ++k) obs[k] = buf.obs[i * 9 + k];
    nn::Tensor mean = agent.policy.actor_forward(obs);
    double mu[2] = {mean[0], mean[1]};
    double ls[2] = {agent.policy.log_std.w[0], agent.policy.log_std.w[1]};
    double act[2];
    nn::gaussian_sample(mu, ls, 2, rng, act);
    buf.actions[i * 2] = static_cast<float>(act[0]);
    buf.actions[i * 2 + 1] = static_cast<float>(act[1]);
    buf.log_probs[i] = nn::gaussian_log_prob(mu, ls, act, 2);
  }

  const double before = mean_log_prob();
  Rng shuffle(2);
  ppo_update(agent, buf, cfg, adam, shuffle);
  const double after = mean_log_prob();
  CHECK(after > before);
}

TEST_CASE("zero advantages with zero entropy coef: only the critic moves") {
  PPOConfig cfg = tiny_cfg(repr::Strategy::state, 8, 4, 32);
  cfg.n_epochs = 2;
  cfg.entropy_coef = 0.0;
  cfg.lr = 1e-3;

  AgentBundle agent;
  agent.init(repr::Strategy::state, 9);
  nn::Adam adam;
  adam.init(agent.trainable);

  RolloutBuffer buf;
  buf.resize(cfg.n_steps, cfg.n_envs, 9);
  Rng rng(23);
  for (auto& o : buf.obs) o = static_cast<float>(rng.uniform(-1, 1));
  for (auto& a : buf.actions) a = static_cast<float>(rng.uniform(-1, 1));
  for (auto& lp : buf.log_probs) lp = rng.uniform(-3, 0);
  for (auto& r : buf.returns) r = rng.uniform(-1, 1);
  // advantages stay identically zero

  nn::ParamList<float> actor;
  agent.policy.actor_params(actor);
  const std::uint64_t actor_before = repr::params_checksum(actor);
  nn::ParamList<float> critic;
  agent.policy.critic_params(critic);
  const std::uint64_t critic_before = repr::params_checksum(critic);

  Rng shuffle(3);
  ppo_update(agent, buf, cfg, adam, shuffle);

  CHECK(repr::params_checksum(actor) == actor_before);
  CHECK(repr::params_checksum(critic) != critic_before);
}

TEST_CASE("frozen-encoder strategies never touch encoder weights") {
  env::EnvConfig ecfg;
  ecfg.horizon = 16;
  PPOConfig cfg = tiny_cfg(repr::Strategy::ae, 8, 2, 16);
  cfg.batch_size = 16;
  cfg.n_epochs = 1;

  AgentBundle agent;
  agent.init(repr::Strategy::ae, 31);
  agent.stack.encoder.init(31);  // stand-in for pretrained weights
  agent.stack.camera = render::Camera{};

  nn::ParamList<float> enc_params;
  agent.stack.encoder.params(enc_params);
  const std::uint64_t before = repr::params_checksum(enc_params);

  std::vector<env::GraspEnv> envs;
  std::vector<Rng> rngs;
  Rng root(4);
  for (int e = 0; e < cfg.n_envs; ++e) {
    envs.emplace_back(ecfg, arm::ArmModel::standard());
    rngs.push_back(root.fork(e));
    envs.back().reset(rngs.back());
  }
  RolloutBuffer buf = collect_rollouts(envs, rngs, agent, cfg);
  compute_gae(buf, cfg.gamma, cfg.gae_lambda);
  normalize_advantages(buf);
  nn::Adam adam;
  adam.init(agent.trainable);
  Rng shuffle(5);
  ppo_update(agent, buf, cfg, adam, shuffle);

  CHECK(repr::params_checksum(enc_params) == before);
}

TEST_CASE("end-to-end strategy: encoder receives gradient from the policy loss") {
  env::EnvConfig ecfg;
  ecfg.horizon = 16;
  PPOConfig cfg = tiny_cfg(repr::Strategy::end_to_end, 8, 2, 16);
  cfg.batch_size = 16;
  cfg.n_epochs = 1;

  AgentBundle agent;
  agent.init(repr::Strategy::end_to_end, 47);
  agent.stack.camera = render::Camera{};

  nn::ParamList<float> enc_params;
  agent.stack.encoder.params(enc_params);
  const std::uint64_t before = repr::params_checksum(enc_params);

  std::vector<env::GraspEnv> envs;
  std::vector<Rng> rngs;
  Rng root(6);
  for (int e = 0; e < cfg.n_envs; ++e) {
    envs.emplace_back(ecfg, arm::ArmModel::standard());
    rngs.push_back(root.fork(e));
    envs.back().reset(rngs.back());
  }
  RolloutBuffer buf = collect_rollouts(envs, rngs, agent, cfg);
  CHECK(buf.obs_dim == 3 * 64 * 64);
  compute_gae(buf, cfg.gamma, cfg.gae_lambda);
  normalize_advantages(buf);
  nn::Adam adam;
  adam.init(agent.trainable);
  Rng shuffle(7);
  ppo_update(agent, buf, cfg, adam, shuffle);

  CHECK(repr::params_checksum(enc_params) != before);
}

TEST_CASE("trainer: checkpoints, metrics, determinism and resume equivalence") {
  namespace fs = std::filesystem;
  const std::string dir_a = "/tmp/pgrl_tr_a", dir_b = "/tmp/pgrl_tr_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);

  auto make = [&](const std::string& dir) {
    ppo::Trainer tr;
    tr.strategy = repr::Strategy::state;
    tr.cfg = tiny_cfg(repr::Strategy::state, 16, 4, 256);  // 4 iterations
    tr.cfg.checkpoint_count = 4;
    tr.env_cfg.horizon = 40;
    tr.config_hash = 12345;
    tr.checkpoint_dir = dir;
    tr.init(99);
    return tr;
  };

  ppo::Trainer a = make(dir_a);
  a.run();
  REQUIRE(a.saved.size() == 4);

  // Determinism: a second full run produces bit-identical checkpoints.
  ppo::Trainer b = make(dir_b);
  b.run();
  for (int k = 1; k <= 4; ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "/checkpoint_%03d.bin", k);
    std::ifstream fa(dir_a + name, std::ios::binary), fb(dir_b + name, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    REQUIRE(!sa.empty());
    CHECK(sa == sb);
  }

  // Resume from checkpoint 2 reproduces checkpoints 3 and 4 exactly.
  const std::string dir_c = "/tmp/pgrl_tr_c";
  fs::remove_all(dir_c);
  fs::create_directories(dir_c);
  ppo::Trainer c = make(dir_c);
  c.load_checkpoint(dir_a + "/checkpoint_002.bin");
  c.run();
  for (int k = 3; k <= 4; ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "/checkpoint_%03d.bin", k);
    std::ifstream fa(dir_a + name, std::ios::binary), fc(dir_c + name, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sc((std::istreambuf_iterator<char>(fc)), std::istreambuf_iterator<char>());
    REQUIRE(!sa.empty());
    CHECK(sa == sc);
  }

  // Config-hash mismatch is rejected.
  ppo::Trainer d = make("/tmp/pgrl_tr_d");
  d.config_hash = 999;
  CHECK_THROWS(d.load_checkpoint(dir_a + "/checkpoint_002.bin"));
}
