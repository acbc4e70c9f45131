#include "pgrl/ppo.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

namespace pgrl::ppo {

void PPOConfig::validate() const {
  require(gamma > 0.0 && gamma <= 1.0, "ppo: gamma out of range");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "ppo: lambda out of range");
  require(clip_range > 0.0, "ppo: clip range must be positive");
  require(n_steps > 0 && n_envs > 0 && batch_size > 0, "ppo: sizes must be positive");
  require(buffer_size() % batch_size == 0, "ppo: batch_size must divide n_steps * n_envs");
  require(checkpoint_count > 0, "ppo: checkpoint_count must be positive");
}

PPOConfig PPOConfig::defaults_for(repr::Strategy s) {
  PPOConfig c;
  switch (s) {
    case repr::Strategy::state:
      c.lr = 0.001;
      c.clip_range = 0.3;
      break;
    case repr::Strategy::state_randomized:
    case repr::Strategy::vts:
      c.lr = 0.0005;
      c.clip_range = 0.25;
      break;
    case repr::Strategy::ae:
    case repr::Strategy::igae:
      c.lr = 0.0001;
      c.clip_range = 0.25;
      break;
    case repr::Strategy::end_to_end:
      c.lr = 0.00005;
      c.clip_range = 0.25;
      break;
  }
  return c;
}

void RolloutBuffer::resize(int steps, int envs, int dim) {
  n_steps = steps;
  n_envs = envs;
  obs_dim = dim;
  const std::size_t n = static_cast<std::size_t>(steps) * envs;
  obs.assign(n * dim, 0.0f);
  actions.assign(n * kActionDim, 0.0f);
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  values.assign(n, 0.0);
  dones.assign(n, 0);
  bootstrap_values.assign(envs, 0.0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  finished_episode_returns.clear();
}

std::uint64_t RolloutBuffer::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  h = fnv1a(obs.data(), obs.size() * sizeof(float), h);
  h = fnv1a(actions.data(), actions.size() * sizeof(float), h);
  h = fnv1a(log_probs.data(), log_probs.size() * sizeof(double), h);
  h = fnv1a(rewards.data(), rewards.size() * sizeof(double), h);
  h = fnv1a(values.data(), values.size() * sizeof(double), h);
  h = fnv1a(dones.data(), dones.size(), h);
  h = fnv1a(bootstrap_values.data(), bootstrap_values.size() * sizeof(double), h);
  return h;
}

void compute_gae(RolloutBuffer& buf, double gamma, double lambda) {
  for (int e = 0; e < buf.n_envs; ++e) {
    double acc = 0.0;
    for (int t = buf.n_steps - 1; t >= 0; --t) {
      const std::size_t i = buf.idx(t, e);
      const double nonterminal = buf.dones[i] ? 0.0 : 1.0;
      const double next_value =
          (t == buf.n_steps - 1) ? buf.bootstrap_values[e] : buf.values[buf.idx(t + 1, e)];
      const double delta =
          buf.rewards[i] + gamma * next_value * nonterminal - buf.values[i];
      acc = delta + gamma * lambda * nonterminal * acc;
      buf.advantages[i] = acc;
      buf.returns[i] = acc + buf.values[i];
    }
  }
}

void normalize_advantages(RolloutBuffer& buf) {
  const long n = buf.size();
  double mean = 0.0;
  for (double a : buf.advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : buf.advantages) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / n);
  for (double& a : buf.advantages) a = (a - mean) / (std + 1e-8);
}

void AgentBundle::init(repr::Strategy s, std::uint64_t seed) {
  strategy = s;
  const bool tanh_act = !repr::is_vision(s);
  policy.init(repr::observation_dim(s), tanh_act, seed);
  if (s == repr::Strategy::end_to_end) {
    stack.encoder.init(seed);
    stack.has_encoder = true;
  } else if (s == repr::Strategy::ae || s == repr::Strategy::igae) {
    stack.has_encoder = true;  // weights loaded from the pretrained checkpoint
  } else if (s == repr::Strategy::vts) {
    stack.has_vts = true;
  }
  rebuild_trainable();
}

void AgentBundle::rebuild_trainable() {
  trainable.clear();
  policy.params(trainable);
  if (strategy == repr::Strategy::end_to_end) stack.encoder.params(trainable);
}

nn::Tensor AgentBundle::policy_input(const nn::Tensor& stored_rows) {
  if (strategy != repr::Strategy::end_to_end) return stored_rows;
  const int B = stored_rows.shape[0];
  nn::Tensor imgs({B, 3, repr::kImageSize, repr::kImageSize});
  imgs.data = stored_rows.data;
  return stack.encoder.forward(imgs);
}

namespace {

// Builds the stored-observation rows for all envs (batched vision forward).
nn::Tensor build_stored_obs(std::vector<env::GraspEnv>& envs, std::vector<Rng>& env_rngs,
                            AgentBundle& agent) {
  const int n = static_cast<int>(envs.size());
  const int dim = repr::stored_obs_dim(agent.strategy);
  nn::Tensor rows({n, dim});

  if (!repr::is_vision(agent.strategy)) {
    for (int e = 0; e < n; ++e) {
      env::NumericState s = envs[e].numeric_state();
      if (agent.strategy == repr::Strategy::state_randomized)
        s = env::randomize_numeric_state(s, envs[e].config().state_noise_fraction,
                                         envs[e].config().additive_state_noise, env_rngs[e]);
      for (int k = 0; k < repr::kStateDim; ++k)
        rows[static_cast<std::size_t>(e) * dim + k] = static_cast<float>(s[k]);
    }
    return rows;
  }

  nn::Tensor imgs({n, 3, repr::kImageSize, repr::kImageSize});
  const std::size_t img_sz = static_cast<std::size_t>(3) * repr::kImageSize * repr::kImageSize;
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n; ++e) {
    render::SceneSpec scene = render::make_scene(envs[e]);
    scene.camera = agent.stack.camera;
    render::Image img = render::render(scene);
    nn::Tensor t = repr::image_to_tensor(img);
    std::copy(t.data.begin(), t.data.end(), imgs.data.begin() + e * img_sz);
  }

  if (agent.strategy == repr::Strategy::end_to_end) {
    rows.data = imgs.data;
    return rows;
  }
  repr::Encoder& enc =
      agent.strategy == repr::Strategy::vts ? agent.stack.vts.enc : agent.stack.encoder;
  nn::Tensor latent = enc.forward(imgs);
  if (agent.strategy == repr::Strategy::vts) {
    nn::Tensor pred = agent.stack.vts.head_forward(latent);
    rows.data = pred.data;
  } else {
    rows.data = latent.data;
  }
  return rows;
}

double actor_log_std(const AgentBundle& agent, int d) {
  return static_cast<double>(agent.policy.log_std.w[d]);
}

}  // namespace

RolloutBuffer collect_rollouts(std::vector<env::GraspEnv>& envs, std::vector<Rng>& env_rngs,
                               AgentBundle& agent, const PPOConfig& cfg) {
  require(static_cast<int>(envs.size()) == cfg.n_envs, "collect: env count mismatch");
  RolloutBuffer buf;
  buf.resize(cfg.n_steps, cfg.n_envs, repr::stored_obs_dim(agent.strategy));

  const int n = cfg.n_envs;
  for (int t = 0; t < cfg.n_steps; ++t) {
    nn::Tensor stored = build_stored_obs(envs, env_rngs, agent);
    nn::Tensor input = agent.policy_input(stored);
    nn::Tensor mean = agent.policy.actor_forward(input);
    nn::Tensor value = agent.policy.critic_forward(input);

    // Sample actions sequentially (one stream per env), then step in
    // parallel; each env only touches its own slot.
    std::vector<Vec2> acts(n);
    for (int e = 0; e < n; ++e) {
      const std::size_t i = buf.idx(t, e);
      double mu[kActionDim], a[kActionDim];
      double ls[kActionDim];
      for (int d = 0; d < kActionDim; ++d) {
        mu[d] = mean[static_cast<std::size_t>(e) * kActionDim + d];
        ls[d] = actor_log_std(agent, d);
      }
      nn::gaussian_sample(mu, ls, kActionDim, env_rngs[e], a);
      buf.log_probs[i] = nn::gaussian_log_prob(mu, ls, a, kActionDim);
      for (int d = 0; d < kActionDim; ++d)
        buf.actions[i * kActionDim + d] = static_cast<float>(a[d]);
      acts[e] = {a[0], a[1]};
      std::copy(stored.data.begin() + static_cast<std::size_t>(e) * buf.obs_dim,
                stored.data.begin() + static_cast<std::size_t>(e + 1) * buf.obs_dim,
                buf.obs.begin() + i * buf.obs_dim);
      buf.values[i] = value[e];
    }

    std::vector<double> episode_returns(n, 0.0);
    std::vector<std::uint8_t> finished(n, 0);
    std::string env_error;
#pragma omp parallel for schedule(static)
    for (int e = 0; e < n; ++e) {
      try {
        const env::StepOutcome out = envs[e].step(acts[e]);
        const std::size_t i = buf.idx(t, e);
        buf.rewards[i] = out.reward;
        buf.dones[i] = out.done ? 1 : 0;
        if (out.done) {
          episode_returns[e] = envs[e].episode_return();
          finished[e] = 1;
        }
      } catch (const std::exception& ex) {
#pragma omp critical
        if (env_error.empty())
          env_error = "env " + std::to_string(e) + ": " + ex.what();
      }
    }
    if (!env_error.empty()) fail("collect_rollouts: " + env_error);
    for (int e = 0; e < n; ++e) {
      if (finished[e]) {
        buf.finished_episode_returns.push_back(episode_returns[e]);
        envs[e].reset(env_rngs[e]);
      }
    }
  }

  nn::Tensor stored = build_stored_obs(envs, env_rngs, agent);
  nn::Tensor input = agent.policy_input(stored);
  nn::Tensor value = agent.policy.critic_forward(input);
  for (int e = 0; e < n; ++e) buf.bootstrap_values[e] = value[e];
  return buf;
}

namespace {

double grad_norm(const nn::ParamList<float>& params) {
  double sq = 0.0;
  for (const auto& r : params)
    for (float g : r.p->g.data) sq += static_cast<double>(g) * g;
  return std::sqrt(sq);
}

void scale_grads(const nn::ParamList<float>& params, double factor) {
  for (const auto& r : params)
    for (float& g : r.p->g.data) g = static_cast<float>(g * factor);
}

}  // namespace

UpdateStats ppo_update(AgentBundle& agent, const RolloutBuffer& buf, const PPOConfig& cfg,
                       nn::Adam& adam, Rng& shuffle_rng) {
  const long n = buf.size();
  std::vector<long> order(n);
  for (long i = 0; i < n; ++i) order[i] = i;

  UpdateStats stats;
  long batches = 0;

  // The state-randomized buffer already contains the noisy observations; the
  // update replays them as-is.
  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    for (long start = 0; start < n; start += cfg.batch_size) {
      const int B = static_cast<int>(std::min<long>(cfg.batch_size, n - start));

      nn::Tensor rows({B, buf.obs_dim});
      for (int b = 0; b < B; ++b)
        std::copy(buf.obs.begin() + order[start + b] * buf.obs_dim,
                  buf.obs.begin() + (order[start + b] + 1) * buf.obs_dim,
                  rows.data.begin() + static_cast<std::size_t>(b) * buf.obs_dim);

      nn::Tensor input = agent.policy_input(rows);
      nn::Tensor mean = agent.policy.actor_forward(input);
      nn::Tensor value = agent.policy.critic_forward(input);

      nn::Tensor dmean({B, kActionDim});
      nn::Tensor dvalue({B, 1});
      double dlog_std[kActionDim] = {0, 0};
      double pg_loss = 0, v_loss = 0, clip_frac = 0, kl = 0;

      double ls[kActionDim], sigma[kActionDim];
      for (int d = 0; d < kActionDim; ++d) {
        ls[d] = actor_log_std(agent, d);
        sigma[d] = std::exp(ls[d]);
      }

      // Per-minibatch advantage normalization (the StableBaselines3 default).
      std::vector<double> adv_mb(B);
      for (int b = 0; b < B; ++b) adv_mb[b] = buf.advantages[order[start + b]];
      if (cfg.normalize_advantage) {
        double m = 0;
        for (double a : adv_mb) m += a;
        m /= B;
        double var = 0;
        for (double a : adv_mb) var += (a - m) * (a - m);
        const double sd = std::sqrt(var / B);
        for (double& a : adv_mb) a = (a - m) / (sd + 1e-8);
      }

      for (int b = 0; b < B; ++b) {
        const long i = order[start + b];
        double mu[kActionDim], a[kActionDim];
        for (int d = 0; d < kActionDim; ++d) {
          mu[d] = mean[static_cast<std::size_t>(b) * kActionDim + d];
          a[d] = buf.actions[static_cast<std::size_t>(i) * kActionDim + d];
        }
        const double logp_new = nn::gaussian_log_prob(mu, ls, a, kActionDim);
        const double logratio = logp_new - buf.log_probs[i];
        const double ratio = std::exp(logratio);
        const double adv = adv_mb[b];

        const double clipped = clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
        const double surr_un = ratio * adv;
        const double surr_cl = clipped * adv;
        pg_loss += -std::min(surr_un, surr_cl);
        clip_frac += std::fabs(ratio - 1.0) > cfg.clip_range ? 1.0 : 0.0;
        kl += (ratio - 1.0) - logratio;

        // Gradient flows through the unclipped branch only when it is the
        // active minimum.
        const double dLdlogp = (surr_un <= surr_cl) ? (-adv * ratio / B) : 0.0;
        for (int d = 0; d < kActionDim; ++d) {
          const double z = (a[d] - mu[d]) / sigma[d];
          dmean[static_cast<std::size_t>(b) * kActionDim + d] =
              static_cast<float>(dLdlogp * (z / sigma[d]));
          dlog_std[d] += dLdlogp * (z * z - 1.0);
        }

        const double verr = static_cast<double>(value[b]) - buf.returns[i];
        v_loss += verr * verr;
        dvalue[b] = static_cast<float>(cfg.value_coef * 2.0 * verr / B);
      }

      // Entropy bonus: d entropy / d log_std = 1 per dimension.
      for (int d = 0; d < kActionDim; ++d)
        agent.policy.log_std.g[d] +=
            static_cast<float>(dlog_std[d] - cfg.entropy_coef * 1.0);

      nn::Tensor dinput_a = agent.policy.actor_backward(dmean);
      nn::Tensor dinput_c = agent.policy.critic_backward(dvalue);
      if (agent.strategy == repr::Strategy::end_to_end) {
        nn::Tensor dlatent = dinput_a;
        for (long k = 0; k < dlatent.numel(); ++k) dlatent[k] += dinput_c[k];
        agent.stack.encoder.backward(dlatent);
      }

      const double norm = grad_norm(agent.trainable);
      if (norm > cfg.max_grad_norm && norm > 0.0)
        scale_grads(agent.trainable, cfg.max_grad_norm / norm);
      stats.max_postclip_grad_norm =
          std::max(stats.max_postclip_grad_norm, std::min(norm, cfg.max_grad_norm));
      adam.step(agent.trainable, cfg.lr);

      stats.policy_loss += pg_loss / B;
      stats.value_loss += v_loss / B;
      stats.clip_fraction += clip_frac / B;
      stats.approx_kl += kl / B;
      ++batches;
    }
  }

  stats.policy_loss /= batches;
  stats.value_loss /= batches;
  stats.clip_fraction /= batches;
  stats.approx_kl /= batches;
  double ls[kActionDim];
  for (int d = 0; d < kActionDim; ++d) ls[d] = actor_log_std(agent, d);
  stats.entropy = nn::gaussian_entropy(ls, kActionDim);
  require(std::isfinite(stats.policy_loss) && std::isfinite(stats.value_loss),
          "ppo_update: loss diverged (NaN)");
  return stats;
}

void Trainer::init(std::uint64_t seed) {
  cfg.validate();
  agent.init(strategy, seed);
  adam.init(agent.trainable);
  envs.clear();
  env_rngs.clear();
  Rng root(seed);
  for (int e = 0; e < cfg.n_envs; ++e) {
    envs.emplace_back(env_cfg, arm_model);
    env_rngs.push_back(root.fork(1000 + e));
    envs.back().reset(env_rngs.back());
  }
  update_rng = root.fork(77);
  steps_done = 0;
  iteration = 0;
  next_checkpoint = 1;
  saved.clear();
}

void Trainer::run() {
  const auto t0 = std::chrono::steady_clock::now();
  const long ckpt_stride = std::max<long>(1, cfg.total_steps / cfg.checkpoint_count);

  while (steps_done < cfg.total_steps) {
    RolloutBuffer buf = collect_rollouts(envs, env_rngs, agent, cfg);
    compute_gae(buf, cfg.gamma, cfg.gae_lambda);
    UpdateStats stats;
    try {
      stats = ppo_update(agent, buf, cfg, adam, update_rng);
    } catch (const std::exception& e) {
      const std::string last = saved.empty() ? "none" : saved.back().path;
      fail(std::string(e.what()) + " at iteration " + std::to_string(iteration + 1) +
           "; last good checkpoint: " + last);
    }

    steps_done += buf.size();
    ++iteration;

    IterationLog log;
    log.iteration = iteration;
    log.env_steps = steps_done;
    log.stats = stats;
    if (!buf.finished_episode_returns.empty()) {
      double m = 0;
      for (double r : buf.finished_episode_returns) m += r;
      log.mean_episode_return = m / buf.finished_episode_returns.size();
    }
    if (eval_fn && cfg.eval_every_iters > 0 && iteration % cfg.eval_every_iters == 0)
      log.eval_success_rate = eval_fn(agent);
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    while (next_checkpoint <= cfg.checkpoint_count &&
           steps_done >= next_checkpoint * ckpt_stride) {
      CheckpointInfo info;
      info.index = next_checkpoint;
      info.env_steps = steps_done;
      if (!checkpoint_dir.empty()) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%03d.bin", next_checkpoint);
        info.path = checkpoint_dir + "/" + name;
        save_checkpoint(info.path);
      }
      saved.push_back(info);
      ++next_checkpoint;
    }

    if (on_iteration) on_iteration(log);
  }
}

void Trainer::save_checkpoint(const std::string& path) {
  nn::Checkpoint ck;
  ck.config_hash = config_hash;

  nn::ParamList<float> all;
  agent.policy.params(all);
  if (agent.stack.has_encoder) agent.stack.encoder.params(all);
  if (agent.stack.has_vts) agent.stack.vts.params(all);
  for (auto& r : all) ck.add_tensor(r.p->name, r.p->w);

  for (std::size_t i = 0; i < adam.m.size(); ++i) {
    ck.add_tensor("adam.m." + agent.trainable[i].p->name, adam.m[i]);
    ck.add_tensor("adam.v." + agent.trainable[i].p->name, adam.v[i]);
  }

  std::vector<double> env_blob;
  for (const auto& e : envs) {
    auto b = e.serialize();
    env_blob.insert(env_blob.end(), b.begin(), b.end());
  }
  ck.add_f64("trainer.env_states", {cfg.n_envs, 15}, env_blob.data());

  std::vector<std::uint64_t> rng_blob;
  for (const auto& r : env_rngs) {
    auto s = r.state();
    rng_blob.insert(rng_blob.end(), s.begin(), s.end());
  }
  auto us = update_rng.state();
  rng_blob.insert(rng_blob.end(), us.begin(), us.end());
  ck.add_u64("trainer.rng_streams", rng_blob);

  ck.add_u64("trainer.counters",
             {static_cast<std::uint64_t>(steps_done), static_cast<std::uint64_t>(iteration),
              static_cast<std::uint64_t>(next_checkpoint),
              static_cast<std::uint64_t>(adam.step_count)});
  ck.save(path);
}

void Trainer::load_checkpoint(const std::string& path) {
  nn::Checkpoint ck = nn::Checkpoint::load(path);
  require(ck.config_hash == config_hash,
          "checkpoint: config hash mismatch (got a checkpoint from a different config)");

  nn::ParamList<float> all;
  agent.policy.params(all);
  if (agent.stack.has_encoder) agent.stack.encoder.params(all);
  if (agent.stack.has_vts) agent.stack.vts.params(all);
  for (auto& r : all) ck.read_into(r.p->name, r.p->w);

  for (std::size_t i = 0; i < agent.trainable.size(); ++i) {
    ck.read_into("adam.m." + agent.trainable[i].p->name, adam.m[i]);
    ck.read_into("adam.v." + agent.trainable[i].p->name, adam.v[i]);
  }

  const auto env_blob = ck.get_f64("trainer.env_states");
  require(env_blob.size() == static_cast<std::size_t>(cfg.n_envs) * 15,
          "checkpoint: env state size mismatch");
  for (int e = 0; e < cfg.n_envs; ++e) {
    std::array<double, 15> b;
    std::copy(env_blob.begin() + e * 15, env_blob.begin() + (e + 1) * 15, b.begin());
    envs[e].deserialize(b);
  }

  const auto rng_blob = ck.get_u64("trainer.rng_streams");
  require(rng_blob.size() == static_cast<std::size_t>(cfg.n_envs + 1) * 4,
          "checkpoint: rng stream count mismatch");
  for (int e = 0; e < cfg.n_envs; ++e) {
    std::array<std::uint64_t, 4> s;
    std::copy(rng_blob.begin() + e * 4, rng_blob.begin() + (e + 1) * 4, s.begin());
    env_rngs[e].set_state(s);
  }
  std::array<std::uint64_t, 4> us;
  std::copy(rng_blob.end() - 4, rng_blob.end(), us.begin());
  update_rng.set_state(us);

  const auto counters = ck.get_u64("trainer.counters");
  steps_done = static_cast<long>(counters[0]);
  iteration = static_cast<int>(counters[1]);
  next_checkpoint = static_cast<int>(counters[2]);
  adam.step_count = static_cast<long>(counters[3]);
}

}  // namespace pgrl::ppo
