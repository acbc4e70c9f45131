#include "pgrl/evalsuite.hpp"

#include <fstream>

#include "pgrl/baseline.hpp"

namespace pgrl::harness {

EvalSuite EvalSuite::generate(const env::EnvConfig& cfg, int n, std::uint64_t seed) {
  EvalSuite s;
  Rng rng(seed);
  for (int i = 0; i < n; ++i)
    s.boxes.push_back({rng.uniform(cfg.spawn.x_min, cfg.spawn.x_max),
                       rng.uniform(cfg.spawn.y_min, cfg.spawn.y_max)});
  // Box #4 from the trajectory-comparison protocol.
  if (n >= 4 && cfg.spawn.contains({-0.26, 0.54})) s.boxes[3] = {-0.26, 0.54};
  return s;
}

void EvalSuite::save_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), "eval suite: cannot write '" + path + "'");
  os << "index,x,y\n";
  os.precision(17);
  for (std::size_t i = 0; i < boxes.size(); ++i)
    os << (i + 1) << "," << boxes[i].x << "," << boxes[i].y << "\n";
}

EvalSuite EvalSuite::load_csv(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "eval suite: cannot open '" + path + "'");
  EvalSuite s;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    int index;
    double x, y;
    require(std::sscanf(line.c_str(), "%d,%lf,%lf", &index, &x, &y) == 3,
            "eval suite: bad row '" + line + "'");
    s.boxes.push_back({x, y});
  }
  return s;
}

std::uint64_t EvalSuite::content_hash() const {
  return fnv1a(boxes.data(), boxes.size() * sizeof(Vec2));
}

const char* outcome_name(EvalOutcome o) {
  switch (o) {
    case EvalOutcome::success: return "success";
    case EvalOutcome::finger_collision: return "finger_collision";
    case EvalOutcome::other_collision: return "other_collision";
    case EvalOutcome::miss: return "miss";
  }
  return "?";
}

void EvalReport::write_outcomes_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), "eval report: cannot write '" + path + "'");
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(suite_hash));
  os << "# eval_boxes_hash=" << hash << "\n";
  os << "episode,outcome,episode_return\n";
  os.precision(17);
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    os << (i + 1) << "," << outcome_name(outcomes[i]) << "," << episode_returns[i] << "\n";
}

void EvalReport::write_trajectories_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), "eval report: cannot write '" + path + "'");
  os << "episode,t,ee_x,ee_y,action_x,action_y,reward,delta_x,delta_y\n";
  os.precision(17);
  for (const auto& r : trajectories)
    os << r.episode + 1 << "," << r.t << "," << r.ee_x << "," << r.ee_y << "," << r.action_x
       << "," << r.action_y << "," << r.reward << "," << r.delta_x << "," << r.delta_y << "\n";
}

namespace {

struct EvalRun {
  std::vector<env::GraspEnv> envs;
  std::vector<EvalOutcome> outcomes;
};

EvalOutcome classify(const env::GraspEnv& e) {
  if (e.state().collided) return EvalOutcome::other_collision;
  switch (e.terminal_grasp()) {
    case env::GraspOutcome::success: return EvalOutcome::success;
    case env::GraspOutcome::finger_collision: return EvalOutcome::finger_collision;
    case env::GraspOutcome::failure: return EvalOutcome::miss;
  }
  return EvalOutcome::miss;
}

EvalReport finish(const EvalSuite& suite, std::vector<env::GraspEnv>& envs) {
  EvalReport rep;
  rep.suite_hash = suite.content_hash();
  int successes = 0;
  for (auto& e : envs) {
    const EvalOutcome o = classify(e);
    rep.outcomes.push_back(o);
    rep.episode_returns.push_back(e.episode_return());
    successes += o == EvalOutcome::success;
  }
  rep.success_rate = static_cast<double>(successes) / envs.size();
  return rep;
}

}  // namespace

EvalReport evaluate_agent(ppo::AgentBundle& agent, const EvalSuite& suite,
                          const ExperimentConfig& cfg, bool randomized, std::uint64_t eval_seed,
                          bool record_trajectories) {
  const int n = static_cast<int>(suite.boxes.size());
  require(n > 0, "evaluate: empty suite");
  const bool vision = repr::is_vision(agent.strategy);

  std::vector<env::GraspEnv> envs;
  envs.reserve(n);
  for (int i = 0; i < n; ++i) {
    envs.emplace_back(cfg.env, cfg.arm);
    envs.back().reset_with_box(suite.boxes[i]);
  }

  // Per-episode streams: one physical-adaptation draw up front, then image
  // noise draws step by step.
  std::vector<Rng> ep_rngs;
  std::vector<render::AdaptationDraw> draws(n);
  const bool apply_rnd = randomized && vision;
  Rng root(eval_seed);
  for (int i = 0; i < n; ++i) {
    ep_rngs.push_back(root.fork(static_cast<std::uint64_t>(i)));
    if (apply_rnd) draws[i] = render::sample_adaptations(cfg.adapt, ep_rngs[i]);
  }

  EvalReport rep;
  const int obs_dim = repr::observation_dim(agent.strategy);
  const std::size_t img_sz = static_cast<std::size_t>(3) * repr::kImageSize * repr::kImageSize;

  std::vector<TrajectoryRow> traj;
  for (int t = 0; t < cfg.env.horizon; ++t) {
    nn::Tensor input({n, obs_dim});
    if (!vision) {
      for (int e = 0; e < n; ++e) {
        const env::NumericState s = envs[e].numeric_state();
        for (int k = 0; k < repr::kStateDim; ++k)
          input[static_cast<std::size_t>(e) * obs_dim + k] = static_cast<float>(s[k]);
      }
    } else {
      nn::Tensor imgs({n, 3, repr::kImageSize, repr::kImageSize});
#pragma omp parallel for schedule(static)
      for (int e = 0; e < n; ++e) {
        render::SceneSpec scene = render::make_scene(envs[e]);
        scene.camera = cfg.camera;
        if (apply_rnd) scene = render::apply_adaptations(scene, draws[e]);
        render::Image img = render::render(scene);
        if (apply_rnd) img = aug::augment(img, nullptr, cfg.augspec, ep_rngs[e]).augmented;
        nn::Tensor one = repr::image_to_tensor(img);
        std::copy(one.data.begin(), one.data.end(), imgs.data.begin() + e * img_sz);
      }
      repr::Encoder& enc = agent.strategy == repr::Strategy::vts ? agent.stack.vts.enc
                                                                 : agent.stack.encoder;
      nn::Tensor latent = enc.forward(imgs);
      input =
          agent.strategy == repr::Strategy::vts ? agent.stack.vts.head_forward(latent) : latent;
    }

    nn::Tensor mean = agent.policy.actor_forward(input);
#pragma omp parallel for schedule(static)
    for (int e = 0; e < n; ++e) {
      const Vec2 a{mean[static_cast<std::size_t>(e) * 2 + 0],
                   mean[static_cast<std::size_t>(e) * 2 + 1]};
      const Vec2 ee_before = envs[e].ee_position();
      const env::StepOutcome out = envs[e].step(a);
      if (record_trajectories) {
        TrajectoryRow row;
        row.episode = e;
        row.t = t;
        row.ee_x = ee_before.x;
        row.ee_y = ee_before.y;
        row.action_x = a.x;
        row.action_y = a.y;
        row.reward = out.reward;
        row.delta_x = out.delta.x;
        row.delta_y = out.delta.y;
#pragma omp critical
        traj.push_back(row);
      }
    }
  }

  rep = finish(suite, envs);
  if (record_trajectories) {
    std::sort(traj.begin(), traj.end(), [](const TrajectoryRow& a, const TrajectoryRow& b) {
      return a.episode != b.episode ? a.episode < b.episode : a.t < b.t;
    });
    rep.trajectories = std::move(traj);
  }
  return rep;
}

EvalReport evaluate_baseline(const EvalSuite& suite, const ExperimentConfig& cfg,
                             bool record_trajectories) {
  const int n = static_cast<int>(suite.boxes.size());
  std::vector<env::GraspEnv> envs;
  envs.reserve(n);
  for (int i = 0; i < n; ++i) {
    envs.emplace_back(cfg.env, cfg.arm);
    envs.back().reset_with_box(suite.boxes[i]);
  }

  std::vector<TrajectoryRow> traj;
  for (int t = 0; t < cfg.env.horizon; ++t) {
#pragma omp parallel for schedule(static)
    for (int e = 0; e < n; ++e) {
      const Vec2 a = baseline_policy(envs[e]);
      const Vec2 ee_before = envs[e].ee_position();
      const env::StepOutcome out = envs[e].step(a);
      if (record_trajectories) {
        TrajectoryRow row;
        row.episode = e;
        row.t = t;
        row.ee_x = ee_before.x;
        row.ee_y = ee_before.y;
        row.action_x = a.x;
        row.action_y = a.y;
        row.reward = out.reward;
        row.delta_x = out.delta.x;
        row.delta_y = out.delta.y;
#pragma omp critical
        traj.push_back(row);
      }
    }
  }

  EvalReport rep = finish(suite, envs);
  if (record_trajectories) {
    std::sort(traj.begin(), traj.end(), [](const TrajectoryRow& a, const TrajectoryRow& b) {
      return a.episode != b.episode ? a.episode < b.episode : a.t < b.t;
    });
    rep.trajectories = std::move(traj);
  }
  return rep;
}

}  // namespace pgrl::harness
