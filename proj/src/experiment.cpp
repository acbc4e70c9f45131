#include "pgrl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pgrl::harness {

namespace fs = std::filesystem;

const char* encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::ae: return "ae";
    case EncoderKind::igae: return "igae";
    case EncoderKind::vts: return "vts";
  }
  return "?";
}

EncoderKind encoder_kind_for(repr::Strategy s) {
  switch (s) {
    case repr::Strategy::ae: return EncoderKind::ae;
    case repr::Strategy::igae: return EncoderKind::igae;
    case repr::Strategy::vts: return EncoderKind::vts;
    default: fail("strategy has no pretrained encoder");
  }
}

repr::PretrainResult pretrain_encoder(const ExperimentConfig& cfg,
                                      const repr::PretrainDataset& ds, EncoderKind kind,
                                      const std::string& out_path,
                                      const std::string& metrics_csv) {
  std::ofstream csv;
  if (!metrics_csv.empty()) {
    csv.open(metrics_csv, std::ios::trunc);
    csv << "epoch,total_loss,rgb_loss,box_loss,gripper_loss,val_loss,val_box_iou,val_grip_iou,"
           "val_delta_mse,val_joint_mse\n";
    csv.precision(10);
  }
  repr::PretrainOptions opt;
  opt.epochs = cfg.pretrain_epochs;
  opt.lr = cfg.pretrain_lr;
  opt.batch_size = cfg.pretrain_batch;
  opt.val_fraction = cfg.pretrain_val_fraction;
  opt.seed = cfg.pretrain_seed;
  opt.on_epoch = [&](const repr::EpochLog& l) {
    if (csv.is_open())
      csv << l.epoch << "," << l.total << "," << l.rgb << "," << l.box << "," << l.gripper
          << "," << l.val_total << "," << l.val_box_iou << "," << l.val_grip_iou << ","
          << l.val_delta_mse << "," << l.val_joint_mse << "\n"
          << std::flush;
  };

  nn::Checkpoint ck;
  ck.config_hash = cfg.hash();
  repr::PretrainResult res;
  if (kind == EncoderKind::vts) {
    repr::VtsModel model;
    model.init(cfg.pretrain_seed);
    res = repr::pretrain_vts(model, ds, opt);
    nn::ParamList<float> params;
    model.params(params);
    repr::save_params(ck, params);
  } else {
    repr::Autoencoder model;
    model.init(kind == EncoderKind::igae, cfg.pretrain_seed);
    repr::AELossWeights w = cfg.ae_weights;
    if (kind == EncoderKind::ae) w.box = w.gripper = 0.0;
    res = repr::pretrain_autoencoder(model, ds, w, opt);
    nn::ParamList<float> params;
    model.params(params);
    repr::save_params(ck, params);
  }
  ck.save(out_path);
  return res;
}

void load_encoder(ppo::AgentBundle& agent, const std::string& path) {
  require(!path.empty(), "load_encoder: empty path");
  nn::Checkpoint ck = nn::Checkpoint::load(path);
  nn::ParamList<float> params;
  if (agent.strategy == repr::Strategy::vts)
    agent.stack.vts.params(params);
  else
    agent.stack.encoder.params(params);
  repr::load_params(ck, params);
}

namespace {

void write_metrics_header(std::ofstream& os) {
  os << "iteration,env_steps,mean_episode_return,policy_loss,value_loss,entropy,"
        "clip_fraction,approx_kl,eval_success_rate,wall_seconds\n";
}

void write_metrics_row(std::ofstream& os, const ppo::IterationLog& log) {
  os << log.iteration << "," << log.env_steps << ",";
  if (log.mean_episode_return) os << *log.mean_episode_return;
  os << "," << log.stats.policy_loss << "," << log.stats.value_loss << ","
     << log.stats.entropy << "," << log.stats.clip_fraction << "," << log.stats.approx_kl
     << ",";
  if (log.eval_success_rate) os << *log.eval_success_rate;
  os << "," << log.wall_seconds << "\n" << std::flush;
}

ppo::Trainer make_trainer(const ExperimentConfig& cfg, repr::Strategy strategy) {
  ppo::Trainer tr;
  tr.strategy = strategy;
  tr.cfg = cfg.ppo_for(strategy);
  tr.env_cfg = cfg.env;
  tr.arm_model = cfg.arm;
  tr.config_hash = cfg.hash();
  return tr;
}

}  // namespace

TrainOutcome train_strategy_seed(const ExperimentConfig& cfg, repr::Strategy strategy,
                                 std::uint64_t seed, const std::string& dir,
                                 const std::string& encoder_path,
                                 const std::string& resume_checkpoint) {
  fs::create_directories(fs::path(dir) / "checkpoints");
  ppo::Trainer tr = make_trainer(cfg, strategy);
  tr.checkpoint_dir = (fs::path(dir) / "checkpoints").string();
  tr.init(seed);
  tr.agent.stack.camera = cfg.camera;
  if (repr::uses_frozen_encoder(strategy)) load_encoder(tr.agent, encoder_path);

  const bool resuming = !resume_checkpoint.empty();
  if (resuming) tr.load_checkpoint(resume_checkpoint);

  TrainOutcome out;
  out.metrics_csv = (fs::path(dir) / "metrics.csv").string();
  std::ofstream csv(out.metrics_csv, resuming ? std::ios::app : std::ios::trunc);
  require(csv.good(), "train: cannot write metrics csv");
  csv.precision(10);
  if (!resuming) write_metrics_header(csv);

  std::optional<EvalSuite> quick_suite;
  if (cfg.eval_every_iters > 0) {
    quick_suite = EvalSuite::generate(cfg.env, cfg.eval_boxes, cfg.eval_seed);
    tr.eval_fn = [&](ppo::AgentBundle& agent) {
      return evaluate_agent(agent, *quick_suite, cfg, false, cfg.eval_seed).success_rate;
    };
  }
  double wall = 0;
  tr.on_iteration = [&](const ppo::IterationLog& log) {
    write_metrics_row(csv, log);
    wall = log.wall_seconds;
  };

  tr.run();
  out.checkpoints = tr.saved;
  out.wall_seconds = wall;
  return out;
}

SeedResult sweep_checkpoints(const ExperimentConfig& cfg, repr::Strategy strategy,
                             std::uint64_t seed, const std::string& dir,
                             const EvalSuite& suite, const std::string& encoder_path) {
  SeedResult res;
  res.seed = seed;

  ppo::AgentBundle agent;
  agent.init(strategy, /*seed=*/0);  // weights come from checkpoints
  agent.stack.camera = cfg.camera;
  if (repr::uses_frozen_encoder(strategy)) load_encoder(agent, encoder_path);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fs::path(dir) / "checkpoints"))
    if (e.path().extension() == ".bin") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), "sweep: no checkpoints in '" + dir + "'");

  const std::string sweep_csv = (fs::path(dir) / "eval_checkpoints.csv").string();
  std::ofstream os(sweep_csv, std::ios::trunc);
  os << "index,env_steps,ideal_success_rate\n";
  os.precision(10);

  const long ckpt_stride =
      std::max<long>(1, cfg.ppo_for(strategy).total_steps / cfg.checkpoint_count);

  double best = -1.0;
  std::string best_path;
  std::uint64_t prev_checksum = 0;
  double prev_rate = 0;
  for (const auto& f : files) {
    nn::Checkpoint ck = nn::Checkpoint::load(f.string());
    require(ck.config_hash == cfg.hash(), "sweep: checkpoint config hash mismatch");
    nn::ParamList<float> params;
    agent.policy.params(params);
    if (strategy == repr::Strategy::end_to_end) agent.stack.encoder.params(params);
    repr::load_params(ck, params);

    CheckpointEval ce;
    // checkpoint index from the filename suffix
    const std::string stem = f.stem().string();
    ce.index = std::stoi(stem.substr(stem.find_last_of('_') + 1));
    ce.env_steps = ce.index * ckpt_stride;

    // Several checkpoint slots can fall inside one training iteration and
    // then hold identical weights; evaluate each distinct policy once.
    const std::uint64_t sum = repr::params_checksum(params);
    if (sum == prev_checksum && !res.sweep.empty()) {
      ce.ideal_rate = prev_rate;
    } else {
      ce.ideal_rate = evaluate_agent(agent, suite, cfg, false, cfg.eval_seed).success_rate;
      prev_checksum = sum;
      prev_rate = ce.ideal_rate;
    }
    res.sweep.push_back(ce);
    os << ce.index << "," << ce.env_steps << "," << ce.ideal_rate << "\n";

    if (ce.ideal_rate > best) {
      best = ce.ideal_rate;
      res.best_index = ce.index;
      res.best_env_steps = ce.env_steps;
      best_path = f.string();
    }
  }
  res.best_ideal = best;

  res.steps_to_90 = cfg.ppo_for(strategy).total_steps;
  for (const auto& ce : res.sweep)
    if (ce.ideal_rate >= 0.90) {
      res.steps_to_90 = ce.env_steps;
      break;
    }

  // Re-evaluate the best checkpoint: outcome files, trajectories, and the
  // randomized-simulation rate for vision strategies.
  {
    nn::Checkpoint ck = nn::Checkpoint::load(best_path);
    nn::ParamList<float> params;
    agent.policy.params(params);
    if (strategy == repr::Strategy::end_to_end) agent.stack.encoder.params(params);
    repr::load_params(ck, params);

    EvalReport ideal = evaluate_agent(agent, suite, cfg, false, cfg.eval_seed, true);
    ideal.write_outcomes_csv((fs::path(dir) / "best_ideal_outcomes.csv").string());
    ideal.write_trajectories_csv((fs::path(dir) / "best_ideal_trajectories.csv").string());

    if (repr::is_vision(strategy)) {
      EvalReport rnd = evaluate_agent(agent, suite, cfg, true, cfg.eval_seed);
      rnd.write_outcomes_csv((fs::path(dir) / "best_randomized_outcomes.csv").string());
      res.best_randomized = rnd.success_rate;
    }
  }

  std::ofstream sum((fs::path(dir) / "seed_summary.csv").string(), std::ios::trunc);
  sum << "seed,best_index,best_env_steps,best_ideal,best_randomized,steps_to_90\n";
  sum.precision(10);
  sum << seed << "," << res.best_index << "," << res.best_env_steps << "," << res.best_ideal
      << ",";
  if (res.best_randomized) sum << *res.best_randomized;
  sum << "," << res.steps_to_90 << "\n";
  return res;
}

StrategyResult summarize(repr::Strategy s, std::vector<SeedResult> seeds) {
  StrategyResult r;
  r.strategy = s;
  r.seeds = std::move(seeds);
  const int n = static_cast<int>(r.seeds.size());
  double mean = 0, best = 0;
  bool any_rnd = false;
  double best_rnd = 0;
  for (const auto& sr : r.seeds) {
    mean += sr.best_ideal;
    best = std::max(best, sr.best_ideal);
    if (sr.best_randomized) {
      any_rnd = true;
      best_rnd = std::max(best_rnd, *sr.best_randomized);
    }
  }
  mean /= n;
  double var = 0;
  for (const auto& sr : r.seeds) var += (sr.best_ideal - mean) * (sr.best_ideal - mean);
  r.mean_best_ideal = mean;
  r.std_best_ideal = n > 1 ? std::sqrt(var / n) : 0.0;
  r.best_ideal = best;
  if (any_rnd) r.best_randomized = best_rnd;
  return r;
}

std::uint64_t pipeline_cache_key(const ExperimentConfig& cfg) {
  std::istringstream is(cfg.canonical());
  std::string line, filtered;
  while (std::getline(is, line)) {
    for (const char* prefix : {"env.", "arm.", "camera.", "aug.", "ae.", "pretrain."})
      if (line.rfind(prefix, 0) == 0) {
        filtered += line + "\n";
        break;
      }
  }
  return fnv1a(filtered);
}

namespace {

std::string hex16(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Minimal polyline raster onto a white canvas; the CSV next to it is the
// actual contract.
struct CurvePlot {
  render::Image img{500, 800};
  double x_max = 1, y_max = 1;

  CurvePlot(double xm) : x_max(std::max(1.0, xm)) {
    std::fill(img.px.begin(), img.px.end(), 1.0f);
    // axes
    for (int x = 60; x < 780; ++x) set(460, x, 0.2f, 0.2f, 0.2f);
    for (int y = 20; y <= 460; ++y) set(y, 60, 0.2f, 0.2f, 0.2f);
    for (double frac : {0.25, 0.5, 0.75, 1.0}) {
      const int y = static_cast<int>(460 - frac * 420);
      for (int x = 60; x < 780; x += 4) set(y, x, 0.85f, 0.85f, 0.85f);
    }
  }

  void set(int y, int x, float r, float g, float b) {
    if (y < 0 || y >= img.h || x < 0 || x >= img.w) return;
    float* p = img.at(y, x);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  void point(double xv, double yv, const float c[3]) {
    const int x = static_cast<int>(60 + (xv / x_max) * 715);
    const int y = static_cast<int>(460 - yv * 420);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) set(y + dy, x + dx, c[0], c[1], c[2]);
  }

  void line(double x0, double y0, double x1, double y1, const float c[3]) {
    const int steps = 200;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const int x = static_cast<int>(60 + ((x0 + t * (x1 - x0)) / x_max) * 715);
      const int y = static_cast<int>(460 - (y0 + t * (y1 - y0)) * 420);
      set(y, x, c[0], c[1], c[2]);
    }
  }
};

const float kCurveColors[6][3] = {{0.85f, 0.20f, 0.10f}, {0.95f, 0.55f, 0.10f},
                                  {0.20f, 0.55f, 0.90f}, {0.10f, 0.65f, 0.25f},
                                  {0.55f, 0.30f, 0.75f}, {0.35f, 0.35f, 0.35f}};

}  // namespace

void write_success_curves(const std::string& run_dir,
                          const std::vector<StrategyResult>& results) {
  const std::string csv_path = (fs::path(run_dir) / "success_curves.csv").string();
  std::ofstream os(csv_path, std::ios::trunc);
  os << "strategy,seed,checkpoint_index,env_steps,success_rate\n";
  os.precision(10);
  double x_max = 1;
  for (const auto& r : results)
    for (const auto& sr : r.seeds)
      for (const auto& ce : sr.sweep) {
        os << repr::strategy_name(r.strategy) << "," << sr.seed << "," << ce.index << ","
           << ce.env_steps << "," << ce.ideal_rate << "\n";
        x_max = std::max(x_max, static_cast<double>(ce.env_steps));
      }

  CurvePlot plot(x_max);
  for (std::size_t si = 0; si < results.size(); ++si) {
    const auto& r = results[si];
    if (r.seeds.empty()) continue;
    // mean over seeds per checkpoint index
    const std::size_t n_ck = r.seeds[0].sweep.size();
    double prev_x = 0, prev_y = 0;
    bool have_prev = false;
    for (std::size_t k = 0; k < n_ck; ++k) {
      double y = 0;
      int cnt = 0;
      double x = 0;
      for (const auto& sr : r.seeds)
        if (k < sr.sweep.size()) {
          y += sr.sweep[k].ideal_rate;
          x = sr.sweep[k].env_steps;
          ++cnt;
        }
      if (!cnt) continue;
      y /= cnt;
      const float* c = kCurveColors[si % 6];
      plot.point(x, y, c);
      if (have_prev) plot.line(prev_x, prev_y, x, y, c);
      prev_x = x;
      prev_y = y;
      have_prev = true;
    }
    // legend swatch
    const float* c = kCurveColors[si % 6];
    for (int y = 30 + static_cast<int>(si) * 14; y < 40 + static_cast<int>(si) * 14; ++y)
      for (int x = 700; x < 760; ++x) plot.set(y, x, c[0], c[1], c[2]);
  }
  write_ppm((fs::path(run_dir) / "success_curves.ppm").string(), plot.img);
}

void write_report(const std::string& run_dir, double baseline_rate,
                  const std::vector<StrategyResult>& results) {
  std::ofstream csv((fs::path(run_dir) / "report.csv").string(), std::ios::trunc);
  {
    std::ifstream boxes(fs::path(run_dir) / "eval_boxes.csv");
    if (boxes.good()) {
      EvalSuite s = EvalSuite::load_csv((fs::path(run_dir) / "eval_boxes.csv").string());
      char hash[24];
      std::snprintf(hash, sizeof(hash), "%016llx",
                    static_cast<unsigned long long>(s.content_hash()));
      csv << "# eval_boxes_hash=" << hash << "\n";
    }
  }
  csv << "strategy,avg_ideal,std_ideal,best_ideal,best_randomized\n";
  csv.precision(6);
  csv << "baseline," << baseline_rate << ",0," << baseline_rate << ",\n";
  for (const auto& r : results) {
    csv << repr::strategy_name(r.strategy) << "," << r.mean_best_ideal << ","
        << r.std_best_ideal << "," << r.best_ideal << ",";
    if (r.best_randomized) csv << *r.best_randomized;
    csv << "\n";
  }

  std::ofstream txt((fs::path(run_dir) / "report.txt").string(), std::ios::trunc);
  txt << "strategy     avg ideal        best (idl)  best (rnd)\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %5.1f%% +- %4.1f   %5.1f%%      %s\n", "baseline",
                100 * baseline_rate, 0.0, 100 * baseline_rate, "n/a");
  txt << buf;
  for (const auto& r : results) {
    std::string rnd = "n/a";
    if (r.best_randomized) {
      char b2[32];
      std::snprintf(b2, sizeof(b2), "%5.1f%%", 100 * *r.best_randomized);
      rnd = b2;
    }
    std::snprintf(buf, sizeof(buf), "%-12s %5.1f%% +- %4.1f   %5.1f%%      %s\n",
                  repr::strategy_name(r.strategy), 100 * r.mean_best_ideal,
                  100 * r.std_best_ideal, 100 * r.best_ideal, rnd.c_str());
    txt << buf;
  }
}

std::string run_experiment(const ExperimentConfig& cfg, std::string out_dir) {
  if (out_dir.empty())
    out_dir = run_root() + "/run_" + hex16(cfg.hash()).substr(0, 10);
  fs::create_directories(out_dir);
  cfg.save((fs::path(out_dir) / "config.cfg").string());

  auto stage = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      fail("stage '" + name + "' failed: " + e.what() +
           " (completed stages are cached; rerun to resume)");
    }
  };

  EvalSuite suite;
  stage("eval-suite", [&] {
    suite = EvalSuite::generate(cfg.env, cfg.eval_boxes, cfg.eval_seed);
    suite.save_csv((fs::path(out_dir) / "eval_boxes.csv").string());
  });

  double baseline_rate = 0;
  stage("baseline", [&] {
    EvalReport rep = evaluate_baseline(suite, cfg, true);
    rep.write_outcomes_csv((fs::path(out_dir) / "baseline_outcomes.csv").string());
    rep.write_trajectories_csv((fs::path(out_dir) / "baseline_trajectories.csv").string());
    baseline_rate = rep.success_rate;
  });

  const bool needs_vision = std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                                        [](repr::Strategy s) { return repr::is_vision(s); });
  const bool needs_pretrain =
      std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                  [](repr::Strategy s) { return repr::uses_frozen_encoder(s); });

  const std::string cache_key = hex16(pipeline_cache_key(cfg)).substr(0, 12);
  const std::string dataset_dir = run_root() + "/datasets/" + cache_key;
  repr::PretrainDataset dataset;
  if (needs_pretrain) {
    stage("gen-dataset", [&] {
      if (dataset_complete(dataset_dir)) {
        dataset = load_dataset(dataset_dir);
      } else {
        dataset = gen_dataset(cfg, cfg.pretrain_samples, cfg.pretrain_seed);
        write_dataset(dataset, dataset_dir, cfg.pretrain_seed, cfg.hash());
      }
      std::ofstream((fs::path(out_dir) / "dataset_hash.txt").string())
          << cache_key << " " << hex16(dataset_hash(dataset)) << "\n";
    });
  }

  std::map<std::string, std::string> encoder_paths;
  if (needs_pretrain) {
    fs::create_directories(run_root() + "/encoders");
    for (repr::Strategy s : cfg.strategies) {
      if (!repr::uses_frozen_encoder(s)) continue;
      const EncoderKind kind = encoder_kind_for(s);
      const std::string name = encoder_kind_name(kind);
      if (encoder_paths.count(name)) continue;
      const std::string path = run_root() + "/encoders/" + cache_key + "_" + name + ".bin";
      const std::string metrics =
          (fs::path(out_dir) / ("pretrain_" + name + ".csv")).string();
      stage("pretrain-" + name, [&] {
        if (!fs::exists(path)) pretrain_encoder(cfg, dataset, kind, path, metrics);
      });
      encoder_paths[name] = path;
    }
  }
  (void)needs_vision;

  std::vector<StrategyResult> results;
  for (repr::Strategy s : cfg.strategies) {
    std::vector<SeedResult> seed_results;
    std::string encoder_path;
    if (repr::uses_frozen_encoder(s))
      encoder_path = encoder_paths.at(encoder_kind_name(encoder_kind_for(s)));
    for (std::uint64_t seed : cfg.seeds) {
      const std::string dir =
          (fs::path(out_dir) / repr::strategy_name(s) / ("seed" + std::to_string(seed)))
              .string();
      stage(std::string("train[") + repr::strategy_name(s) + ",seed" + std::to_string(seed) +
                "]",
            [&] { train_strategy_seed(cfg, s, seed, dir, encoder_path); });
      stage(std::string("eval[") + repr::strategy_name(s) + ",seed" + std::to_string(seed) +
                "]",
            [&] { seed_results.push_back(sweep_checkpoints(cfg, s, seed, dir, suite,
                                                           encoder_path)); });
    }
    results.push_back(summarize(s, std::move(seed_results)));
  }

  stage("report", [&] { write_report(out_dir, baseline_rate, results); });
  stage("plot", [&] { write_success_curves(out_dir, results); });
  return out_dir;
}

}  // namespace pgrl::harness
