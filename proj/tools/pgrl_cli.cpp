#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include "pgrl/experiment.hpp"

namespace fs = std::filesystem;
using namespace pgrl;
using harness::ExperimentConfig;

namespace {

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig::defaults();
  return ExperimentConfig::load(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar antipodal grasping benchmark: simulator, PPO trainer, "
               "state-representation agents and evaluation tools"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config,-c", config_path, "experiment config file (key = value)")
      ->capture_default_str();

  // ---- gen-dataset ----
  auto* gen = app.add_subcommand("gen-dataset", "render a pretraining dataset");
  std::string gen_out = "dataset";
  int gen_n = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out,-o", gen_out, "output directory");
  gen->add_option("--n", gen_n, "sample count (default: pretrain.samples)");
  gen->add_option("--seed", gen_seed, "seed (default: pretrain.seed)");

  // ---- pretrain ----
  auto* pre = app.add_subcommand("pretrain", "train an encoder (ae | igae | vts)");
  std::string pre_kind, pre_dataset, pre_out = "encoder.bin", pre_metrics;
  pre->add_option("kind", pre_kind, "ae | igae | vts")->required();
  pre->add_option("--dataset,-d", pre_dataset, "dataset directory")->required();
  pre->add_option("--out,-o", pre_out, "output checkpoint");
  pre->add_option("--metrics", pre_metrics, "per-epoch metrics csv");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train one strategy with PPO");
  std::string train_strategy, train_dir = "train_run", train_encoder, train_resume;
  std::uint64_t train_seed = 1;
  train->add_option("strategy", train_strategy, "state|state-rnd|vts|igae|ae|ete")->required();
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--run-dir", train_dir, "output directory");
  train->add_option("--encoder", train_encoder, "pretrained encoder (vts/igae/ae)");
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the box suite");
  std::string ev_strategy, ev_checkpoint, ev_encoder, ev_boxes, ev_out = "eval";
  bool ev_randomized = false, ev_traj = false;
  ev->add_option("strategy", ev_strategy)->required();
  ev->add_option("--checkpoint", ev_checkpoint, "policy checkpoint")->required();
  ev->add_option("--encoder", ev_encoder, "pretrained encoder (vts/igae/ae)");
  ev->add_option("--boxes", ev_boxes, "eval boxes csv (default: generated from config)");
  ev->add_flag("--randomized", ev_randomized, "randomized-simulation evaluation");
  ev->add_flag("--trajectories", ev_traj, "write per-step trajectory log");
  ev->add_option("--out", ev_out, "output file prefix");

  // ---- baseline ----
  auto* base = app.add_subcommand("baseline", "run the time-optimal baseline on the suite");
  std::string base_boxes, base_out = "baseline";
  base->add_option("--boxes", base_boxes, "eval boxes csv");
  base->add_option("--out", base_out, "output file prefix");

  // ---- report / plot ----
  auto* rep = app.add_subcommand("report", "rebuild report.csv/txt from a run directory");
  std::string rep_dir;
  rep->add_option("run_dir", rep_dir)->required();
  auto* plot = app.add_subcommand("plot", "rebuild success-curve csv/image from a run dir");
  std::string plot_dir;
  plot->add_option("run_dir", plot_dir)->required();

  // ---- run ----
  auto* run = app.add_subcommand("run", "full experiment: dataset, pretrain, train, eval");
  std::string run_out;
  run->add_option("--out", run_out, "run directory (default under $PGRL_RUN_ROOT)");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path);

    if (*gen) {
      const int n = gen_n > 0 ? gen_n : cfg.pretrain_samples;
      const std::uint64_t seed = gen_seed ? gen_seed : cfg.pretrain_seed;
      repr::PretrainDataset ds = harness::gen_dataset(cfg, n, seed);
      harness::write_dataset(ds, gen_out, seed, cfg.hash());
      std::printf("wrote %d items to %s\n", n, gen_out.c_str());
    } else if (*pre) {
      repr::PretrainDataset ds = harness::load_dataset(pre_dataset);
      harness::EncoderKind kind = pre_kind == "ae"     ? harness::EncoderKind::ae
                                  : pre_kind == "igae" ? harness::EncoderKind::igae
                                  : pre_kind == "vts"
                                      ? harness::EncoderKind::vts
                                      : throw std::runtime_error("pretrain kind: ae|igae|vts");
      repr::PretrainResult res = harness::pretrain_encoder(cfg, ds, kind, pre_out, pre_metrics);
      std::printf("pretrained %s: best epoch %d, best loss %.6f -> %s\n", pre_kind.c_str(),
                  res.best_epoch, res.best_loss, pre_out.c_str());
    } else if (*train) {
      repr::Strategy s = repr::parse_strategy(train_strategy);
      harness::TrainOutcome out =
          harness::train_strategy_seed(cfg, s, train_seed, train_dir, train_encoder,
                                       train_resume);
      std::printf("trained %s seed %llu: %zu checkpoints, %.1f s\n", train_strategy.c_str(),
                  static_cast<unsigned long long>(train_seed), out.checkpoints.size(),
                  out.wall_seconds);
    } else if (*ev) {
      repr::Strategy s = repr::parse_strategy(ev_strategy);
      harness::EvalSuite suite =
          ev_boxes.empty() ? harness::EvalSuite::generate(cfg.env, cfg.eval_boxes, cfg.eval_seed)
                           : harness::EvalSuite::load_csv(ev_boxes);
      ppo::AgentBundle agent;
      agent.init(s, 0);
      agent.stack.camera = cfg.camera;
      if (repr::uses_frozen_encoder(s)) harness::load_encoder(agent, ev_encoder);
      nn::Checkpoint ck = nn::Checkpoint::load(ev_checkpoint);
      require(ck.config_hash == cfg.hash(), "eval: checkpoint/config hash mismatch");
      nn::ParamList<float> params;
      agent.policy.params(params);
      if (s == repr::Strategy::end_to_end) agent.stack.encoder.params(params);
      repr::load_params(ck, params);
      harness::EvalReport r =
          harness::evaluate_agent(agent, suite, cfg, ev_randomized, cfg.eval_seed, ev_traj);
      r.write_outcomes_csv(ev_out + "_outcomes.csv");
      if (ev_traj) r.write_trajectories_csv(ev_out + "_trajectories.csv");
      std::printf("success rate: %.1f%% (%zu boxes)\n", 100.0 * r.success_rate,
                  suite.boxes.size());
    } else if (*base) {
      harness::EvalSuite suite =
          base_boxes.empty()
              ? harness::EvalSuite::generate(cfg.env, cfg.eval_boxes, cfg.eval_seed)
              : harness::EvalSuite::load_csv(base_boxes);
      harness::EvalReport r = harness::evaluate_baseline(suite, cfg, true);
      r.write_outcomes_csv(base_out + "_outcomes.csv");
      r.write_trajectories_csv(base_out + "_trajectories.csv");
      std::printf("baseline success rate: %.1f%% (%zu boxes)\n", 100.0 * r.success_rate,
                  suite.boxes.size());
    } else if (*rep || *plot) {
      // Rebuild summaries from the per-seed sweep files already on disk.
      const std::string dir = *rep ? rep_dir : plot_dir;
      ExperimentConfig run_cfg = ExperimentConfig::load(dir + "/config.cfg");
      std::vector<harness::StrategyResult> results;
      for (repr::Strategy s : run_cfg.strategies) {
        std::vector<harness::SeedResult> seeds;
        for (std::uint64_t seed : run_cfg.seeds) {
          const fs::path sdir =
              fs::path(dir) / repr::strategy_name(s) / ("seed" + std::to_string(seed));
          std::ifstream sweep(sdir / "eval_checkpoints.csv");
          if (!sweep.good()) continue;
          harness::SeedResult sr;
          sr.seed = seed;
          std::string line;
          std::getline(sweep, line);
          double best = -1;
          while (std::getline(sweep, line)) {
            harness::CheckpointEval ce;
            if (std::sscanf(line.c_str(), "%d,%ld,%lf", &ce.index, &ce.env_steps,
                            &ce.ideal_rate) != 3)
              continue;
            sr.sweep.push_back(ce);
            if (ce.ideal_rate > best) {
              best = ce.ideal_rate;
              sr.best_index = ce.index;
              sr.best_env_steps = ce.env_steps;
            }
          }
          sr.best_ideal = best;
          std::ifstream sum(sdir / "seed_summary.csv");
          if (sum.good()) {
            std::getline(sum, line);
            if (std::getline(sum, line)) {
              double rnd;
              long s90;
              unsigned long long sd;
              int bi;
              long bs;
              double bi_rate;
              if (std::sscanf(line.c_str(), "%llu,%d,%ld,%lf,%lf,%ld", &sd, &bi, &bs, &bi_rate,
                              &rnd, &s90) == 6)
                sr.best_randomized = rnd;
            }
          }
          seeds.push_back(std::move(sr));
        }
        if (!seeds.empty()) results.push_back(harness::summarize(s, std::move(seeds)));
      }
      if (*rep) {
        double baseline_rate = 1.0;
        harness::EvalSuite suite = harness::EvalSuite::load_csv(dir + "/eval_boxes.csv");
        baseline_rate = harness::evaluate_baseline(suite, run_cfg).success_rate;
        harness::write_report(dir, baseline_rate, results);
        std::printf("report written to %s/report.{csv,txt}\n", dir.c_str());
      } else {
        harness::write_success_curves(dir, results);
        std::printf("curves written to %s/success_curves.{csv,ppm}\n", dir.c_str());
      }
    } else if (*run) {
      const std::string dir = harness::run_experiment(cfg, run_out);
      std::printf("run complete: %s\n", dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
