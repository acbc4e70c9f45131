#pragma once

#include <optional>

#include "pgrl/dataset.hpp"
#include "pgrl/evalsuite.hpp"

namespace pgrl::harness {

enum class EncoderKind { ae, igae, vts };
const char* encoder_kind_name(EncoderKind k);
EncoderKind encoder_kind_for(repr::Strategy s);  // frozen strategies only

// Pretrains one encoder on the dataset and writes it (encoder + decoder
// heads) as a checkpoint, with per-epoch metrics appended to metrics_csv.
repr::PretrainResult pretrain_encoder(const ExperimentConfig& cfg,
                                      const repr::PretrainDataset& ds, EncoderKind kind,
                                      const std::string& out_path,
                                      const std::string& metrics_csv);

// Loads pretrained encoder weights (and the VtS head) into the agent bundle.
void load_encoder(ppo::AgentBundle& agent, const std::string& path);

struct TrainOutcome {
  std::vector<ppo::CheckpointInfo> checkpoints;
  std::string metrics_csv;
  double wall_seconds = 0;
};

// One training run: metrics.csv plus evenly spaced checkpoints under
// dir/checkpoints. encoder_path supplies frozen weights for vts/ae/igae.
TrainOutcome train_strategy_seed(const ExperimentConfig& cfg, repr::Strategy strategy,
                                 std::uint64_t seed, const std::string& dir,
                                 const std::string& encoder_path = "",
                                 const std::string& resume_checkpoint = "");

struct CheckpointEval {
  int index = 0;
  long env_steps = 0;
  double ideal_rate = 0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<CheckpointEval> sweep;
  int best_index = 0;
  long best_env_steps = 0;
  double best_ideal = 0;
  std::optional<double> best_randomized;  // vision strategies only
  long steps_to_90 = 0;                   // total budget when never reached
};

// Evaluates every saved checkpoint on the suite (ideal sim), selects the
// best, re-evaluates it under randomized sim for vision strategies, and
// writes eval_checkpoints.csv + outcome/trajectory files into dir.
SeedResult sweep_checkpoints(const ExperimentConfig& cfg, repr::Strategy strategy,
                             std::uint64_t seed, const std::string& dir,
                             const EvalSuite& suite, const std::string& encoder_path = "");

struct StrategyResult {
  repr::Strategy strategy = repr::Strategy::state;
  std::vector<SeedResult> seeds;
  double mean_best_ideal = 0;
  double std_best_ideal = 0;
  double best_ideal = 0;
  std::optional<double> best_randomized;
};

StrategyResult summarize(repr::Strategy s, std::vector<SeedResult> seeds);

// Full pipeline: dataset (cached by content key) -> pretraining (cached) ->
// train/sweep per strategy and seed -> report + success-curve plot.
// Returns the run directory.
std::string run_experiment(const ExperimentConfig& cfg, std::string out_dir = "");

void write_report(const std::string& run_dir, double baseline_rate,
                  const std::vector<StrategyResult>& results);
void write_success_curves(const std::string& run_dir,
                          const std::vector<StrategyResult>& results);

// Dataset/encoder cache key: covers only the configuration that shapes their
// content (env, arm, camera, augmentation, pretraining).
std::uint64_t pipeline_cache_key(const ExperimentConfig& cfg);

}  // namespace pgrl::harness
