#pragma once

#include "pgrl/config.hpp"

namespace pgrl::harness {

// Samples (arm config, box) pairs, renders image + masks, augments, and
// records the scaled numeric state. Arm configs come from an IK solve toward
// a uniformly drawn workspace point plus per-joint jitter, so the gripper is
// in view and the pose distribution matches rollouts.
repr::PretrainDataset gen_dataset(const ExperimentConfig& cfg, int n, std::uint64_t seed);

// On-disk layout: item images as 8-bit PPM/PGM plus manifest.json listing
// every tuple. The manifest is written last (via rename), so a directory
// with a manifest is complete.
void write_dataset(const repr::PretrainDataset& ds, const std::string& dir,
                   std::uint64_t seed, std::uint64_t config_hash);
repr::PretrainDataset load_dataset(const std::string& dir);
bool dataset_complete(const std::string& dir);

std::uint64_t dataset_hash(const repr::PretrainDataset& ds);

}  // namespace pgrl::harness
