#pragma once

#include <array>
#include <functional>
#include <string>

#include "pgrl/augment.hpp"
#include "pgrl/checkpoint.hpp"
#include "pgrl/env.hpp"
#include "pgrl/layers.hpp"
#include "pgrl/scene.hpp"

namespace pgrl::repr {

inline constexpr int kLatentDim = 128;
inline constexpr int kImageSize = 64;
inline constexpr int kStateDim = 9;

// Conv stem (stride 2, 16 ch) -> two residual blocks (16->32->64, stride 2
// each) -> 64 maps at 8x8 -> spatial softmax -> 128-d latent in [-1,1].
struct ResBlock {
  nn::Conv2d conv1, conv2, skip;
  nn::Relu relu1, relu2;

  void init(const std::string& name, int c_in, int c_out, std::uint64_t seed);
  nn::Tensor forward(const nn::Tensor& x);
  nn::Tensor backward(const nn::Tensor& dy);
  void params(nn::ParamList<float>& list);
};

struct Encoder {
  nn::Conv2d stem;
  nn::Relu stem_relu;
  ResBlock block1, block2;
  nn::SpatialSoftmax ssm;

  void init(std::uint64_t seed);
  nn::Tensor forward(const nn::Tensor& imgs);  // [N,3,64,64] -> [N,128]
  nn::Tensor backward(const nn::Tensor& dlatent);
  void params(nn::ParamList<float>& list);
};

// Decoder: shared dense re-projection + first upsampling stage, then one
// branch per head (rgb / box mask / gripper mask).
struct DecoderStage1 {
  nn::Dense fc;
  nn::Relu relu0;
  nn::TConv2d up1;
  nn::Relu relu1;

  void init(std::uint64_t seed);
  nn::Tensor forward(const nn::Tensor& latent);  // [N,128] -> [N,32,16,16]
  nn::Tensor backward(const nn::Tensor& dy);
  void params(nn::ParamList<float>& list);
};

struct DecoderBranch {
  nn::TConv2d up2, up3;
  nn::Relu relu2;

  void init(const std::string& name, int out_ch, std::uint64_t seed);
  nn::Tensor forward(const nn::Tensor& x);  // [N,32,16,16] -> [N,out,64,64]
  nn::Tensor backward(const nn::Tensor& dy);
  void params(nn::ParamList<float>& list);
};

struct AELossWeights {
  double rgb = 1.0;      // MSE head
  double box = 10.0;     // BCE head
  double gripper = 20.0; // BCE head
};

// Denoising autoencoder; with_masks selects IGAE (box + gripper heads) vs
// the vanilla RGB-only variant.
struct Autoencoder {
  Encoder enc;
  DecoderStage1 stage1;
  DecoderBranch rgb_branch;
  nn::Sigmoid rgb_act;
  DecoderBranch box_branch, grip_branch;
  bool with_masks = false;

  void init(bool masks, std::uint64_t seed);
  void params(nn::ParamList<float>& list);
};

// Backbone + 4-layer MLP (64, 64, 32, output) predicting the numeric state.
struct VtsModel {
  Encoder enc;
  nn::Dense fc1, fc2, fc3, out;
  nn::Relu r1, r2, r3;

  void init(std::uint64_t seed);
  nn::Tensor head_forward(const nn::Tensor& latent);
  nn::Tensor head_backward(const nn::Tensor& dy);
  nn::Tensor forward(const nn::Tensor& imgs);
  void params(nn::ParamList<float>& list);
  void head_params(nn::ParamList<float>& list);
};

// Dataset items are stored quantized (8-bit) to keep memory flat; tensors
// are materialized per batch.
struct PretrainItem {
  std::vector<std::uint8_t> augmented;  // HWC, 64*64*3
  std::vector<std::uint8_t> clean;
  std::vector<std::uint8_t> box_mask;   // {0,1}, 64*64
  std::vector<std::uint8_t> grip_mask;
  std::array<float, kStateDim> state{};
};

using PretrainDataset = std::vector<PretrainItem>;

nn::Tensor images_to_tensor(const PretrainDataset& ds, const std::vector<int>& idx,
                            bool augmented);
nn::Tensor masks_to_tensor(const PretrainDataset& ds, const std::vector<int>& idx, bool box);
nn::Tensor states_to_tensor(const PretrainDataset& ds, const std::vector<int>& idx);
nn::Tensor image_to_tensor(const render::Image& img);

struct EpochLog {
  int epoch = 0;
  double total = 0, rgb = 0, box = 0, gripper = 0;
  double val_total = 0;
  double val_box_iou = 0, val_grip_iou = 0;
  // VtS: per-component validation MSE, split between deltas and joints.
  double val_delta_mse = 0, val_joint_mse = 0;
};

struct PretrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_loss = 0;
};

struct PretrainOptions {
  int epochs = 60;
  double lr = 1e-3;
  int batch_size = 32;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::function<void(const EpochLog&)> on_epoch;  // metrics sink (CSV row)
};

PretrainResult pretrain_autoencoder(Autoencoder& model, const PretrainDataset& ds,
                                    const AELossWeights& weights, const PretrainOptions& opt);
PretrainResult pretrain_vts(VtsModel& model, const PretrainDataset& ds,
                            const PretrainOptions& opt);

// Mean IoU of thresholded mask logits against targets.
double mask_iou_metric(const nn::Tensor& logits, const nn::Tensor& targets);

std::array<float, kLatentDim> encode(Encoder& enc, const render::Image& img);

// ------------------------------------------------------------ strategies --

enum class Strategy { state, state_randomized, vts, igae, ae, end_to_end };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);
bool is_vision(Strategy s);
bool uses_frozen_encoder(Strategy s);
int observation_dim(Strategy s);   // what the policy consumes (9 or 128)
int stored_obs_dim(Strategy s);    // what the rollout buffer stores

// Encoders owned by the agent; which members are live depends on strategy.
// The camera defines the observation rendering for every vision strategy.
struct EncoderStack {
  Encoder encoder;        // ae / igae (frozen), end_to_end (trainable)
  VtsModel vts;           // vts (frozen)
  bool has_encoder = false;
  bool has_vts = false;
  render::Camera camera;
};

// Randomized-simulation observation hooks; absent during training.
struct VisionRandomization {
  const render::AdaptationDraw* adaptation = nullptr;
  const aug::AugmentationSpec* image_noise = nullptr;
  Rng* rng = nullptr;
};

struct AgentObservation {
  std::vector<float> policy_input;   // length observation_dim(strategy)
  std::vector<float> image;          // CHW floats; filled for vision strategies
};

AgentObservation make_agent_state(Strategy strategy, const env::GraspEnv& env,
                                  EncoderStack* stack, Rng* state_noise_rng,
                                  const VisionRandomization* vr = nullptr);

// Checkpoint helpers for any param list.
void save_params(nn::Checkpoint& ck, nn::ParamList<float>& params);
void load_params(const nn::Checkpoint& ck, nn::ParamList<float>& params);
std::uint64_t params_checksum(nn::ParamList<float>& params);

}  // namespace pgrl::repr
