#pragma once

#include "pgrl/layers.hpp"

namespace pgrl::ppo {

inline constexpr int kActionDim = 2;

// Separate actor and critic, each two hidden layers of 64 units. Numeric
// agents use Tanh activations, vision agents ReLU. The actor outputs the
// Gaussian mean; log_std is a free state-independent parameter.
struct PolicyNet {
  int obs_dim = 0;
  bool tanh_activations = true;

  nn::Dense a_fc1, a_fc2, a_out;
  nn::Dense c_fc1, c_fc2, c_out;
  nn::Tanh a_t1, a_t2, c_t1, c_t2;
  nn::Relu a_r1, a_r2, c_r1, c_r2;
  nn::ParamT<float> log_std;

  void init(int obs_dimension, bool tanh_act, std::uint64_t seed);

  // Forward passes cache activations for the subsequent backward.
  nn::Tensor actor_forward(const nn::Tensor& obs);    // [B,obs] -> mean [B,2]
  nn::Tensor critic_forward(const nn::Tensor& obs);   // [B,obs] -> value [B,1]
  nn::Tensor actor_backward(const nn::Tensor& dmean);
  nn::Tensor critic_backward(const nn::Tensor& dvalue);

  void params(nn::ParamList<float>& list);        // actor + log_std + critic
  void actor_params(nn::ParamList<float>& list);  // actor + log_std
  void critic_params(nn::ParamList<float>& list);
};

}  // namespace pgrl::ppo
