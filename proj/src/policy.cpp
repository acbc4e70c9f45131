#include "pgrl/policy.hpp"

namespace pgrl::ppo {

void PolicyNet::init(int obs_dimension, bool tanh_act, std::uint64_t seed) {
  obs_dim = obs_dimension;
  tanh_activations = tanh_act;
  a_fc1.init("actor.fc1", obs_dim, 64, seed);
  a_fc2.init("actor.fc2", 64, 64, seed);
  a_out.init("actor.out", 64, kActionDim, seed, /*gain=*/0.01);
  c_fc1.init("critic.fc1", obs_dim, 64, seed);
  c_fc2.init("critic.fc2", 64, 64, seed);
  c_out.init("critic.out", 64, 1, seed);
  log_std.name = "actor.log_std";
  log_std.resize({kActionDim});
  log_std.w.zero();  // sigma = 1 on the scaled action range
  log_std.g.zero();
}

nn::Tensor PolicyNet::actor_forward(const nn::Tensor& obs) {
  nn::Tensor h = a_fc1.forward(obs);
  h = tanh_activations ? a_t1.forward(h) : a_r1.forward(h);
  h = a_fc2.forward(h);
  h = tanh_activations ? a_t2.forward(h) : a_r2.forward(h);
  return a_out.forward(h);
}

nn::Tensor PolicyNet::critic_forward(const nn::Tensor& obs) {
  nn::Tensor h = c_fc1.forward(obs);
  h = tanh_activations ? c_t1.forward(h) : c_r1.forward(h);
  h = c_fc2.forward(h);
  h = tanh_activations ? c_t2.forward(h) : c_r2.forward(h);
  return c_out.forward(h);
}

nn::Tensor PolicyNet::actor_backward(const nn::Tensor& dmean) {
  nn::Tensor d = a_out.backward(dmean);
  d = tanh_activations ? a_t2.backward(d) : a_r2.backward(d);
  d = a_fc2.backward(d);
  d = tanh_activations ? a_t1.backward(d) : a_r1.backward(d);
  return a_fc1.backward(d);
}

nn::Tensor PolicyNet::critic_backward(const nn::Tensor& dvalue) {
  nn::Tensor d = c_out.backward(dvalue);
  d = tanh_activations ? c_t2.backward(d) : c_r2.backward(d);
  d = c_fc2.backward(d);
  d = tanh_activations ? c_t1.backward(d) : c_r1.backward(d);
  return c_fc1.backward(d);
}

void PolicyNet::params(nn::ParamList<float>& list) {
  actor_params(list);
  critic_params(list);
}

void PolicyNet::actor_params(nn::ParamList<float>& list) {
  a_fc1.params(list);
  a_fc2.params(list);
  a_out.params(list);
  list.push_back({&log_std});
}

void PolicyNet::critic_params(nn::ParamList<float>& list) {
  c_fc1.params(list);
  c_fc2.params(list);
  c_out.params(list);
}

}  // namespace pgrl::ppo
