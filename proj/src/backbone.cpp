#include "pgrl/backbone.hpp"

#include <cmath>

namespace pgrl::repr {

namespace {

nn::Tensor add_tensors(const nn::Tensor& a, const nn::Tensor& b) {
  require(a.shape == b.shape, "residual add: shape mismatch");
  nn::Tensor y = a;
  for (long i = 0; i < y.numel(); ++i) y[i] += b[i];
  return y;
}

}  // namespace

void ResBlock::init(const std::string& name, int c_in, int c_out, std::uint64_t seed) {
  conv1.init(name + ".conv1", c_in, c_out, 3, 2, 1, seed);
  conv2.init(name + ".conv2", c_out, c_out, 3, 1, 1, seed);
  skip.init(name + ".skip", c_in, c_out, 1, 2, 0, seed);
}

nn::Tensor ResBlock::forward(const nn::Tensor& x) {
  nn::Tensor main = relu1.forward(conv1.forward(x));
  main = conv2.forward(main);
  nn::Tensor sc = skip.forward(x);
  return relu2.forward(add_tensors(main, sc));
}

nn::Tensor ResBlock::backward(const nn::Tensor& dy) {
  nn::Tensor d = relu2.backward(dy);
  nn::Tensor d_main = conv1.backward(relu1.backward(conv2.backward(d)));
  nn::Tensor d_skip = skip.backward(d);
  return add_tensors(d_main, d_skip);
}

void ResBlock::params(nn::ParamList<float>& list) {
  conv1.params(list);
  conv2.params(list);
  skip.params(list);
}

void Encoder::init(std::uint64_t seed) {
  stem.init("enc.stem", 3, 16, 3, 2, 1, seed);
  block1.init("enc.block1", 16, 32, seed);
  block2.init("enc.block2", 32, 64, seed);
}

nn::Tensor Encoder::forward(const nn::Tensor& imgs) {
  require(imgs.shape.size() == 4 && imgs.shape[1] == 3 && imgs.shape[2] == kImageSize &&
              imgs.shape[3] == kImageSize,
          "encoder: want [N,3,64,64], got " + imgs.shape_str());
  nn::Tensor h = stem_relu.forward(stem.forward(imgs));
  h = block1.forward(h);
  h = block2.forward(h);
  return ssm.forward(h);
}

nn::Tensor Encoder::backward(const nn::Tensor& dlatent) {
  nn::Tensor d = ssm.backward(dlatent);
  d = block2.backward(d);
  d = block1.backward(d);
  return stem.backward(stem_relu.backward(d));
}

void Encoder::params(nn::ParamList<float>& list) {
  stem.params(list);
  block1.params(list);
  block2.params(list);
}

void DecoderStage1::init(std::uint64_t seed) {
  fc.init("dec.fc", kLatentDim, 64 * 8 * 8, seed);
  up1.init("dec.up1", 64, 32, 4, 2, 1, seed);
}

nn::Tensor DecoderStage1::forward(const nn::Tensor& latent) {
  nn::Tensor h = relu0.forward(fc.forward(latent));
  nn::Tensor grid({h.shape[0], 64, 8, 8});
  grid.data = h.data;
  return relu1.forward(up1.forward(grid));
}

nn::Tensor DecoderStage1::backward(const nn::Tensor& dy) {
  nn::Tensor d = up1.backward(relu1.backward(dy));
  nn::Tensor flat({d.shape[0], 64 * 8 * 8});
  flat.data = d.data;
  return fc.backward(relu0.backward(flat));
}

void DecoderStage1::params(nn::ParamList<float>& list) {
  fc.params(list);
  up1.params(list);
}

void DecoderBranch::init(const std::string& name, int out_ch, std::uint64_t seed) {
  up2.init(name + ".up2", 32, 16, 4, 2, 1, seed);
  up3.init(name + ".up3", 16, out_ch, 4, 2, 1, seed);
}

nn::Tensor DecoderBranch::forward(const nn::Tensor& x) {
  return up3.forward(relu2.forward(up2.forward(x)));
}

nn::Tensor DecoderBranch::backward(const nn::Tensor& dy) {
  return up2.backward(relu2.backward(up3.backward(dy)));
}

void DecoderBranch::params(nn::ParamList<float>& list) {
  up2.params(list);
  up3.params(list);
}

void Autoencoder::init(bool masks, std::uint64_t seed) {
  with_masks = masks;
  enc.init(seed);
  stage1.init(seed);
  rgb_branch.init("dec.rgb", 3, seed);
  if (with_masks) {
    box_branch.init("dec.box", 1, seed);
    grip_branch.init("dec.grip", 1, seed);
  }
}

void Autoencoder::params(nn::ParamList<float>& list) {
  enc.params(list);
  stage1.params(list);
  rgb_branch.params(list);
  if (with_masks) {
    box_branch.params(list);
    grip_branch.params(list);
  }
}

void VtsModel::init(std::uint64_t seed) {
  enc.init(seed);
  fc1.init("vts.fc1", kLatentDim, 64, seed);
  fc2.init("vts.fc2", 64, 64, seed);
  fc3.init("vts.fc3", 64, 32, seed);
  out.init("vts.out", 32, kStateDim, seed);
}

nn::Tensor VtsModel::head_forward(const nn::Tensor& latent) {
  nn::Tensor h = r1.forward(fc1.forward(latent));
  h = r2.forward(fc2.forward(h));
  h = r3.forward(fc3.forward(h));
  return out.forward(h);
}

nn::Tensor VtsModel::head_backward(const nn::Tensor& dy) {
  nn::Tensor d = fc3.backward(r3.backward(out.backward(dy)));
  d = fc2.backward(r2.backward(d));
  return fc1.backward(r1.backward(d));
}

nn::Tensor VtsModel::forward(const nn::Tensor& imgs) { return head_forward(enc.forward(imgs)); }

void VtsModel::params(nn::ParamList<float>& list) {
  enc.params(list);
  head_params(list);
}

void VtsModel::head_params(nn::ParamList<float>& list) {
  fc1.params(list);
  fc2.params(list);
  fc3.params(list);
  out.params(list);
}

nn::Tensor images_to_tensor(const PretrainDataset& ds, const std::vector<int>& idx,
                            bool augmented) {
  const int B = static_cast<int>(idx.size());
  nn::Tensor t({B, 3, kImageSize, kImageSize});
  for (int b = 0; b < B; ++b) {
    const auto& raw = augmented ? ds[idx[b]].augmented : ds[idx[b]].clean;
    for (int y = 0; y < kImageSize; ++y)
      for (int x = 0; x < kImageSize; ++x)
        for (int c = 0; c < 3; ++c)
          t[((static_cast<std::size_t>(b) * 3 + c) * kImageSize + y) * kImageSize + x] =
              raw[(static_cast<std::size_t>(y) * kImageSize + x) * 3 + c] / 255.0f;
  }
  return t;
}

nn::Tensor masks_to_tensor(const PretrainDataset& ds, const std::vector<int>& idx, bool box) {
  const int B = static_cast<int>(idx.size());
  nn::Tensor t({B, 1, kImageSize, kImageSize});
  for (int b = 0; b < B; ++b) {
    const auto& raw = box ? ds[idx[b]].box_mask : ds[idx[b]].grip_mask;
    for (std::size_t i = 0; i < raw.size(); ++i)
      t[static_cast<std::size_t>(b) * raw.size() + i] = raw[i] ? 1.0f : 0.0f;
  }
  return t;
}

nn::Tensor states_to_tensor(const PretrainDataset& ds, const std::vector<int>& idx) {
  const int B = static_cast<int>(idx.size());
  nn::Tensor t({B, kStateDim});
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < kStateDim; ++k)
      t[static_cast<std::size_t>(b) * kStateDim + k] = ds[idx[b]].state[k];
  return t;
}

nn::Tensor image_to_tensor(const render::Image& img) {
  nn::Tensor t({1, 3, img.h, img.w});
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c)
        t[(static_cast<std::size_t>(c) * img.h + y) * img.w + x] = img.at(y, x)[c];
  return t;
}

double mask_iou_metric(const nn::Tensor& logits, const nn::Tensor& targets) {
  require(logits.shape == targets.shape, "mask_iou_metric: shape mismatch");
  const int B = logits.shape[0];
  const long per = logits.numel() / B;
  double sum = 0.0;
  for (int b = 0; b < B; ++b) {
    long inter = 0, uni = 0;
    for (long i = 0; i < per; ++i) {
      const bool p = logits[static_cast<std::size_t>(b) * per + i] > 0.0f;  // sigmoid > 0.5
      const bool t = targets[static_cast<std::size_t>(b) * per + i] > 0.5f;
      inter += p && t;
      uni += p || t;
    }
    sum += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
  }
  return sum / B;
}

namespace {

std::vector<int> index_range(int lo, int hi) {
  std::vector<int> v(hi - lo);
  for (int i = lo; i < hi; ++i) v[i - lo] = i;
  return v;
}

}  // namespace

PretrainResult pretrain_autoencoder(Autoencoder& model, const PretrainDataset& ds,
                                    const AELossWeights& weights, const PretrainOptions& opt) {
  require(!ds.empty(), "pretrain: empty dataset");
  const int n = static_cast<int>(ds.size());
  const int n_train = std::max(1, n - static_cast<int>(std::floor(n * opt.val_fraction)));

  nn::ParamList<float> params;
  model.params(params);
  nn::Adam adam;
  adam.init(params);
  Rng rng(opt.seed);

  PretrainResult res;
  res.best_loss = 1e300;
  std::vector<int> order = index_range(0, n_train);
  const std::vector<int> val_idx = index_range(n_train, n);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    shuffle_indices(order, rng);
    EpochLog log;
    log.epoch = epoch;
    long batches = 0;
    for (int start = 0; start < n_train; start += opt.batch_size) {
      const int end = std::min(n_train, start + opt.batch_size);
      const std::vector<int> idx(order.begin() + start, order.begin() + end);

      nn::Tensor latent = model.enc.forward(images_to_tensor(ds, idx, /*augmented=*/true));
      nn::Tensor trunk = model.stage1.forward(latent);

      nn::Tensor rgb = model.rgb_act.forward(model.rgb_branch.forward(trunk));
      nn::Tensor rgb_target = images_to_tensor(ds, idx, /*augmented=*/false);
      nn::Tensor d_rgb;
      const double rgb_loss = nn::mse_loss(rgb, rgb_target, &d_rgb);
      for (auto& v : d_rgb.data) v *= static_cast<float>(weights.rgb);
      nn::Tensor d_trunk = model.rgb_branch.backward(model.rgb_act.backward(d_rgb));

      double box_loss = 0.0, grip_loss = 0.0;
      if (model.with_masks) {
        nn::Tensor box_logits = model.box_branch.forward(trunk);
        nn::Tensor d_box;
        box_loss = nn::bce_loss(box_logits, masks_to_tensor(ds, idx, true), &d_box);
        for (auto& v : d_box.data) v *= static_cast<float>(weights.box);
        d_trunk = add_tensors(d_trunk, model.box_branch.backward(d_box));

        nn::Tensor grip_logits = model.grip_branch.forward(trunk);
        nn::Tensor d_grip;
        grip_loss = nn::bce_loss(grip_logits, masks_to_tensor(ds, idx, false), &d_grip);
        for (auto& v : d_grip.data) v *= static_cast<float>(weights.gripper);
        d_trunk = add_tensors(d_trunk, model.grip_branch.backward(d_grip));
      }

      model.enc.backward(model.stage1.backward(d_trunk));
      adam.step(params, opt.lr);

      const double total =
          weights.rgb * rgb_loss + weights.box * box_loss + weights.gripper * grip_loss;
      require(std::isfinite(total), "pretrain: loss diverged (NaN)");
      log.rgb += rgb_loss;
      log.box += box_loss;
      log.gripper += grip_loss;
      log.total += total;
      ++batches;
    }
    log.rgb /= batches;
    log.box /= batches;
    log.gripper /= batches;
    log.total /= batches;

    if (!val_idx.empty()) {
      nn::Tensor latent = model.enc.forward(images_to_tensor(ds, val_idx, true));
      nn::Tensor trunk = model.stage1.forward(latent);
      nn::Tensor rgb = model.rgb_act.forward(model.rgb_branch.forward(trunk));
      log.val_total =
          weights.rgb * nn::mse_loss(rgb, images_to_tensor(ds, val_idx, false));
      if (model.with_masks) {
        nn::Tensor box_logits = model.box_branch.forward(trunk);
        nn::Tensor grip_logits = model.grip_branch.forward(trunk);
        nn::Tensor box_t = masks_to_tensor(ds, val_idx, true);
        nn::Tensor grip_t = masks_to_tensor(ds, val_idx, false);
        log.val_total += weights.box * nn::bce_loss(box_logits, box_t) +
                         weights.gripper * nn::bce_loss(grip_logits, grip_t);
        log.val_box_iou = mask_iou_metric(box_logits, box_t);
        log.val_grip_iou = mask_iou_metric(grip_logits, grip_t);
      }
    } else {
      log.val_total = log.total;
    }

    if (log.total < res.best_loss) {
      res.best_loss = log.total;
      res.best_epoch = epoch;
    }
    if (opt.on_epoch) opt.on_epoch(log);
    res.log.push_back(log);
  }
  return res;
}

PretrainResult pretrain_vts(VtsModel& model, const PretrainDataset& ds,
                            const PretrainOptions& opt) {
  require(!ds.empty(), "pretrain_vts: empty dataset");
  const int n = static_cast<int>(ds.size());
  const int n_train = std::max(1, n - static_cast<int>(std::floor(n * opt.val_fraction)));

  nn::ParamList<float> params;
  model.params(params);
  nn::Adam adam;
  adam.init(params);
  Rng rng(opt.seed);

  PretrainResult res;
  res.best_loss = 1e300;
  std::vector<int> order = index_range(0, n_train);
  const std::vector<int> val_idx = index_range(n_train, n);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    shuffle_indices(order, rng);
    EpochLog log;
    log.epoch = epoch;
    long batches = 0;
    for (int start = 0; start < n_train; start += opt.batch_size) {
      const int end = std::min(n_train, start + opt.batch_size);
      const std::vector<int> idx(order.begin() + start, order.begin() + end);
      nn::Tensor pred = model.forward(images_to_tensor(ds, idx, true));
      nn::Tensor d;
      const double loss = nn::mse_loss(pred, states_to_tensor(ds, idx), &d);
      require(std::isfinite(loss), "pretrain_vts: loss diverged (NaN)");
      model.enc.backward(model.head_backward(d));
      adam.step(params, opt.lr);
      log.total += loss;
      ++batches;
    }
    log.total /= batches;

    if (!val_idx.empty()) {
      nn::Tensor pred = model.forward(images_to_tensor(ds, val_idx, true));
      nn::Tensor target = states_to_tensor(ds, val_idx);
      log.val_total = nn::mse_loss(pred, target);
      // Per-component split: positional errors vs joint angles.
      double dmse = 0, jmse = 0;
      const int B = pred.shape[0];
      for (int b = 0; b < B; ++b)
        for (int k = 0; k < kStateDim; ++k) {
          const double e = pred[static_cast<std::size_t>(b) * kStateDim + k] -
                           target[static_cast<std::size_t>(b) * kStateDim + k];
          (k < 2 ? dmse : jmse) += e * e;
        }
      log.val_delta_mse = dmse / (2.0 * B);
      log.val_joint_mse = jmse / (7.0 * B);
    } else {
      log.val_total = log.total;
    }

    if (log.total < res.best_loss) {
      res.best_loss = log.total;
      res.best_epoch = epoch;
    }
    if (opt.on_epoch) opt.on_epoch(log);
    res.log.push_back(log);
  }
  return res;
}

std::array<float, kLatentDim> encode(Encoder& enc, const render::Image& img) {
  nn::Tensor latent = enc.forward(image_to_tensor(img));
  std::array<float, kLatentDim> out{};
  for (int i = 0; i < kLatentDim; ++i) out[i] = latent[i];
  return out;
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::state: return "state";
    case Strategy::state_randomized: return "state-rnd";
    case Strategy::vts: return "vts";
    case Strategy::igae: return "igae";
    case Strategy::ae: return "ae";
    case Strategy::end_to_end: return "ete";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  for (Strategy s : {Strategy::state, Strategy::state_randomized, Strategy::vts, Strategy::igae,
                     Strategy::ae, Strategy::end_to_end})
    if (name == strategy_name(s)) return s;
  fail("unknown strategy '" + name + "' (state|state-rnd|vts|igae|ae|ete)");
}

bool is_vision(Strategy s) {
  return s == Strategy::vts || s == Strategy::igae || s == Strategy::ae ||
         s == Strategy::end_to_end;
}

bool uses_frozen_encoder(Strategy s) {
  return s == Strategy::vts || s == Strategy::igae || s == Strategy::ae;
}

int observation_dim(Strategy s) {
  switch (s) {
    case Strategy::state:
    case Strategy::state_randomized:
    case Strategy::vts: return kStateDim;
    default: return kLatentDim;
  }
}

int stored_obs_dim(Strategy s) {
  if (s == Strategy::end_to_end) return 3 * kImageSize * kImageSize;
  return observation_dim(s);
}

AgentObservation make_agent_state(Strategy strategy, const env::GraspEnv& env,
                                  EncoderStack* stack, Rng* state_noise_rng,
                                  const VisionRandomization* vr) {
  AgentObservation obs;
  if (!is_vision(strategy)) {
    env::NumericState s = env.numeric_state();
    if (strategy == Strategy::state_randomized) {
      require(state_noise_rng != nullptr, "make_agent_state: state noise needs an rng");
      s = env::randomize_numeric_state(s, env.config().state_noise_fraction,
                                       env.config().additive_state_noise, *state_noise_rng);
    }
    obs.policy_input.assign(s.begin(), s.end());
    return obs;
  }

  require(stack != nullptr, "make_agent_state: vision strategy needs encoders");
  render::SceneSpec scene = render::make_scene(env);
  scene.camera = stack->camera;
  if (vr && vr->adaptation) scene = render::apply_adaptations(scene, *vr->adaptation);
  render::Image img = render::render(scene);
  if (vr && vr->image_noise) {
    require(vr->rng != nullptr, "make_agent_state: image noise needs an rng");
    img = aug::augment(img, nullptr, *vr->image_noise, *vr->rng).augmented;
  }
  nn::Tensor t = image_to_tensor(img);
  obs.image.assign(t.data.begin(), t.data.end());

  Encoder& enc = (strategy == Strategy::vts) ? stack->vts.enc : stack->encoder;
  nn::Tensor latent = enc.forward(t);
  if (strategy == Strategy::vts) {
    nn::Tensor pred = stack->vts.head_forward(latent);
    obs.policy_input.assign(pred.data.begin(), pred.data.end());
  } else {
    obs.policy_input.assign(latent.data.begin(), latent.data.end());
  }
  return obs;
}

void save_params(nn::Checkpoint& ck, nn::ParamList<float>& params) {
  for (auto& r : params) ck.add_tensor(r.p->name, r.p->w);
}

void load_params(const nn::Checkpoint& ck, nn::ParamList<float>& params) {
  for (auto& r : params) ck.read_into(r.p->name, r.p->w);
}

std::uint64_t params_checksum(nn::ParamList<float>& params) {
  std::uint64_t h = 14695981039346656037ull;
  for (auto& r : params) {
    h = fnv1a(r.p->name.data(), r.p->name.size(), h);
    h = fnv1a(r.p->w.ptr(), r.p->w.data.size() * sizeof(float), h);
  }
  return h;
}

}  // namespace pgrl::repr
