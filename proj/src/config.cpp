#include "pgrl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pgrl::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

struct KeyValues {
  std::map<std::string, std::string> kv;
  mutable std::map<std::string, bool> touched;

  bool has(const std::string& k) const { return kv.count(k) != 0; }

  std::string get(const std::string& k, const std::string& dflt) const {
    touched[k] = true;
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  }
  double get(const std::string& k, double dflt) const {
    const std::string s = get(k, fmt(dflt));
    return std::stod(s);
  }
  long get(const std::string& k, long dflt) const {
    return static_cast<long>(get(k, static_cast<double>(dflt)));
  }
  int get(const std::string& k, int dflt) const {
    return static_cast<int>(get(k, static_cast<double>(dflt)));
  }
  bool get(const std::string& k, bool dflt) const {
    const std::string s = get(k, std::string(dflt ? "true" : "false"));
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    fail("config: boolean expected for '" + k + "', got '" + s + "'");
  }
  std::vector<std::string> get_list(const std::string& k, const std::string& dflt) const {
    std::istringstream is(get(k, dflt));
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  }
};

}  // namespace

ExperimentConfig ExperimentConfig::defaults() { return {}; }

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "config: cannot open '" + path + "'");
  KeyValues raw;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config: '" + path + "' line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "config: empty key at line " + std::to_string(lineno));
    raw.kv[key] = value;
  }

  ExperimentConfig c;

  c.profile = raw.get("run.profile", std::string("desk"));
  require(c.profile == "desk" || c.profile == "paper", "config: run.profile must be desk|paper");
  if (c.profile == "paper") {
    c.total_steps = 1500000;
    c.vision_total_steps = 1500000;
    c.n_envs = 16;
    c.seeds = {1, 2, 3, 4, 5};
  }

  c.strategies.clear();
  for (const auto& s : raw.get_list("run.strategies", "state"))
    c.strategies.push_back(repr::parse_strategy(s));
  c.seeds.clear();
  for (const auto& s :
       raw.get_list("run.seeds", c.profile == "paper" ? "1 2 3 4 5" : "1 2 3"))
    c.seeds.push_back(std::stoull(s));

  c.env.horizon = raw.get("env.horizon", 400);
  c.env.dt = raw.get("env.dt", 0.05);
  c.env.v_max = raw.get("env.v_max", 0.035);
  c.env.w_x = raw.get("env.w_x", 1.0);
  c.env.w_y = raw.get("env.w_y", 1.0);
  c.env.collision_penalty = raw.get("env.collision_penalty", -100.0);
  c.env.box_width = raw.get("env.box_width", 0.05);
  c.env.box_height = raw.get("env.box_height", 0.10);
  c.env.box_depth = raw.get("env.box_depth", 0.05);
  c.env.gripper_opening = raw.get("env.gripper_opening", 0.085);
  {
    auto v = raw.get_list("env.spawn", "-0.30 0.30 0.40 0.70");
    require(v.size() == 4, "config: env.spawn wants 4 numbers");
    c.env.spawn = {std::stod(v[0]), std::stod(v[1]), std::stod(v[2]), std::stod(v[3])};
  }
  c.env.workspace_margin = raw.get("env.workspace_margin", 0.10);
  c.env.state_noise_fraction = raw.get("env.state_noise_fraction", 0.05);
  c.env.additive_state_noise = raw.get("env.additive_state_noise", true);
  c.env.delta_scale = raw.get("env.delta_scale", 0.40);
  {
    auto v = raw.get_list("env.home_ee", "0.0 0.35");
    require(v.size() == 2, "config: env.home_ee wants 2 numbers");
    c.env.home_ee = {std::stod(v[0]), std::stod(v[1])};
  }

  {
    const double reach = raw.get("arm.reach", 1.2);
    for (auto& l : c.arm.link_lengths) l = reach / arm::kNumJoints;
    const double phys = deg2rad(raw.get("arm.physical_limit_deg", 165.0));
    for (auto& lim : c.arm.physical_limits) lim = {-phys, phys};
    c.arm.safety_margin = deg2rad(raw.get("arm.safety_margin_deg", 10.0));
    auto v = raw.get_list("arm.base", "0.0 0.0");
    require(v.size() == 2, "config: arm.base wants 2 numbers");
    c.arm.base_position = {std::stod(v[0]), std::stod(v[1])};
  }

  c.camera.h = c.camera.w = raw.get("camera.size", 64);
  require(c.camera.h == repr::kImageSize, "config: camera.size must be 64");
  c.camera.scale = raw.get("camera.scale", 100.0);
  {
    auto v = raw.get_list("camera.center", "0.0 0.40");
    c.camera.center = {std::stod(v[0]), std::stod(v[1])};
  }

  c.adapt.floor_pattern_count = raw.get("adapt.floor_patterns", 4);
  c.adapt.hue_shift = raw.get("adapt.hue_shift", 0.05);
  c.adapt.shadow_toggle_prob = raw.get("adapt.shadow_toggle_prob", 0.5);
  c.adapt.shadow_offset = raw.get("adapt.shadow_offset", 0.02);
  c.adapt.camera_offset = raw.get("adapt.camera_offset", 0.03);
  c.adapt.camera_rotation = deg2rad(raw.get("adapt.camera_rotation_deg", 3.0));
  c.adapt.camera_scale_jitter = raw.get("adapt.camera_scale_jitter", 0.05);

  c.augspec.crop.prob = raw.get("aug.crop_prob", 0.5);
  c.augspec.crop.min_keep = raw.get("aug.crop_min_keep", 0.8);
  c.augspec.blur.prob = raw.get("aug.blur_prob", 0.5);
  c.augspec.blur.sigma_min = raw.get("aug.blur_sigma_min", 0.0);
  c.augspec.blur.sigma_max = raw.get("aug.blur_sigma_max", 1.5);
  c.augspec.brightness.prob = raw.get("aug.brightness_prob", 0.5);
  c.augspec.brightness.max_delta = raw.get("aug.brightness_max_delta", 0.2);
  c.augspec.perspective.prob = raw.get("aug.perspective_prob", 0.5);
  c.augspec.perspective.max_disp = raw.get("aug.perspective_max_disp", 0.10);
  c.augspec.channel_noise.prob = raw.get("aug.channel_noise_prob", 0.5);
  c.augspec.channel_noise.max_amplitude = raw.get("aug.channel_noise_max_amplitude", 0.05);

  c.ae_weights.rgb = raw.get("ae.lambda_rgb", 1.0);
  c.ae_weights.box = raw.get("ae.lambda_box", 10.0);
  c.ae_weights.gripper = raw.get("ae.lambda_gripper", 20.0);

  c.pretrain_samples = raw.get("pretrain.samples", 5000);
  c.pretrain_epochs = raw.get("pretrain.epochs", 40);
  c.pretrain_lr = raw.get("pretrain.lr", 0.001);
  c.pretrain_batch = raw.get("pretrain.batch", 32);
  c.pretrain_val_fraction = raw.get("pretrain.val_fraction", 0.1);
  c.pretrain_seed = static_cast<std::uint64_t>(raw.get("pretrain.seed", 7L));
  c.dataset_joint_jitter = raw.get("pretrain.joint_jitter", 0.15);

  c.entropy_coef = raw.get("ppo.entropy_coef", 0.02);
  c.gamma = raw.get("ppo.gamma", 0.96);
  c.gae_lambda = raw.get("ppo.gae_lambda", 0.92);
  c.n_steps = raw.get("ppo.n_steps", 512);
  c.n_epochs = raw.get("ppo.n_epochs", 10);
  c.value_coef = raw.get("ppo.value_coef", 0.5);
  c.max_grad_norm = raw.get("ppo.max_grad_norm", 0.5);
  c.batch_size = raw.get("ppo.batch_size", 32);
  c.n_envs = raw.get("ppo.n_envs", c.n_envs);
  c.total_steps = raw.get("ppo.total_steps", c.total_steps);
  c.vision_total_steps = raw.get("ppo.vision_total_steps", c.vision_total_steps);
  c.checkpoint_count = raw.get("ppo.checkpoints", 30);
  c.eval_every_iters = raw.get("ppo.eval_every_iters", 0);

  for (repr::Strategy s :
       {repr::Strategy::state, repr::Strategy::state_randomized, repr::Strategy::vts,
        repr::Strategy::igae, repr::Strategy::ae, repr::Strategy::end_to_end}) {
    const ppo::PPOConfig d = ppo::PPOConfig::defaults_for(s);
    const std::string name = repr::strategy_name(s);
    c.lr_overrides[name] = raw.get("ppo.lr." + name, d.lr);
    c.clip_overrides[name] = raw.get("ppo.clip." + name, d.clip_range);
  }

  c.eval_boxes = raw.get("eval.boxes", 50);
  c.eval_seed = static_cast<std::uint64_t>(raw.get("eval.seed", 2024L));

  for (const auto& [key, value] : raw.kv)
    require(raw.touched.count(key) != 0, "config: unknown key '" + key + "'");

  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  arm.validate();
  env.validate(arm);
  augspec.validate();
  require(!strategies.empty(), "config: run.strategies is empty");
  require(!seeds.empty(), "config: run.seeds is empty");
  require(pretrain_samples > 0, "config: pretrain.samples must be positive");
  require(eval_boxes > 0, "config: eval.boxes must be positive");
  for (repr::Strategy s : strategies) ppo_for(s).validate();
}

ppo::PPOConfig ExperimentConfig::ppo_for(repr::Strategy s) const {
  ppo::PPOConfig c = ppo::PPOConfig::defaults_for(s);
  const std::string name = repr::strategy_name(s);
  if (auto it = lr_overrides.find(name); it != lr_overrides.end()) c.lr = it->second;
  if (auto it = clip_overrides.find(name); it != clip_overrides.end())
    c.clip_range = it->second;
  c.entropy_coef = entropy_coef;
  c.gamma = gamma;
  c.gae_lambda = gae_lambda;
  c.n_steps = n_steps;
  c.n_epochs = n_epochs;
  c.value_coef = value_coef;
  c.max_grad_norm = max_grad_norm;
  c.batch_size = batch_size;
  c.n_envs = n_envs;
  c.total_steps = repr::is_vision(s) ? vision_total_steps : total_steps;
  c.checkpoint_count = checkpoint_count;
  c.eval_every_iters = eval_every_iters;
  return c;
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  auto put = [&](const std::string& k, const std::string& v) { kv[k] = v; };
  auto putd = [&](const std::string& k, double v) { put(k, fmt(v)); };

  put("run.profile", profile);
  {
    std::string s;
    for (auto st : strategies) s += std::string(s.empty() ? "" : " ") + repr::strategy_name(st);
    put("run.strategies", s);
    s.clear();
    for (auto sd : seeds) s += (s.empty() ? "" : " ") + std::to_string(sd);
    put("run.seeds", s);
  }

  putd("env.horizon", env.horizon);
  putd("env.dt", env.dt);
  putd("env.v_max", env.v_max);
  putd("env.w_x", env.w_x);
  putd("env.w_y", env.w_y);
  putd("env.collision_penalty", env.collision_penalty);
  putd("env.box_width", env.box_width);
  putd("env.box_height", env.box_height);
  putd("env.box_depth", env.box_depth);
  putd("env.gripper_opening", env.gripper_opening);
  put("env.spawn", fmt(env.spawn.x_min) + " " + fmt(env.spawn.x_max) + " " +
                       fmt(env.spawn.y_min) + " " + fmt(env.spawn.y_max));
  putd("env.workspace_margin", env.workspace_margin);
  putd("env.state_noise_fraction", env.state_noise_fraction);
  put("env.additive_state_noise", env.additive_state_noise ? "true" : "false");
  putd("env.delta_scale", env.delta_scale);
  put("env.home_ee", fmt(env.home_ee.x) + " " + fmt(env.home_ee.y));

  putd("arm.reach", arm.reach());
  putd("arm.physical_limit_deg", rad2deg(arm.physical_limits[0].hi));
  putd("arm.safety_margin_deg", rad2deg(arm.safety_margin));
  put("arm.base", fmt(arm.base_position.x) + " " + fmt(arm.base_position.y));

  putd("camera.size", camera.h);
  putd("camera.scale", camera.scale);
  put("camera.center", fmt(camera.center.x) + " " + fmt(camera.center.y));

  putd("adapt.floor_patterns", adapt.floor_pattern_count);
  putd("adapt.hue_shift", adapt.hue_shift);
  putd("adapt.shadow_toggle_prob", adapt.shadow_toggle_prob);
  putd("adapt.shadow_offset", adapt.shadow_offset);
  putd("adapt.camera_offset", adapt.camera_offset);
  putd("adapt.camera_rotation_deg", rad2deg(adapt.camera_rotation));
  putd("adapt.camera_scale_jitter", adapt.camera_scale_jitter);

  putd("aug.crop_prob", augspec.crop.prob);
  putd("aug.crop_min_keep", augspec.crop.min_keep);
  putd("aug.blur_prob", augspec.blur.prob);
  putd("aug.blur_sigma_min", augspec.blur.sigma_min);
  putd("aug.blur_sigma_max", augspec.blur.sigma_max);
  putd("aug.brightness_prob", augspec.brightness.prob);
  putd("aug.brightness_max_delta", augspec.brightness.max_delta);
  putd("aug.perspective_prob", augspec.perspective.prob);
  putd("aug.perspective_max_disp", augspec.perspective.max_disp);
  putd("aug.channel_noise_prob", augspec.channel_noise.prob);
  putd("aug.channel_noise_max_amplitude", augspec.channel_noise.max_amplitude);

  putd("ae.lambda_rgb", ae_weights.rgb);
  putd("ae.lambda_box", ae_weights.box);
  putd("ae.lambda_gripper", ae_weights.gripper);

  putd("pretrain.samples", pretrain_samples);
  putd("pretrain.epochs", pretrain_epochs);
  putd("pretrain.lr", pretrain_lr);
  putd("pretrain.batch", pretrain_batch);
  putd("pretrain.val_fraction", pretrain_val_fraction);
  putd("pretrain.seed", static_cast<double>(pretrain_seed));
  putd("pretrain.joint_jitter", dataset_joint_jitter);

  putd("ppo.entropy_coef", entropy_coef);
  putd("ppo.gamma", gamma);
  putd("ppo.gae_lambda", gae_lambda);
  putd("ppo.n_steps", n_steps);
  putd("ppo.n_epochs", n_epochs);
  putd("ppo.value_coef", value_coef);
  putd("ppo.max_grad_norm", max_grad_norm);
  putd("ppo.batch_size", batch_size);
  putd("ppo.n_envs", n_envs);
  putd("ppo.total_steps", static_cast<double>(total_steps));
  putd("ppo.vision_total_steps", static_cast<double>(vision_total_steps));
  putd("ppo.checkpoints", checkpoint_count);
  putd("ppo.eval_every_iters", eval_every_iters);
  for (repr::Strategy s :
       {repr::Strategy::state, repr::Strategy::state_randomized, repr::Strategy::vts,
        repr::Strategy::igae, repr::Strategy::ae, repr::Strategy::end_to_end}) {
    const ppo::PPOConfig pc = ppo_for(s);
    putd("ppo.lr." + std::string(repr::strategy_name(s)), pc.lr);
    putd("ppo.clip." + std::string(repr::strategy_name(s)), pc.clip_range);
  }

  putd("eval.boxes", eval_boxes);
  putd("eval.seed", static_cast<double>(eval_seed));

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), "config: cannot write '" + path + "'");
  os << canonical();
}

std::string run_root() {
  const char* v = std::getenv("PGRL_RUN_ROOT");
  return v && *v ? std::string(v) : std::string("runs");
}

}  // namespace pgrl::harness
