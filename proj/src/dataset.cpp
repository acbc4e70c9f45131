#include "pgrl/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace pgrl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Damped-least-squares IK from the home pose toward a target point.
arm::JointConfig ik_to_point(const arm::ArmModel& m, const arm::JointConfig& start,
                             Vec2 target, double orientation_target) {
  arm::JointConfig q = start;
  for (int it = 0; it < 120; ++it) {
    const Vec2 ee = arm::forward_kinematics(m, q).position;
    const Vec2 err = target - ee;
    if (err.norm() < 1e-4) break;
    const double step = std::min(0.05, err.norm());
    const Vec2 v = err * (step / std::max(err.norm(), 1e-12));
    arm::StepResult r = arm::step_task_velocity(m, q, v, orientation_target, 1.0, {});
    if (!r.ok) break;
    q = r.q;
  }
  return q;
}

std::vector<std::uint8_t> quantize_image(const render::Image& img) {
  std::vector<std::uint8_t> out(img.px.size());
  for (std::size_t i = 0; i < img.px.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround(clamp(img.px[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

std::vector<std::uint8_t> mask_bytes(const render::Mask& m) { return m.v; }

}  // namespace

repr::PretrainDataset gen_dataset(const ExperimentConfig& cfg, int n, std::uint64_t seed) {
  require(n > 0, "gen_dataset: n must be positive");
  repr::PretrainDataset ds(n);
  const Rng root(seed);
  const arm::JointConfig home = arm::home_config(cfg.arm, cfg.env.home_ee);
  const double orient = arm::forward_kinematics(cfg.arm, home).orientation;
  const env::SpawnRegion ws = cfg.env.workspace();

#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    Rng rng = root.fork(static_cast<std::uint64_t>(i));
    repr::PretrainItem& item = ds[i];

    const Vec2 box{rng.uniform(cfg.env.spawn.x_min, cfg.env.spawn.x_max),
                   rng.uniform(cfg.env.spawn.y_min, cfg.env.spawn.y_max)};
    const Vec2 ee_target{rng.uniform(ws.x_min, ws.x_max), rng.uniform(ws.y_min, ws.y_max)};

    arm::JointConfig q = ik_to_point(cfg.arm, home, ee_target, orient);
    for (int j = 0; j < arm::kNumJoints; ++j) {
      const arm::JointLimits lim = cfg.arm.safety_limits(j);
      q.q[j] = clamp(q.q[j] + rng.uniform(-cfg.dataset_joint_jitter, cfg.dataset_joint_jitter),
                     lim.lo, lim.hi);
    }

    render::SceneSpec scene =
        render::make_scene(cfg.arm, q, box, cfg.env.box_width, cfg.env.gripper_opening);
    scene.camera = cfg.camera;
    render::Image img = render::render(scene);
    render::MaskPair masks = render::render_masks(scene);

    aug::AugmentResult res = aug::augment(img, &masks, cfg.augspec, rng);

    item.augmented = quantize_image(res.augmented);
    item.clean = quantize_image(res.denoised_target);
    item.box_mask = mask_bytes(res.masks.box);
    item.grip_mask = mask_bytes(res.masks.gripper);

    const Vec2 ee = arm::forward_kinematics(cfg.arm, q).position;
    const env::NumericState s =
        env::scale_numeric_state(cfg.env, cfg.arm, {box.x - ee.x, box.y - ee.y}, q);
    for (int k = 0; k < repr::kStateDim; ++k) item.state[k] = static_cast<float>(s[k]);
  }
  return ds;
}

void write_dataset(const repr::PretrainDataset& ds, const std::string& dir,
                   std::uint64_t seed, std::uint64_t config_hash) {
  fs::create_directories(dir);
  json items = json::array();
  try {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "%05zu", i);
      const repr::PretrainItem& it = ds[i];

      render::Image aug_img(repr::kImageSize, repr::kImageSize);
      render::Image clean_img(repr::kImageSize, repr::kImageSize);
      for (std::size_t k = 0; k < aug_img.px.size(); ++k) {
        aug_img.px[k] = it.augmented[k] / 255.0f;
        clean_img.px[k] = it.clean[k] / 255.0f;
      }
      render::Mask bm(repr::kImageSize, repr::kImageSize), gm(repr::kImageSize, repr::kImageSize);
      bm.v = it.box_mask;
      gm.v = it.grip_mask;

      write_ppm(dir + "/" + stem + "_aug.ppm", aug_img);
      write_ppm(dir + "/" + stem + "_clean.ppm", clean_img);
      write_pgm(dir + "/" + stem + "_box.pgm", bm);
      write_pgm(dir + "/" + stem + "_grip.pgm", gm);

      json entry;
      entry["aug"] = std::string(stem) + "_aug.ppm";
      entry["clean"] = std::string(stem) + "_clean.ppm";
      entry["box_mask"] = std::string(stem) + "_box.pgm";
      entry["grip_mask"] = std::string(stem) + "_grip.pgm";
      entry["state"] = it.state;
      items.push_back(entry);
    }
  } catch (...) {
    // Never leave a manifest behind a partial write.
    std::error_code ec;
    fs::remove(fs::path(dir) / "manifest.json", ec);
    throw;
  }

  json manifest;
  manifest["count"] = ds.size();
  manifest["seed"] = seed;
  manifest["config_hash"] = config_hash;
  manifest["image_size"] = repr::kImageSize;
  manifest["items"] = std::move(items);

  const std::string tmp = dir + "/manifest.json.tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    require(os.good(), "write_dataset: cannot write manifest");
    os << manifest.dump(1);
  }
  fs::rename(tmp, fs::path(dir) / "manifest.json");
}

bool dataset_complete(const std::string& dir) {
  return fs::exists(fs::path(dir) / "manifest.json");
}

repr::PretrainDataset load_dataset(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  require(is.good(), "load_dataset: no manifest in '" + dir + "'");
  json manifest = json::parse(is);
  const std::size_t count = manifest.at("count");
  const auto& items = manifest.at("items");
  require(items.size() == count, "load_dataset: manifest count mismatch");

  repr::PretrainDataset ds(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& entry = items[i];
    auto img_bytes = [&](const std::string& name) {
      render::Image img = render::read_ppm(dir + "/" + entry.at(name).get<std::string>());
      std::vector<std::uint8_t> out(img.px.size());
      for (std::size_t k = 0; k < img.px.size(); ++k)
        out[k] = static_cast<std::uint8_t>(std::lround(img.px[k] * 255.0f));
      return out;
    };
    ds[i].augmented = img_bytes("aug");
    ds[i].clean = img_bytes("clean");
    ds[i].box_mask = render::read_pgm(dir + "/" + entry.at("box_mask").get<std::string>()).v;
    ds[i].grip_mask = render::read_pgm(dir + "/" + entry.at("grip_mask").get<std::string>()).v;
    const auto& st = entry.at("state");
    require(st.size() == repr::kStateDim, "load_dataset: bad state length");
    for (int k = 0; k < repr::kStateDim; ++k) ds[i].state[k] = st[k].get<float>();
  }
  return ds;
}

std::uint64_t dataset_hash(const repr::PretrainDataset& ds) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& it : ds) {
    h = fnv1a(it.augmented.data(), it.augmented.size(), h);
    h = fnv1a(it.clean.data(), it.clean.size(), h);
    h = fnv1a(it.box_mask.data(), it.box_mask.size(), h);
    h = fnv1a(it.grip_mask.data(), it.grip_mask.size(), h);
    h = fnv1a(it.state.data(), it.state.size() * sizeof(float), h);
  }
  return h;
}

}  // namespace pgrl::harness
