#pragma once

#include <array>

#include "pgrl/image.hpp"
#include "pgrl/rng.hpp"
#include "pgrl/scene.hpp"

namespace pgrl::aug {

// Image-noise randomization. Applied in fixed order: crop, blur, brightness,
// perspective, channel noise. Geometric transforms (crop, perspective) also
// move the masks and the denoised target; photometric ones touch only the
// input image.
struct AugmentationSpec {
  struct {
    double prob = 0.5;
    double min_keep = 0.8;  // kept fraction of each side; resized back
  } crop;
  struct {
    double prob = 0.5;
    double sigma_min = 0.0;
    double sigma_max = 1.5;  // px
  } blur;
  struct {
    double prob = 0.5;
    double max_delta = 0.2;
  } brightness;
  struct {
    double prob = 0.5;
    double max_disp = 0.10;  // corner displacement as a fraction of the image side
  } perspective;
  struct {
    double prob = 0.5;
    double max_amplitude = 0.05;
  } channel_noise;

  void validate() const;
};

// 3x3 projective map acting on continuous pixel coordinates.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  Vec2 apply(double u, double v) const {
    const double w = m[6] * u + m[7] * v + m[8];
    return {(m[0] * u + m[1] * v + m[2]) / w, (m[3] * u + m[4] * v + m[5]) / w};
  }
  // this(other(p))
  Homography compose(const Homography& other) const;
  Homography inverse() const;
  // Maps the four unit corners (quad given as u0,v0,...,u3,v3) of dst to src.
  static Homography from_quad(const std::array<double, 8>& dst_quad,
                              const std::array<double, 8>& src_quad);
};

struct AppliedAugmentation {
  bool crop = false;
  double crop_x0 = 0, crop_y0 = 0, crop_keep = 1.0;
  bool blur = false;
  double sigma = 0.0;
  bool brightness = false;
  double delta = 0.0;
  bool perspective = false;
  std::array<double, 8> quad{};  // displaced source corners
  bool channel_noise = false;
  double amplitude = 0.0;
  std::uint64_t noise_key = 0;  // seeds the per-pixel noise field

  bool any_geometric() const { return crop || perspective; }
  // Composed geometric map: output pixel coords -> source pixel coords.
  Homography geometry(int w, int h) const;
};

AppliedAugmentation sample_augmentation(const AugmentationSpec& spec, int w, int h, Rng& rng);

struct AugmentResult {
  render::Image augmented;
  render::MaskPair masks;  // zero-sized if no masks were given
  render::Image denoised_target;
  AppliedAugmentation applied;
};

AugmentResult apply_augmentation(const render::Image& img, const render::MaskPair* masks,
                                 const AppliedAugmentation& a);
AugmentResult augment(const render::Image& img, const render::MaskPair* masks,
                      const AugmentationSpec& spec, Rng& rng);

// Composed randomized-simulation draw: one physical-adaptation draw (held for
// an episode) plus the image-noise spec applied per observation.
struct EvalRandomization {
  render::AdaptationDraw scene_draw;
  AugmentationSpec image_noise;
};

EvalRandomization sample_eval_randomization(const render::AdaptationRanges& ranges,
                                            const AugmentationSpec& spec, Rng& rng);

}  // namespace pgrl::aug
