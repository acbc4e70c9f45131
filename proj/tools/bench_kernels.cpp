// Throughput comparison of the serial reference kernels against their OpenMP
// variants, plus the end-to-end costs that dominate training (encoder
// forward/backward, rendering, environment stepping).

#include <chrono>
#include <cstdio>
#include <vector>

#include "pgrl/backbone.hpp"
#include "pgrl/kernels.hpp"

using namespace pgrl;
using namespace pgrl::nn;

namespace {

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class F>
double time_it(int iters, F&& fn) {
  fn();  // warm up
  const double t0 = now();
  for (int i = 0; i < iters; ++i) fn();
  return (now() - t0) / iters;
}

}  // namespace

int main() {
  Rng rng(1);
  std::printf("threads: %d\n\n", omp_get_max_threads());

  {
    const int M = 256, K = 256, N = 256;
    std::vector<float> a(M * K), b(K * N), c(M * N);
    for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
    const double flops = 2.0 * M * K * N;
    const double ts = time_it(20, [&] {
      kern::matmul_nn(a.data(), b.data(), c.data(), M, K, N, false, kern::Par::serial);
    });
    const double tp = time_it(20, [&] {
      kern::matmul_nn(a.data(), b.data(), c.data(), M, K, N, false, kern::Par::omp);
    });
    std::printf("matmul_nn 256^3      serial %7.2f ms (%5.2f GFLOP/s)   omp %7.2f ms (%5.2f "
                "GFLOP/s)  speedup %.2fx\n",
                ts * 1e3, flops / ts * 1e-9, tp * 1e3, flops / tp * 1e-9, ts / tp);
  }

  {
    kern::ConvDims d;
    d.n = 8;
    d.c_in = 16;
    d.h = d.w = 32;
    d.c_out = 32;
    d.stride = 2;
    d.pad = 1;
    std::vector<float> x(d.n * d.in_size()), w(d.c_out * d.patch()), b(d.c_out),
        y(d.n * d.out_size()), col(d.n * d.col_size());
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : w) v = static_cast<float>(rng.uniform(-1, 1));
    const double ts = time_it(50, [&] {
      kern::conv2d_forward(x.data(), w.data(), b.data(), y.data(), d, col.data(),
                           kern::Par::serial);
    });
    const double tp = time_it(50, [&] {
      kern::conv2d_forward(x.data(), w.data(), b.data(), y.data(), d, col.data(),
                           kern::Par::omp);
    });
    std::printf("conv 8x16x32x32->32  serial %7.2f ms                    omp %7.2f ms         "
                "          speedup %.2fx\n",
                ts * 1e3, tp * 1e3, ts / tp);
  }

  {
    repr::Encoder enc;
    enc.init(7);
    Tensor img({1, 3, 64, 64});
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(0, 1));
    const double t1 = time_it(20, [&] { enc.forward(img); });
    Tensor batch({8, 3, 64, 64});
    for (auto& v : batch.data) v = static_cast<float>(rng.uniform(0, 1));
    const double t8 = time_it(10, [&] { enc.forward(batch); });
    Tensor dl({8, repr::kLatentDim});
    for (auto& v : dl.data) v = static_cast<float>(rng.uniform(-1, 1));
    enc.forward(batch);
    const double tb = time_it(10, [&] { enc.backward(dl); });
    std::printf("encoder fwd          batch 1 %6.2f ms    batch 8 %6.2f ms/img    bwd(8) %6.2f "
                "ms/img\n",
                t1 * 1e3, t8 * 1e3 / 8, tb * 1e3 / 8);
  }

  {
    env::GraspEnv e(env::EnvConfig{}, arm::ArmModel::standard());
    Rng r(3);
    e.reset(r);
    const double t = time_it(5, [&] {
      for (int i = 0; i < 10000; ++i) {
        if (e.state().t >= e.config().horizon) e.reset(r);
        e.step({r.uniform(-1, 1), r.uniform(-1, 1)});
      }
    });
    std::printf("env step             %6.2f us\n", t * 1e6 / 10000);
  }

  {
    env::GraspEnv e(env::EnvConfig{}, arm::ArmModel::standard());
    Rng r(3);
    e.reset(r);
    render::SceneSpec scene = render::make_scene(e);
    const double t = time_it(200, [&] { render::render(scene); });
    const double tm = time_it(200, [&] { render::render_masks(scene); });
    std::printf("render 64x64         %6.2f ms   masks %6.2f ms\n", t * 1e3, tm * 1e3);
  }

  return 0;
}
