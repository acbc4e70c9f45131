#pragma once

#include <cmath>
#include <string>

#include "pgrl/kernels.hpp"
#include "pgrl/tensor.hpp"

namespace pgrl::nn {

// Static-graph layers: each owns its parameters and the forward cache its
// backward pass needs. backward() accumulates parameter gradients and
// returns the input gradient.

template <class T>
struct DenseT {
  ParamT<T> w;  // [in, out]
  ParamT<T> b;  // [out]
  TensorT<T> x_cache;
  int in = 0, out = 0;

  void init(const std::string& name, int n_in, int n_out, std::uint64_t seed,
            double gain = 1.0) {
    in = n_in;
    out = n_out;
    w.name = name + ".w";
    b.name = name + ".b";
    w.resize({in, out});
    b.resize({out});
    init_uniform(w, seed, gain * std::sqrt(6.0 / (in + out)));
    b.w.zero();
    b.g.zero();
  }

  void params(ParamList<T>& list) {
    list.push_back({&w});
    list.push_back({&b});
  }

  TensorT<T> forward(const TensorT<T>& x) {
    require(x.shape.size() == 2 && x.shape[1] == in,
            w.name + ": input shape " + x.shape_str() + ", want [N," + std::to_string(in) + "]");
    x_cache = x;
    const int N = x.shape[0];
    TensorT<T> y({N, out});
    kern::matmul_nn(x.ptr(), w.w.ptr(), y.ptr(), N, in, out);
    for (int i = 0; i < N; ++i) {
      T* row = y.ptr() + static_cast<std::size_t>(i) * out;
      for (int j = 0; j < out; ++j) row[j] += b.w[j];
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    const int N = x_cache.shape[0];
    require_shape(dy, {N, out}, "dense backward");
    kern::matmul_tn(x_cache.ptr(), dy.ptr(), w.g.ptr(), in, N, out, /*acc=*/true);
    for (int i = 0; i < N; ++i) {
      const T* row = dy.ptr() + static_cast<std::size_t>(i) * out;
      for (int j = 0; j < out; ++j) b.g[j] += row[j];
    }
    TensorT<T> dx({N, in});
    kern::matmul_nt(dy.ptr(), w.w.ptr(), dx.ptr(), N, out, in);
    return dx;
  }
};

template <class T>
struct Conv2dT {
  ParamT<T> w;  // [c_out, c_in*kh*kw]
  ParamT<T> b;  // [c_out]
  kern::ConvDims dims;
  TensorT<T> col_cache;

  void init(const std::string& name, int c_in, int c_out, int k, int stride, int pad,
            std::uint64_t seed) {
    dims.c_in = c_in;
    dims.c_out = c_out;
    dims.kh = dims.kw = k;
    dims.stride = stride;
    dims.pad = pad;
    w.name = name + ".w";
    b.name = name + ".b";
    w.resize({c_out, c_in * k * k});
    b.resize({c_out});
    init_fan_in(w, seed, c_in * k * k);
    b.w.zero();
    b.g.zero();
  }

  void params(ParamList<T>& list) {
    list.push_back({&w});
    list.push_back({&b});
  }

  TensorT<T> forward(const TensorT<T>& x) {
    require(x.shape.size() == 4 && x.shape[1] == dims.c_in,
            w.name + ": input shape " + x.shape_str());
    dims.n = x.shape[0];
    dims.h = x.shape[2];
    dims.w = x.shape[3];
    col_cache = TensorT<T>({dims.n, dims.patch(), dims.pixels()});
    TensorT<T> y({dims.n, dims.c_out, dims.oh(), dims.ow()});
    kern::conv2d_forward(x.ptr(), w.w.ptr(), b.w.ptr(), y.ptr(), dims, col_cache.ptr());
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    require_shape(dy, {dims.n, dims.c_out, dims.oh(), dims.ow()}, "conv backward");
    kern::conv2d_backward_weights(dy.ptr(), col_cache.ptr(), w.g.ptr(), b.g.ptr(), dims);
    TensorT<T> dx({dims.n, dims.c_in, dims.h, dims.w});
    TensorT<T> dcol({dims.n, dims.patch(), dims.pixels()});
    kern::conv2d_backward_input(dy.ptr(), w.w.ptr(), dx.ptr(), dims, dcol.ptr());
    return dx;
  }
};

template <class T>
struct TConv2dT {
  ParamT<T> w;  // [c_in, c_out, kh, kw]
  ParamT<T> b;  // [c_out]
  kern::TConvDims dims;
  TensorT<T> x_cache;

  void init(const std::string& name, int c_in, int c_out, int k, int stride, int pad,
            std::uint64_t seed) {
    dims.c_in = c_in;
    dims.c_out = c_out;
    dims.kh = dims.kw = k;
    dims.stride = stride;
    dims.pad = pad;
    w.name = name + ".w";
    b.name = name + ".b";
    w.resize({c_in, c_out, k, k});
    b.resize({c_out});
    init_fan_in(w, seed, c_in * k * k);
    b.w.zero();
    b.g.zero();
  }

  void params(ParamList<T>& list) {
    list.push_back({&w});
    list.push_back({&b});
  }

  TensorT<T> forward(const TensorT<T>& x) {
    require(x.shape.size() == 4 && x.shape[1] == dims.c_in,
            w.name + ": input shape " + x.shape_str());
    dims.n = x.shape[0];
    dims.h = x.shape[2];
    dims.w = x.shape[3];
    x_cache = x;
    const kern::ConvDims ad = dims.adjoint();
    TensorT<T> dcol({dims.n, ad.patch(), ad.pixels()});
    TensorT<T> y({dims.n, dims.c_out, dims.oh(), dims.ow()});
    kern::tconv2d_forward_gemm(x.ptr(), w.w.ptr(), b.w.ptr(), y.ptr(), dims, dcol.ptr());
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    require_shape(dy, {dims.n, dims.c_out, dims.oh(), dims.ow()}, "tconv backward");
    const kern::ConvDims ad = dims.adjoint();
    TensorT<T> col({dims.n, ad.patch(), ad.pixels()});
    TensorT<T> dx({dims.n, dims.c_in, dims.h, dims.w});
    kern::tconv2d_backward_input_gemm(dy.ptr(), w.w.ptr(), dx.ptr(), dims, col.ptr());
    kern::tconv2d_backward_weights_gemm(x_cache.ptr(), col.ptr(), w.g.ptr(), b.g.ptr(),
                                        dy.ptr(), dims);
    return dx;
  }
};

template <class T>
struct ReluT {
  TensorT<T> x_cache;

  TensorT<T> forward(const TensorT<T>& x) {
    x_cache = x;
    TensorT<T> y = x;
    for (auto& v : y.data) v = v > T(0) ? v : T(0);
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    require(dy.shape == x_cache.shape, "relu backward: shape mismatch");
    TensorT<T> dx = dy;
    for (long i = 0; i < dx.numel(); ++i)
      if (x_cache[i] <= T(0)) dx[i] = T(0);
    return dx;
  }
};

template <class T>
struct TanhT {
  TensorT<T> y_cache;

  TensorT<T> forward(const TensorT<T>& x) {
    TensorT<T> y = x;
    for (auto& v : y.data) v = std::tanh(v);
    y_cache = y;
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    require(dy.shape == y_cache.shape, "tanh backward: shape mismatch");
    TensorT<T> dx = dy;
    for (long i = 0; i < dx.numel(); ++i) dx[i] *= T(1) - y_cache[i] * y_cache[i];
    return dx;
  }
};

template <class T>
struct SigmoidT {
  TensorT<T> y_cache;

  TensorT<T> forward(const TensorT<T>& x) {
    TensorT<T> y = x;
    for (auto& v : y.data) v = T(1) / (T(1) + std::exp(-v));
    y_cache = y;
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    require(dy.shape == y_cache.shape, "sigmoid backward: shape mismatch");
    TensorT<T> dx = dy;
    for (long i = 0; i < dx.numel(); ++i) dx[i] *= y_cache[i] * (T(1) - y_cache[i]);
    return dx;
  }
};

// Per-channel softmax over the spatial grid followed by the expected (x, y)
// position in normalized [-1,1] coordinates; output packs [x_c, y_c] pairs.
template <class T>
struct SpatialSoftmaxT {
  double temperature = 1.0;
  TensorT<T> p_cache;   // [N, C, H, W] probabilities
  TensorT<T> xy_cache;  // [N, 2C]

  static T grid(int i, int n) {
    return n > 1 ? T(-1) + T(2) * T(i) / T(n - 1) : T(0);
  }

  TensorT<T> forward(const TensorT<T>& x) {
    require(x.shape.size() == 4, "spatial_softmax: want [N,C,H,W]");
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    p_cache = TensorT<T>(x.shape);
    TensorT<T> out({N, 2 * C});
    const long hw = static_cast<long>(H) * W;
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* f = x.ptr() + (static_cast<std::size_t>(n) * C + c) * hw;
        T* p = p_cache.ptr() + (static_cast<std::size_t>(n) * C + c) * hw;
        T mx = f[0];
        for (long i = 1; i < hw; ++i) mx = std::max(mx, f[i]);
        T z = T(0);
        for (long i = 0; i < hw; ++i) {
          p[i] = std::exp((f[i] - mx) / T(temperature));
          z += p[i];
        }
        T ex = T(0), ey = T(0);
        for (int h = 0; h < H; ++h)
          for (int w = 0; w < W; ++w) {
            T pi = p[static_cast<long>(h) * W + w] / z;
            p[static_cast<long>(h) * W + w] = pi;
            ex += pi * grid(w, W);
            ey += pi * grid(h, H);
          }
        out[static_cast<std::size_t>(n) * 2 * C + 2 * c] = ex;
        out[static_cast<std::size_t>(n) * 2 * C + 2 * c + 1] = ey;
      }
    xy_cache = out;
    return out;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    const int N = p_cache.shape[0], C = p_cache.shape[1], H = p_cache.shape[2],
              W = p_cache.shape[3];
    require_shape(dy, {N, 2 * C}, "spatial_softmax backward");
    TensorT<T> dx(p_cache.shape);
    const long hw = static_cast<long>(H) * W;
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* p = p_cache.ptr() + (static_cast<std::size_t>(n) * C + c) * hw;
        T* d = dx.ptr() + (static_cast<std::size_t>(n) * C + c) * hw;
        const T dex = dy[static_cast<std::size_t>(n) * 2 * C + 2 * c];
        const T dey = dy[static_cast<std::size_t>(n) * 2 * C + 2 * c + 1];
        const T ex = xy_cache[static_cast<std::size_t>(n) * 2 * C + 2 * c];
        const T ey = xy_cache[static_cast<std::size_t>(n) * 2 * C + 2 * c + 1];
        for (int h = 0; h < H; ++h)
          for (int w = 0; w < W; ++w) {
            const long i = static_cast<long>(h) * W + w;
            d[i] = p[i] * ((grid(w, W) - ex) * dex + (grid(h, H) - ey) * dey) /
                   T(temperature);
          }
      }
    return dx;
  }
};

// ---------------------------------------------------------------- losses --

template <class T>
double mse_loss(const TensorT<T>& pred, const TensorT<T>& target, TensorT<T>* dpred = nullptr) {
  require(pred.shape == target.shape, "mse_loss: shape mismatch " + pred.shape_str() + " vs " +
                                          target.shape_str());
  check_finite(pred, "mse_loss.pred");
  check_finite(target, "mse_loss.target");
  const long n = pred.numel();
  double loss = 0.0;
  if (dpred && dpred->shape != pred.shape) *dpred = TensorT<T>(pred.shape);
  for (long i = 0; i < n; ++i) {
    const double e = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    loss += e * e;
    if (dpred) (*dpred)[i] = static_cast<T>(2.0 * e / n);
  }
  return loss / n;
}

// Numerically stable BCE from logits: max(z,0) - z*t + log(1 + exp(-|z|)).
template <class T>
double bce_loss(const TensorT<T>& logits, const TensorT<T>& target,
                TensorT<T>* dlogits = nullptr) {
  require(logits.shape == target.shape, "bce_loss: shape mismatch " + logits.shape_str() +
                                            " vs " + target.shape_str());
  check_finite(logits, "bce_loss.logits");
  check_finite(target, "bce_loss.target");
  const long n = logits.numel();
  double loss = 0.0;
  if (dlogits && dlogits->shape != logits.shape) *dlogits = TensorT<T>(logits.shape);
  for (long i = 0; i < n; ++i) {
    const double z = static_cast<double>(logits[i]);
    const double t = static_cast<double>(target[i]);
    loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
    if (dlogits) {
      const double sig = 1.0 / (1.0 + std::exp(-z));
      (*dlogits)[i] = static_cast<T>((sig - t) / n);
    }
  }
  return loss / n;
}

// ------------------------------------------------ diagonal Gaussian head --

// State-independent log-std; mean comes from the actor network. log_prob is
// computed for the pre-clamp sample (clamping to [-1,1] happens at the
// environment boundary).
inline double gaussian_log_prob(const double* mean, const double* log_std, const double* a,
                                int dim) {
  double lp = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double s = std::exp(log_std[d]);
    const double z = (a[d] - mean[d]) / s;
    lp += -0.5 * z * z - log_std[d] - 0.5 * std::log(2.0 * kPi);
  }
  return lp;
}

inline double gaussian_entropy(const double* log_std, int dim) {
  double h = 0.0;
  for (int d = 0; d < dim; ++d) h += log_std[d] + 0.5 * std::log(2.0 * kPi * std::exp(1.0));
  return h;
}

inline void gaussian_sample(const double* mean, const double* log_std, int dim, Rng& rng,
                            double* out) {
  for (int d = 0; d < dim; ++d) out[d] = mean[d] + std::exp(log_std[d]) * rng.normal();
}

// d log_prob / d mean and d log_prob / d log_std at action a.
inline void gaussian_log_prob_grad(const double* mean, const double* log_std, const double* a,
                                   int dim, double* dmean, double* dlog_std) {
  for (int d = 0; d < dim; ++d) {
    const double s = std::exp(log_std[d]);
    const double z = (a[d] - mean[d]) / s;
    dmean[d] = z / s;
    dlog_std[d] = z * z - 1.0;
  }
}

using Dense = DenseT<float>;
using Conv2d = Conv2dT<float>;
using TConv2d = TConv2dT<float>;
using Relu = ReluT<float>;
using Tanh = TanhT<float>;
using Sigmoid = SigmoidT<float>;
using SpatialSoftmax = SpatialSoftmaxT<float>;

}  // namespace pgrl::nn
