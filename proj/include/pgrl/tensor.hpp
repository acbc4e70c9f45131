#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgrl/common.hpp"
#include "pgrl/rng.hpp"

namespace pgrl::nn {

// Dense row-major tensor, up to 4 dims. float for training, double for
// gradient-check mode.
template <class T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(numel_of(shape)), T(0));
  }

  static long numel_of(const std::vector<int>& s) {
    require(s.size() <= 4, "tensor: at most 4 dims");
    long n = 1;
    for (int d : s) {
      require(d > 0, "tensor: dims must be positive");
      n *= d;
    }
    return n;
  }

  long numel() const { return static_cast<long>(data.size()); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <class T>
void require_shape(const TensorT<T>& t, const std::vector<int>& want, const char* where) {
  if (t.shape != want) {
    TensorT<T> w;
    w.shape = want;
    fail(std::string(where) + ": shape mismatch, got " + t.shape_str() + ", want " +
         w.shape_str());
  }
}

// Checked mode: ops verify finiteness of their results (used by tests and
// the 64-bit gradient-check path).
bool checked_mode();
void set_checked_mode(bool on);

template <class T>
void check_finite(const TensorT<T>& t, const char* where) {
  if (!checked_mode()) return;
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) fail(std::string(where) + ": non-finite value");
}

// Parameter tensor paired with its gradient accumulator.
template <class T>
struct ParamT {
  std::string name;
  TensorT<T> w;
  TensorT<T> g;

  void resize(std::vector<int> shape) {
    w = TensorT<T>(shape);
    g = TensorT<T>(std::move(shape));
  }
};

template <class T>
struct ParamRefT {
  ParamT<T>* p;
};

template <class T>
using ParamList = std::vector<ParamRefT<T>>;

// Deterministic per-parameter stream: the draw sequence for one tensor does
// not depend on which other tensors exist in the model.
inline Rng param_rng(std::uint64_t seed, const std::string& name) {
  return Rng(seed ^ fnv1a(name));
}

template <class T>
void init_uniform(ParamT<T>& p, std::uint64_t seed, double limit) {
  Rng rng = param_rng(seed, p.name);
  for (auto& v : p.w.data) v = static_cast<T>(rng.uniform(-limit, limit));
  p.g.zero();
}

// He-style fan-in limit, the default for ReLU stacks; gain scales the limit.
template <class T>
void init_fan_in(ParamT<T>& p, std::uint64_t seed, int fan_in, double gain = 1.0) {
  init_uniform(p, seed, gain * std::sqrt(6.0 / fan_in));
}

// Adam with bias correction; zeroes gradients after each step.
template <class T>
struct AdamT {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<TensorT<T>> m;
  std::vector<TensorT<T>> v;

  void init(const ParamList<T>& params) {
    m.clear();
    v.clear();
    for (const auto& r : params) {
      m.emplace_back(r.p->w.shape);
      v.emplace_back(r.p->w.shape);
    }
    step_count = 0;
  }

  void step(const ParamList<T>& params, double lr) {
    require(m.size() == params.size(), "adam: not initialized for this parameter list");
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      TensorT<T>& w = params[i].p->w;
      TensorT<T>& g = params[i].p->g;
      require(w.shape == m[i].shape, "adam: parameter shape changed");
      for (long k = 0; k < w.numel(); ++k) {
        double gk = static_cast<double>(g[k]);
        double mk = beta1 * static_cast<double>(m[i][k]) + (1.0 - beta1) * gk;
        double vk = beta2 * static_cast<double>(v[i][k]) + (1.0 - beta2) * gk * gk;
        m[i][k] = static_cast<T>(mk);
        v[i][k] = static_cast<T>(vk);
        w[k] -= static_cast<T>(lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps));
      }
      g.zero();
    }
  }
};

using Adam = AdamT<float>;

}  // namespace pgrl::nn
