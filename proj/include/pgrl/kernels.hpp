#pragma once

#include <cstddef>
#include <vector>

#include <omp.h>

namespace pgrl::nn::kern {

// Every kernel has a serial reference and an OpenMP variant. Both call the
// same per-output-element routine, so the floating-point summation order is
// identical and results are bit-equal; tests assert exact equality and the
// bench_kernels tool compares throughput.

enum class Par { serial, omp };

// ---------------------------------------------------------------- matmul --

// C[m,n] (+)= sum_k A[m,k] * B[k,n]
template <class T>
inline void mm_nn_row(const T* a, const T* b, T* c, int K, int N, bool acc) {
  if (!acc)
    for (int j = 0; j < N; ++j) c[j] = T(0);
  for (int k = 0; k < K; ++k) {
    const T av = a[k];
    const T* brow = b + static_cast<std::size_t>(k) * N;
    for (int j = 0; j < N; ++j) c[j] += av * brow[j];
  }
}

template <class T>
void matmul_nn(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false,
               Par par = Par::omp) {
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i)
      mm_nn_row(a + static_cast<std::size_t>(i) * K, b, c + static_cast<std::size_t>(i) * N, K,
                N, acc);
  } else {
    for (int i = 0; i < M; ++i)
      mm_nn_row(a + static_cast<std::size_t>(i) * K, b, c + static_cast<std::size_t>(i) * N, K,
                N, acc);
  }
}

template <class T>
inline T dot(const T* x, const T* y, int K) {
  T s = T(0);
#pragma omp simd reduction(+ : s)
  for (int k = 0; k < K; ++k) s += x[k] * y[k];
  return s;
}

// C[m,n] (+)= sum_k A[m,k] * B[n,k]   (B stored [N,K])
template <class T>
inline void mm_nt_row(const T* a, const T* b, T* c, int K, int N, bool acc) {
  for (int j = 0; j < N; ++j) {
    T s = dot(a, b + static_cast<std::size_t>(j) * K, K);
    c[j] = acc ? c[j] + s : s;
  }
}

template <class T>
void matmul_nt(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false,
               Par par = Par::omp) {
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i)
      mm_nt_row(a + static_cast<std::size_t>(i) * K, b, c + static_cast<std::size_t>(i) * N, K,
                N, acc);
  } else {
    for (int i = 0; i < M; ++i)
      mm_nt_row(a + static_cast<std::size_t>(i) * K, b, c + static_cast<std::size_t>(i) * N, K,
                N, acc);
  }
}

// C[m,n] (+)= sum_k A[k,m] * B[k,n]   (A stored [K,M])
template <class T>
inline void mm_tn_row(const T* a, const T* b, T* c, int m, int K, int M, int N, bool acc) {
  if (!acc)
    for (int j = 0; j < N; ++j) c[j] = T(0);
  for (int k = 0; k < K; ++k) {
    const T av = a[static_cast<std::size_t>(k) * M + m];
    const T* brow = b + static_cast<std::size_t>(k) * N;
    for (int j = 0; j < N; ++j) c[j] += av * brow[j];
  }
}

template <class T>
void matmul_tn(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false,
               Par par = Par::omp) {
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int m = 0; m < M; ++m)
      mm_tn_row(a, b, c + static_cast<std::size_t>(m) * N, m, K, M, N, acc);
  } else {
    for (int m = 0; m < M; ++m)
      mm_tn_row(a, b, c + static_cast<std::size_t>(m) * N, m, K, M, N, acc);
  }
}

// ------------------------------------------------------------------ conv --

struct ConvDims {
  int n = 1;      // batch
  int c_in = 1;
  int h = 1, w = 1;
  int c_out = 1;
  int kh = 3, kw = 3;
  int stride = 1;
  int pad = 0;

  int oh() const { return (h + 2 * pad - kh) / stride + 1; }
  int ow() const { return (w + 2 * pad - kw) / stride + 1; }
  int patch() const { return c_in * kh * kw; }          // K of the GEMM
  int pixels() const { return oh() * ow(); }            // N of the GEMM
  std::size_t in_size() const { return static_cast<std::size_t>(c_in) * h * w; }
  std::size_t out_size() const { return static_cast<std::size_t>(c_out) * pixels(); }
  std::size_t col_size() const { return static_cast<std::size_t>(patch()) * pixels(); }
};

template <class T>
inline void im2col(const T* x, const ConvDims& d, T* col) {
  const int OH = d.oh(), OW = d.ow();
  std::size_t idx = 0;
  for (int ci = 0; ci < d.c_in; ++ci)
    for (int kh = 0; kh < d.kh; ++kh)
      for (int kw = 0; kw < d.kw; ++kw)
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * d.stride - d.pad + kh;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * d.stride - d.pad + kw;
            col[idx++] = (ih >= 0 && ih < d.h && iw >= 0 && iw < d.w)
                             ? x[(static_cast<std::size_t>(ci) * d.h + ih) * d.w + iw]
                             : T(0);
          }
        }
}

template <class T>
inline void col2im_add(const T* col, const ConvDims& d, T* x) {
  const int OH = d.oh(), OW = d.ow();
  std::size_t idx = 0;
  for (int ci = 0; ci < d.c_in; ++ci)
    for (int kh = 0; kh < d.kh; ++kh)
      for (int kw = 0; kw < d.kw; ++kw)
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * d.stride - d.pad + kh;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * d.stride - d.pad + kw;
            if (ih >= 0 && ih < d.h && iw >= 0 && iw < d.w)
              x[(static_cast<std::size_t>(ci) * d.h + ih) * d.w + iw] += col[idx];
            ++idx;
          }
        }
}

// y[n] = w_mat (c_out x patch) * col(x[n]) + bias. col must hold n * col_size
// entries and is retained by callers that need the weight gradient.
template <class T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const ConvDims& d, T* col,
                    Par par = Par::omp) {
  const int P = d.pixels(), K = d.patch();
  auto one = [&](int n) {
    T* col_n = col + static_cast<std::size_t>(n) * d.col_size();
    im2col(x + static_cast<std::size_t>(n) * d.in_size(), d, col_n);
    T* y_n = y + static_cast<std::size_t>(n) * d.out_size();
    matmul_nn(w, col_n, y_n, d.c_out, K, P, false, Par::serial);
    for (int co = 0; co < d.c_out; ++co) {
      T* row = y_n + static_cast<std::size_t>(co) * P;
      for (int p = 0; p < P; ++p) row[p] += b[co];
    }
  };
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < d.n; ++n) one(n);
  } else {
    for (int n = 0; n < d.n; ++n) one(n);
  }
}

// dx from dy; dcol is per-call scratch of n * col_size entries.
template <class T>
void conv2d_backward_input(const T* dy, const T* w, T* dx, const ConvDims& d, T* dcol,
                           Par par = Par::omp) {
  const int P = d.pixels(), K = d.patch();
  auto one = [&](int n) {
    T* dcol_n = dcol + static_cast<std::size_t>(n) * d.col_size();
    matmul_tn(w, dy + static_cast<std::size_t>(n) * d.out_size(), dcol_n, K, d.c_out, P, false,
              Par::serial);
    T* dx_n = dx + static_cast<std::size_t>(n) * d.in_size();
    for (std::size_t i = 0; i < d.in_size(); ++i) dx_n[i] = T(0);
    col2im_add(dcol_n, d, dx_n);
  };
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < d.n; ++n) one(n);
  } else {
    for (int n = 0; n < d.n; ++n) one(n);
  }
}

// Accumulates dw (c_out x patch) and db from dy and the forward col buffers.
template <class T>
void conv2d_backward_weights(const T* dy, const T* col, T* dw, T* db, const ConvDims& d,
                             Par par = Par::omp) {
  const int P = d.pixels(), K = d.patch();
  auto one = [&](int co) {
    T* dw_row = dw + static_cast<std::size_t>(co) * K;
    T dbv = T(0);
    for (int n = 0; n < d.n; ++n) {
      const T* dy_row =
          dy + static_cast<std::size_t>(n) * d.out_size() + static_cast<std::size_t>(co) * P;
      const T* col_n = col + static_cast<std::size_t>(n) * d.col_size();
      for (int k = 0; k < K; ++k)
        dw_row[k] += dot(dy_row, col_n + static_cast<std::size_t>(k) * P, P);
      for (int p = 0; p < P; ++p) dbv += dy_row[p];
    }
    db[co] += dbv;
  };
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < d.c_out; ++co) one(co);
  } else {
    for (int co = 0; co < d.c_out; ++co) one(co);
  }
}

// -------------------------------------------------- transposed conv ------

// Dims describe the *output* spatial map: out_h = (h-1)*stride - 2*pad + kh.
struct TConvDims {
  int n = 1;
  int c_in = 1;
  int h = 1, w = 1;   // input spatial size
  int c_out = 1;
  int kh = 4, kw = 4;
  int stride = 2;
  int pad = 1;

  int oh() const { return (h - 1) * stride - 2 * pad + kh; }
  int ow() const { return (w - 1) * stride - 2 * pad + kw; }
  std::size_t in_size() const { return static_cast<std::size_t>(c_in) * h * w; }
  std::size_t out_size() const { return static_cast<std::size_t>(c_out) * oh() * ow(); }

  // A transposed conv is the adjoint of a conv over the *output* map; the
  // GEMM-backed kernels below run through that conv's dims.
  ConvDims adjoint() const {
    ConvDims d;
    d.n = n;
    d.c_in = c_out;
    d.h = oh();
    d.w = ow();
    d.c_out = c_in;
    d.kh = kh;
    d.kw = kw;
    d.stride = stride;
    d.pad = pad;
    return d;
  }
};

// GEMM-backed kernels (production path). Weights are stored
// [c_in, c_out, kh, kw], which matches the adjoint conv's [c_out, patch]
// layout. dcol scratch: n * adjoint().col_size() entries.

template <class T>
void tconv2d_forward_gemm(const T* x, const T* w, const T* b, T* y, const TConvDims& td,
                          T* dcol, Par par = Par::omp) {
  const ConvDims d = td.adjoint();
  conv2d_backward_input(x, w, y, d, dcol, par);
  const int P = d.h * d.w;  // output pixels of the tconv
  auto add_bias = [&](int n) {
    T* y_n = y + static_cast<std::size_t>(n) * d.in_size();
    for (int co = 0; co < td.c_out; ++co) {
      T* row = y_n + static_cast<std::size_t>(co) * P;
      for (int p = 0; p < P; ++p) row[p] += b[co];
    }
  };
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < td.n; ++n) add_bias(n);
  } else {
    for (int n = 0; n < td.n; ++n) add_bias(n);
  }
}

// col must retain im2col(dy) for the weight gradient.
template <class T>
void tconv2d_backward_input_gemm(const T* dy, const T* w, T* dx, const TConvDims& td, T* col,
                                 Par par = Par::omp) {
  const ConvDims d = td.adjoint();
  std::vector<T> zero_bias(static_cast<std::size_t>(d.c_out), T(0));
  conv2d_forward(dy, w, zero_bias.data(), dx, d, col, par);
}

template <class T>
void tconv2d_backward_weights_gemm(const T* x, const T* dy_col, T* dw, T* db, const T* dy,
                                   const TConvDims& td, Par par = Par::omp) {
  const ConvDims d = td.adjoint();
  // The adjoint conv's bias term belongs to the tconv input side; discard it.
  std::vector<T> scratch_db(static_cast<std::size_t>(d.c_out), T(0));
  conv2d_backward_weights(x, dy_col, dw, scratch_db.data(), d, par);
  // tconv bias gradient: sum of dy over the (large) output map per channel.
  const long per = static_cast<long>(d.h) * d.w;
  auto bias_one = [&](int co) {
    T s = T(0);
    for (int n = 0; n < td.n; ++n) {
      const T* plane = dy + (static_cast<std::size_t>(n) * td.c_out + co) * per;
      for (long p = 0; p < per; ++p) s += plane[p];
    }
    db[co] += s;
  };
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < td.c_out; ++co) bias_one(co);
  } else {
    for (int co = 0; co < td.c_out; ++co) bias_one(co);
  }
}

// Reference kernels (direct loops), kept as the serial baseline the GEMM
// path is verified against. Weights stored [c_in, c_out, kh, kw].
template <class T>
void tconv2d_forward(const T* x, const T* w, const T* b, T* y, const TConvDims& d,
                     Par par = Par::omp) {
  const int OH = d.oh(), OW = d.ow();
  auto one = [&](long nc) {
    const int n = static_cast<int>(nc / d.c_out);
    const int co = static_cast<int>(nc % d.c_out);
    const T* x_n = x + static_cast<std::size_t>(n) * d.in_size();
    T* y_plane = y + static_cast<std::size_t>(n) * d.out_size() +
                 static_cast<std::size_t>(co) * OH * OW;
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow) {
        T s = b[co];
        for (int ci = 0; ci < d.c_in; ++ci) {
          const T* x_plane = x_n + static_cast<std::size_t>(ci) * d.h * d.w;
          const T* w_plane = w + ((static_cast<std::size_t>(ci) * d.c_out + co) * d.kh) * d.kw;
          for (int kh = 0; kh < d.kh; ++kh) {
            const int t = oh + d.pad - kh;
            if (t % d.stride != 0) continue;
            const int ih = t / d.stride;
            if (ih < 0 || ih >= d.h) continue;
            for (int kw = 0; kw < d.kw; ++kw) {
              const int u = ow + d.pad - kw;
              if (u % d.stride != 0) continue;
              const int iw = u / d.stride;
              if (iw < 0 || iw >= d.w) continue;
              s += x_plane[static_cast<std::size_t>(ih) * d.w + iw] *
                   w_plane[static_cast<std::size_t>(kh) * d.kw + kw];
            }
          }
        }
        y_plane[static_cast<std::size_t>(oh) * OW + ow] = s;
      }
  };
  const long total = static_cast<long>(d.n) * d.c_out;
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < total; ++i) one(i);
  } else {
    for (long i = 0; i < total; ++i) one(i);
  }
}

template <class T>
void tconv2d_backward_input(const T* dy, const T* w, T* dx, const TConvDims& d,
                            Par par = Par::omp) {
  const int OH = d.oh(), OW = d.ow();
  auto one = [&](long nc) {
    const int n = static_cast<int>(nc / d.c_in);
    const int ci = static_cast<int>(nc % d.c_in);
    const T* dy_n = dy + static_cast<std::size_t>(n) * d.out_size();
    T* dx_plane = dx + static_cast<std::size_t>(n) * d.in_size() +
                  static_cast<std::size_t>(ci) * d.h * d.w;
    for (int ih = 0; ih < d.h; ++ih)
      for (int iw = 0; iw < d.w; ++iw) {
        T s = T(0);
        for (int co = 0; co < d.c_out; ++co) {
          const T* dy_plane = dy_n + static_cast<std::size_t>(co) * OH * OW;
          const T* w_plane = w + ((static_cast<std::size_t>(ci) * d.c_out + co) * d.kh) * d.kw;
          for (int kh = 0; kh < d.kh; ++kh) {
            const int oh = ih * d.stride - d.pad + kh;
            if (oh < 0 || oh >= OH) continue;
            for (int kw = 0; kw < d.kw; ++kw) {
              const int ow = iw * d.stride - d.pad + kw;
              if (ow < 0 || ow >= OW) continue;
              s += dy_plane[static_cast<std::size_t>(oh) * OW + ow] *
                   w_plane[static_cast<std::size_t>(kh) * d.kw + kw];
            }
          }
        }
        dx_plane[static_cast<std::size_t>(ih) * d.w + iw] = s;
      }
  };
  const long total = static_cast<long>(d.n) * d.c_in;
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < total; ++i) one(i);
  } else {
    for (long i = 0; i < total; ++i) one(i);
  }
}

template <class T>
void tconv2d_backward_weights(const T* x, const T* dy, T* dw, T* db, const TConvDims& d,
                              Par par = Par::omp) {
  const int OH = d.oh(), OW = d.ow();
  const long wsize = static_cast<long>(d.c_in) * d.c_out * d.kh * d.kw;
  auto one = [&](long widx) {
    const int kw = static_cast<int>(widx % d.kw);
    const int kh = static_cast<int>((widx / d.kw) % d.kh);
    const int co = static_cast<int>((widx / (d.kw * d.kh)) % d.c_out);
    const int ci = static_cast<int>(widx / (static_cast<long>(d.kw) * d.kh * d.c_out));
    T s = T(0);
    for (int n = 0; n < d.n; ++n) {
      const T* x_plane = x + static_cast<std::size_t>(n) * d.in_size() +
                         static_cast<std::size_t>(ci) * d.h * d.w;
      const T* dy_plane = dy + static_cast<std::size_t>(n) * d.out_size() +
                          static_cast<std::size_t>(co) * OH * OW;
      for (int ih = 0; ih < d.h; ++ih) {
        const int oh = ih * d.stride - d.pad + kh;
        if (oh < 0 || oh >= OH) continue;
        for (int iw = 0; iw < d.w; ++iw) {
          const int ow = iw * d.stride - d.pad + kw;
          if (ow < 0 || ow >= OW) continue;
          s += x_plane[static_cast<std::size_t>(ih) * d.w + iw] *
               dy_plane[static_cast<std::size_t>(oh) * OW + ow];
        }
      }
    }
    dw[widx] += s;
  };
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < wsize; ++i) one(i);
  } else {
    for (long i = 0; i < wsize; ++i) one(i);
  }
  // db: one pass per output channel, fixed order.
  auto bias_one = [&](int co) {
    T s = T(0);
    for (int n = 0; n < d.n; ++n) {
      const T* dy_plane = dy + static_cast<std::size_t>(n) * d.out_size() +
                          static_cast<std::size_t>(co) * OH * OW;
      for (int p = 0; p < OH * OW; ++p) s += dy_plane[p];
    }
    db[co] += s;
  };
  if (par == Par::omp) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < d.c_out; ++co) bias_one(co);
  } else {
    for (int co = 0; co < d.c_out; ++co) bias_one(co);
  }
}

}  // namespace pgrl::nn::kern
