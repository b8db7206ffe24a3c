// Differentiable operators: 2-D/depthwise/1-D convolution, batch
// normalization, ReLU6, global average pooling, softmax and cross-entropy.
// Parameters and activations are 32-bit; every reduction accumulates in
// 64-bit. Layer classes cache their forward context and expose exact
// reverse-mode gradients.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "speechfcn/common.hpp"
#include "speechfcn/tensor.hpp"

namespace speechfcn {

enum class Padding { same, valid };
enum class Mode { train, infer };

// A learnable tensor with its gradient and RMSProp accumulator.
template <class T>
struct ParameterT {
  TensorT<T> value;
  TensorT<T> gradient;
  TensorT<T> rms_accumulator;

  ParameterT() = default;
  explicit ParameterT(TensorT<T> v)
      : value(std::move(v)), gradient(value.shape()), rms_accumulator(value.shape()) {}

  void zero_grad() { gradient.fill(T(0)); }
};

using Parameter = ParameterT<float>;

namespace conv_detail {

struct Extents {
  long out = 0;
  long pad_lo = 0;
};

// Same padding: out = ceil(in/stride), zero padding split evenly with the
// extra element on the high-index side. Valid: no padding.
inline Extents resolve(long in, long k, long stride, Padding pad) {
  Extents e;
  if (pad == Padding::same) {
    e.out = (in + stride - 1) / stride;
    const long total = std::max((e.out - 1) * stride + k - in, 0L);
    e.pad_lo = total / 2;
  } else {
    if (in < k) throw Error(ErrorKind::shape, "valid padding requires input >= kernel");
    e.out = (in - k) / stride + 1;
    e.pad_lo = 0;
  }
  return e;
}

}  // namespace conv_detail

// ---------------------------------------------------------------------------
// conv2d core on (N, C, H, W) tensors
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& k, long stride, Padding pad) {
  if (x.rank() != 4 || k.rank() != 4) throw Error(ErrorKind::shape, "conv2d: need (N,C,H,W) input and (Co,Ci,kh,kw) kernels");
  if (stride < 1) throw Error(ErrorKind::shape, "conv2d: stride must be >= 1");
  const long n = x.extent(0), ci = x.extent(1), h = x.extent(2), w = x.extent(3);
  const long co = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  if (k.extent(1) != ci) throw Error(ErrorKind::shape, "conv2d: kernel channel mismatch");

  const auto eh = conv_detail::resolve(h, kh, stride, pad);
  const auto ew = conv_detail::resolve(w, kw, stride, pad);
  TensorT<T> y({n, co, eh.out, ew.out});

  if (kh == 1 && kw == 1 && stride == 1) {
    // Pointwise: y[n][co][:] = sum_ci k[co][ci] * x[n][ci][:]
    const long hw = h * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (long b = 0; b < n; ++b)
      for (long o = 0; o < co; ++o) {
        std::vector<double> acc(static_cast<std::size_t>(hw), 0.0);
        for (long c = 0; c < ci; ++c) {
          const double kv = static_cast<double>(k[o * ci + c]);
          const T* xs = x.data() + (b * ci + c) * hw;
          for (long i = 0; i < hw; ++i) acc[static_cast<std::size_t>(i)] += kv * static_cast<double>(xs[i]);
        }
        T* ys = y.data() + (b * co + o) * hw;
        for (long i = 0; i < hw; ++i) ys[i] = static_cast<T>(acc[static_cast<std::size_t>(i)]);
      }
    return y;
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (long b = 0; b < n; ++b)
    for (long o = 0; o < co; ++o)
      for (long oh = 0; oh < eh.out; ++oh)
        for (long ow = 0; ow < ew.out; ++ow) {
          double acc = 0.0;
          for (long c = 0; c < ci; ++c)
            for (long r = 0; r < kh; ++r) {
              const long ih = oh * stride - eh.pad_lo + r;
              if (ih < 0 || ih >= h) continue;
              for (long s = 0; s < kw; ++s) {
                const long iw = ow * stride - ew.pad_lo + s;
                if (iw < 0 || iw >= w) continue;
                acc += static_cast<double>(k.at(o, c, r, s)) * static_cast<double>(x.at(b, c, ih, iw));
              }
            }
          y.at(b, o, oh, ow) = static_cast<T>(acc);
        }
  return y;
}

template <class T>
TensorT<T> conv2d_backward_input(const TensorT<T>& gy, const TensorT<T>& k, const std::vector<long>& x_shape,
                                 long stride, Padding pad) {
  const long n = x_shape[0], ci = x_shape[1], h = x_shape[2], w = x_shape[3];
  const long co = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  const auto eh = conv_detail::resolve(h, kh, stride, pad);
  const auto ew = conv_detail::resolve(w, kw, stride, pad);
  TensorT<T> gx({n, ci, h, w});

  if (kh == 1 && kw == 1 && stride == 1) {
    const long hw = h * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (long b = 0; b < n; ++b)
      for (long c = 0; c < ci; ++c) {
        std::vector<double> acc(static_cast<std::size_t>(hw), 0.0);
        for (long o = 0; o < co; ++o) {
          const double kv = static_cast<double>(k[o * ci + c]);
          const T* gs = gy.data() + (b * co + o) * hw;
          for (long i = 0; i < hw; ++i) acc[static_cast<std::size_t>(i)] += kv * static_cast<double>(gs[i]);
        }
        T* out = gx.data() + (b * ci + c) * hw;
        for (long i = 0; i < hw; ++i) out[i] = static_cast<T>(acc[static_cast<std::size_t>(i)]);
      }
    return gx;
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (long b = 0; b < n; ++b)
    for (long c = 0; c < ci; ++c)
      for (long ih = 0; ih < h; ++ih)
        for (long iw = 0; iw < w; ++iw) {
          double acc = 0.0;
          for (long o = 0; o < co; ++o)
            for (long r = 0; r < kh; ++r) {
              const long num = ih + eh.pad_lo - r;
              if (num % stride != 0) continue;
              const long oh = num / stride;
              if (oh < 0 || oh >= eh.out) continue;
              for (long s = 0; s < kw; ++s) {
                const long numw = iw + ew.pad_lo - s;
                if (numw % stride != 0) continue;
                const long ow = numw / stride;
                if (ow < 0 || ow >= ew.out) continue;
                acc += static_cast<double>(k.at(o, c, r, s)) * static_cast<double>(gy.at(b, o, oh, ow));
              }
            }
          gx.at(b, c, ih, iw) = static_cast<T>(acc);
        }
  return gx;
}

template <class T>
TensorT<T> conv2d_backward_kernel(const TensorT<T>& gy, const TensorT<T>& x, const std::vector<long>& k_shape,
                                  long stride, Padding pad) {
  const long n = x.extent(0), ci = x.extent(1), h = x.extent(2), w = x.extent(3);
  const long co = k_shape[0], kh = k_shape[2], kw = k_shape[3];
  const auto eh = conv_detail::resolve(h, kh, stride, pad);
  const auto ew = conv_detail::resolve(w, kw, stride, pad);
  TensorT<T> gk({co, ci, kh, kw});

  if (kh == 1 && kw == 1 && stride == 1) {
    const long hw = h * w;
#pragma omp parallel for schedule(static)
    for (long o = 0; o < co; ++o)
      for (long c = 0; c < ci; ++c) {
        double acc = 0.0;
        for (long b = 0; b < n; ++b) {
          const T* gs = gy.data() + (b * co + o) * hw;
          const T* xs = x.data() + (b * ci + c) * hw;
          for (long i = 0; i < hw; ++i) acc += static_cast<double>(gs[i]) * static_cast<double>(xs[i]);
        }
        gk[o * ci + c] = static_cast<T>(acc);
      }
    return gk;
  }

#pragma omp parallel for schedule(static)
  for (long o = 0; o < co; ++o)
    for (long c = 0; c < ci; ++c)
      for (long r = 0; r < kh; ++r)
        for (long s = 0; s < kw; ++s) {
          double acc = 0.0;
          for (long b = 0; b < n; ++b)
            for (long oh = 0; oh < eh.out; ++oh) {
              const long ih = oh * stride - eh.pad_lo + r;
              if (ih < 0 || ih >= h) continue;
              for (long ow = 0; ow < ew.out; ++ow) {
                const long iw = ow * stride - ew.pad_lo + s;
                if (iw < 0 || iw >= w) continue;
                acc += static_cast<double>(gy.at(b, o, oh, ow)) * static_cast<double>(x.at(b, c, ih, iw));
              }
            }
          gk.at(o, c, r, s) = static_cast<T>(acc);
        }
  return gk;
}

// ---------------------------------------------------------------------------
// depthwise conv core on (N, C, H, W); kernels (C, kh, kw)
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> depthwise_forward(const TensorT<T>& x, const TensorT<T>& k, long stride, Padding pad) {
  if (x.rank() != 4 || k.rank() != 3) throw Error(ErrorKind::shape, "depthwise: need (N,C,H,W) input and (C,kh,kw) kernels");
  if (stride < 1) throw Error(ErrorKind::shape, "depthwise: stride must be >= 1");
  const long n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
  if (k.extent(0) != c) throw Error(ErrorKind::shape, "depthwise: kernel channel mismatch");
  const long kh = k.extent(1), kw = k.extent(2);
  const auto eh = conv_detail::resolve(h, kh, stride, pad);
  const auto ew = conv_detail::resolve(w, kw, stride, pad);
  TensorT<T> y({n, c, eh.out, ew.out});

#pragma omp parallel for collapse(2) schedule(static)
  for (long b = 0; b < n; ++b)
    for (long ch = 0; ch < c; ++ch)
      for (long oh = 0; oh < eh.out; ++oh)
        for (long ow = 0; ow < ew.out; ++ow) {
          double acc = 0.0;
          for (long r = 0; r < kh; ++r) {
            const long ih = oh * stride - eh.pad_lo + r;
            if (ih < 0 || ih >= h) continue;
            for (long s = 0; s < kw; ++s) {
              const long iw = ow * stride - ew.pad_lo + s;
              if (iw < 0 || iw >= w) continue;
              acc += static_cast<double>(k.at(ch, r, s)) * static_cast<double>(x.at(b, ch, ih, iw));
            }
          }
          y.at(b, ch, oh, ow) = static_cast<T>(acc);
        }
  return y;
}

template <class T>
TensorT<T> depthwise_backward_input(const TensorT<T>& gy, const TensorT<T>& k, const std::vector<long>& x_shape,
                                    long stride, Padding pad) {
  const long n = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3];
  const long kh = k.extent(1), kw = k.extent(2);
  const auto eh = conv_detail::resolve(h, kh, stride, pad);
  const auto ew = conv_detail::resolve(w, kw, stride, pad);
  TensorT<T> gx({n, c, h, w});

#pragma omp parallel for collapse(2) schedule(static)
  for (long b = 0; b < n; ++b)
    for (long ch = 0; ch < c; ++ch)
      for (long ih = 0; ih < h; ++ih)
        for (long iw = 0; iw < w; ++iw) {
          double acc = 0.0;
          for (long r = 0; r < kh; ++r) {
            const long num = ih + eh.pad_lo - r;
            if (num % stride != 0) continue;
            const long oh = num / stride;
            if (oh < 0 || oh >= eh.out) continue;
            for (long s = 0; s < kw; ++s) {
              const long numw = iw + ew.pad_lo - s;
              if (numw % stride != 0) continue;
              const long ow = numw / stride;
              if (ow < 0 || ow >= ew.out) continue;
              acc += static_cast<double>(k.at(ch, r, s)) * static_cast<double>(gy.at(b, ch, oh, ow));
            }
          }
          gx.at(b, ch, ih, iw) = static_cast<T>(acc);
        }
  return gx;
}

template <class T>
TensorT<T> depthwise_backward_kernel(const TensorT<T>& gy, const TensorT<T>& x, const std::vector<long>& k_shape,
                                     long stride, Padding pad) {
  const long n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
  const long kh = k_shape[1], kw = k_shape[2];
  const auto eh = conv_detail::resolve(h, kh, stride, pad);
  const auto ew = conv_detail::resolve(w, kw, stride, pad);
  TensorT<T> gk({c, kh, kw});

#pragma omp parallel for schedule(static)
  for (long ch = 0; ch < c; ++ch)
    for (long r = 0; r < kh; ++r)
      for (long s = 0; s < kw; ++s) {
        double acc = 0.0;
        for (long b = 0; b < n; ++b)
          for (long oh = 0; oh < eh.out; ++oh) {
            const long ih = oh * stride - eh.pad_lo + r;
            if (ih < 0 || ih >= h) continue;
            for (long ow = 0; ow < ew.out; ++ow) {
              const long iw = ow * stride - ew.pad_lo + s;
              if (iw < 0 || iw >= w) continue;
              acc += static_cast<double>(gy.at(b, ch, oh, ow)) * static_cast<double>(x.at(b, ch, ih, iw));
            }
          }
        gk.at(ch, r, s) = static_cast<T>(acc);
      }
  return gk;
}

// ---------------------------------------------------------------------------
// Spec-shaped functional wrappers: rank-3 (C,H,W) single-sample views.
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
TensorT<T> lift_to_batch(const TensorT<T>& x) {
  std::vector<long> s = {1};
  for (long e : x.shape()) s.push_back(e);
  return TensorT<T>(s, x.storage());
}

template <class T>
TensorT<T> drop_batch(const TensorT<T>& x) {
  std::vector<long> s(x.shape().begin() + 1, x.shape().end());
  return TensorT<T>(s, x.storage());
}

}  // namespace detail

template <class T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& kernels, long stride, Padding pad) {
  if (x.rank() == 4) return conv2d_forward(x, kernels, stride, pad);
  if (x.rank() != 3) throw Error(ErrorKind::shape, "conv2d: input must be (C,H,W) or (N,C,H,W)");
  return detail::drop_batch(conv2d_forward(detail::lift_to_batch(x), kernels, stride, pad));
}

template <class T>
TensorT<T> depthwise_conv2d(const TensorT<T>& x, const TensorT<T>& kernels, long stride, Padding pad) {
  if (x.rank() == 4) return depthwise_forward(x, kernels, stride, pad);
  if (x.rank() != 3) throw Error(ErrorKind::shape, "depthwise_conv2d: input must be (C,H,W) or (N,C,H,W)");
  return detail::drop_batch(depthwise_forward(detail::lift_to_batch(x), kernels, stride, pad));
}

// ---------------------------------------------------------------------------
// batch normalization
// ---------------------------------------------------------------------------

inline constexpr double kBatchNormEps = 1e-3;
inline constexpr double kBatchNormMomentum = 0.99;

// Functional batchnorm over (C,H,W) or (N,C,H,W). Train mode normalizes by
// batch statistics over (N,H,W) and updates the running stats in place;
// infer mode uses the running stats.
template <class T>
TensorT<T> batchnorm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                     TensorT<T>& running_mean, TensorT<T>& running_var, Mode mode,
                     double eps = kBatchNormEps, double momentum = kBatchNormMomentum) {
  const bool batched = x.rank() == 4;
  if (!batched && x.rank() != 3) throw Error(ErrorKind::shape, "batchnorm: input must be (C,H,W) or (N,C,H,W)");
  const TensorT<T> xb = batched ? x : detail::lift_to_batch(x);
  const long n = xb.extent(0), c = xb.extent(1), hw = xb.extent(2) * xb.extent(3);
  if (gamma.size() != c || beta.size() != c || running_mean.size() != c || running_var.size() != c)
    throw Error(ErrorKind::shape, "batchnorm: per-channel parameter length mismatch");

  TensorT<T> y(xb.shape());
  for (long ch = 0; ch < c; ++ch) {
    double mean, var;
    if (mode == Mode::train) {
      double acc = 0.0;
      for (long b = 0; b < n; ++b) {
        const T* xs = xb.data() + (b * c + ch) * hw;
        for (long i = 0; i < hw; ++i) acc += static_cast<double>(xs[i]);
      }
      mean = acc / static_cast<double>(n * hw);
      double vacc = 0.0;
      for (long b = 0; b < n; ++b) {
        const T* xs = xb.data() + (b * c + ch) * hw;
        for (long i = 0; i < hw; ++i) {
          const double d = static_cast<double>(xs[i]) - mean;
          vacc += d * d;
        }
      }
      var = vacc / static_cast<double>(n * hw);
      running_mean[ch] = static_cast<T>(momentum * static_cast<double>(running_mean[ch]) + (1.0 - momentum) * mean);
      running_var[ch] = static_cast<T>(momentum * static_cast<double>(running_var[ch]) + (1.0 - momentum) * var);
    } else {
      mean = static_cast<double>(running_mean[ch]);
      var = static_cast<double>(running_var[ch]);
    }
    const double inv = 1.0 / std::sqrt(var + eps);
    const double g = static_cast<double>(gamma[ch]), bta = static_cast<double>(beta[ch]);
    for (long b = 0; b < n; ++b) {
      const T* xs = xb.data() + (b * c + ch) * hw;
      T* ys = y.data() + (b * c + ch) * hw;
      for (long i = 0; i < hw; ++i) ys[i] = static_cast<T>((static_cast<double>(xs[i]) - mean) * inv * g + bta);
    }
  }
  return batched ? y : detail::drop_batch(y);
}

// ---------------------------------------------------------------------------
// elementwise / small ops
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> relu6(const TensorT<T>& x) {
  if (x.size() == 0) throw Error(ErrorKind::shape, "relu6: empty input");
  TensorT<T> y(x.shape());
  for (long i = 0; i < x.size(); ++i) y[i] = std::min(std::max(x[i], T(0)), T(6));
  return y;
}

// Shift-invariant softmax: subtract the max before exponentiating.
template <class T>
std::vector<T> softmax(const std::vector<T>& logits) {
  if (logits.empty()) throw Error(ErrorKind::shape, "softmax: empty input");
  T mx = logits[0];
  for (T v : logits) mx = std::max(mx, v);
  double denom = 0.0;
  std::vector<double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i] - mx));
    denom += e[i];
  }
  std::vector<T> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = static_cast<T>(e[i] / denom);
  return p;
}

template <class T>
double cross_entropy(const std::vector<T>& probs, int true_class) {
  if (probs.empty()) throw Error(ErrorKind::shape, "cross_entropy: empty input");
  if (true_class < 0 || true_class >= static_cast<int>(probs.size()))
    throw Error(ErrorKind::shape, "cross_entropy: class index out of range");
  const double p = std::max(static_cast<double>(probs[static_cast<std::size_t>(true_class)]), 1e-12);
  return -std::log(p);
}

// conv1d with same padding on (C_in, L) or (N, C_in, L); kernels (Co, Ci, k),
// optional per-output-channel bias.
template <class T>
TensorT<T> conv1d(const TensorT<T>& x, const TensorT<T>& kernels, const TensorT<T>* bias = nullptr) {
  const bool batched = x.rank() == 3;
  if (!batched && x.rank() != 2) throw Error(ErrorKind::shape, "conv1d: input must be (C,L) or (N,C,L)");
  const TensorT<T> xb = batched ? x : detail::lift_to_batch(x);
  const long n = xb.extent(0), ci = xb.extent(1), len = xb.extent(2);
  if (kernels.rank() != 3 || kernels.extent(1) != ci) throw Error(ErrorKind::shape, "conv1d: kernel shape mismatch");
  const long co = kernels.extent(0), k = kernels.extent(2);
  if (bias && bias->size() != co) throw Error(ErrorKind::shape, "conv1d: bias length mismatch");
  const auto e = conv_detail::resolve(len, k, 1, Padding::same);

  TensorT<T> y({n, co, len});
  for (long b = 0; b < n; ++b)
    for (long o = 0; o < co; ++o)
      for (long i = 0; i < len; ++i) {
        double acc = bias ? static_cast<double>((*bias)[o]) : 0.0;
        for (long c = 0; c < ci; ++c)
          for (long r = 0; r < k; ++r) {
            const long j = i - e.pad_lo + r;
            if (j < 0 || j >= len) continue;
            acc += static_cast<double>(kernels.at(o, c, r)) * static_cast<double>(xb.at(b, c, j));
          }
        y.at(b, o, i) = static_cast<T>(acc);
      }
  return batched ? y : detail::drop_batch(y);
}

// ---------------------------------------------------------------------------
// layer classes with cached forward context and exact backward
// ---------------------------------------------------------------------------

// Uniform fan-in initialization: U(-sqrt(1/fan_in), +sqrt(1/fan_in)).
template <class T>
void init_uniform_fan_in(TensorT<T>& w, long fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (long i = 0; i < w.size(); ++i) w[i] = static_cast<T>(rng.uniform(-bound, bound));
}

template <class T>
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(long out_channels, long in_channels, long kh, long kw, long stride, Padding pad, Rng& rng)
      : w(TensorT<T>({out_channels, in_channels, kh, kw})), stride_(stride), pad_(pad) {
    init_uniform_fan_in(w.value, in_channels * kh * kw, rng);
  }

  TensorT<T> forward(const TensorT<T>& x, bool cache) {
    if (cache) {
      x_ = x;
      has_forward_ = true;
    }
    return conv2d_forward(x, w.value, stride_, pad_);
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    if (!has_forward_) throw Error(ErrorKind::state, "conv2d backward before forward");
    const TensorT<T> gk = conv2d_backward_kernel(gy, x_, w.value.shape(), stride_, pad_);
    for (long i = 0; i < gk.size(); ++i) w.gradient[i] += gk[i];
    return conv2d_backward_input(gy, w.value, x_.shape(), stride_, pad_);
  }

  ParameterT<T> w;
  long stride() const { return stride_; }

 private:
  long stride_ = 1;
  Padding pad_ = Padding::same;
  TensorT<T> x_;
  bool has_forward_ = false;
};

template <class T>
class DepthwiseConv2dLayer {
 public:
  DepthwiseConv2dLayer() = default;
  DepthwiseConv2dLayer(long channels, long kh, long kw, long stride, Padding pad, Rng& rng)
      : w(TensorT<T>({channels, kh, kw})), stride_(stride), pad_(pad) {
    init_uniform_fan_in(w.value, kh * kw, rng);
  }

  TensorT<T> forward(const TensorT<T>& x, bool cache) {
    if (cache) {
      x_ = x;
      has_forward_ = true;
    }
    return depthwise_forward(x, w.value, stride_, pad_);
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    if (!has_forward_) throw Error(ErrorKind::state, "depthwise backward before forward");
    const TensorT<T> gk = depthwise_backward_kernel(gy, x_, w.value.shape(), stride_, pad_);
    for (long i = 0; i < gk.size(); ++i) w.gradient[i] += gk[i];
    return depthwise_backward_input(gy, w.value, x_.shape(), stride_, pad_);
  }

  ParameterT<T> w;
  long stride() const { return stride_; }

 private:
  long stride_ = 1;
  Padding pad_ = Padding::same;
  TensorT<T> x_;
  bool has_forward_ = false;
};

template <class T>
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  explicit BatchNormLayer(long channels)
      : gamma(TensorT<T>::full({channels}, T(1))),
        beta(TensorT<T>({channels})),
        running_mean({channels}),
        running_var(TensorT<T>::full({channels}, T(1))) {}

  TensorT<T> forward(const TensorT<T>& x, Mode mode, bool cache) {
    const long n = x.extent(0), c = x.extent(1), hw = x.extent(2) * x.extent(3);
    if (gamma.value.size() != c) throw Error(ErrorKind::shape, "batchnorm: channel mismatch");

    TensorT<T> xhat(x.shape());
    std::vector<double> invstd(static_cast<std::size_t>(c));
    for (long ch = 0; ch < c; ++ch) {
      double mean, var;
      if (mode == Mode::train) {
        double acc = 0.0;
        for (long b = 0; b < n; ++b) {
          const T* xs = x.data() + (b * c + ch) * hw;
          for (long i = 0; i < hw; ++i) acc += static_cast<double>(xs[i]);
        }
        mean = acc / static_cast<double>(n * hw);
        double vacc = 0.0;
        for (long b = 0; b < n; ++b) {
          const T* xs = x.data() + (b * c + ch) * hw;
          for (long i = 0; i < hw; ++i) {
            const double d = static_cast<double>(xs[i]) - mean;
            vacc += d * d;
          }
        }
        var = vacc / static_cast<double>(n * hw);
        running_mean[ch] = static_cast<T>(kBatchNormMomentum * static_cast<double>(running_mean[ch]) + (1.0 - kBatchNormMomentum) * mean);
        running_var[ch] = static_cast<T>(kBatchNormMomentum * static_cast<double>(running_var[ch]) + (1.0 - kBatchNormMomentum) * var);
      } else {
        mean = static_cast<double>(running_mean[ch]);
        var = static_cast<double>(running_var[ch]);
      }
      invstd[static_cast<std::size_t>(ch)] = 1.0 / std::sqrt(var + kBatchNormEps);
      for (long b = 0; b < n; ++b) {
        const T* xs = x.data() + (b * c + ch) * hw;
        T* hs = xhat.data() + (b * c + ch) * hw;
        for (long i = 0; i < hw; ++i)
          hs[i] = static_cast<T>((static_cast<double>(xs[i]) - mean) * invstd[static_cast<std::size_t>(ch)]);
      }
    }

    TensorT<T> y(x.shape());
    for (long ch = 0; ch < c; ++ch) {
      const double g = static_cast<double>(gamma.value[ch]), bta = static_cast<double>(beta.value[ch]);
      for (long b = 0; b < n; ++b) {
        const T* hs = xhat.data() + (b * c + ch) * hw;
        T* ys = y.data() + (b * c + ch) * hw;
        for (long i = 0; i < hw; ++i) ys[i] = static_cast<T>(static_cast<double>(hs[i]) * g + bta);
      }
    }

    if (cache) {
      xhat_ = std::move(xhat);
      invstd_ = std::move(invstd);
      mode_ = mode;
      has_forward_ = true;
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    if (!has_forward_) throw Error(ErrorKind::state, "batchnorm backward before forward");
    const long n = gy.extent(0), c = gy.extent(1), hw = gy.extent(2) * gy.extent(3);
    const double m = static_cast<double>(n * hw);
    TensorT<T> gx(gy.shape());

#pragma omp parallel for schedule(static)
    for (long ch = 0; ch < c; ++ch) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (long b = 0; b < n; ++b) {
        const T* gs = gy.data() + (b * c + ch) * hw;
        const T* hs = xhat_.data() + (b * c + ch) * hw;
        for (long i = 0; i < hw; ++i) {
          sum_gy += static_cast<double>(gs[i]);
          sum_gy_xhat += static_cast<double>(gs[i]) * static_cast<double>(hs[i]);
        }
      }
      gamma.gradient[ch] += static_cast<T>(sum_gy_xhat);
      beta.gradient[ch] += static_cast<T>(sum_gy);

      const double g = static_cast<double>(gamma.value[ch]);
      const double inv = invstd_[static_cast<std::size_t>(ch)];
      if (mode_ == Mode::train) {
        const double mean_gy = sum_gy / m;
        const double mean_gy_xhat = sum_gy_xhat / m;
        for (long b = 0; b < n; ++b) {
          const T* gs = gy.data() + (b * c + ch) * hw;
          const T* hs = xhat_.data() + (b * c + ch) * hw;
          T* os = gx.data() + (b * c + ch) * hw;
          for (long i = 0; i < hw; ++i)
            os[i] = static_cast<T>(g * inv *
                                   (static_cast<double>(gs[i]) - mean_gy - static_cast<double>(hs[i]) * mean_gy_xhat));
        }
      } else {
        for (long b = 0; b < n; ++b) {
          const T* gs = gy.data() + (b * c + ch) * hw;
          T* os = gx.data() + (b * c + ch) * hw;
          for (long i = 0; i < hw; ++i) os[i] = static_cast<T>(g * inv * static_cast<double>(gs[i]));
        }
      }
    }
    return gx;
  }

  ParameterT<T> gamma, beta;
  TensorT<T> running_mean, running_var;

 private:
  TensorT<T> xhat_;
  std::vector<double> invstd_;
  Mode mode_ = Mode::train;
  bool has_forward_ = false;
};

template <class T>
class Relu6Layer {
 public:
  TensorT<T> forward(const TensorT<T>& x, bool cache) {
    if (cache) {
      x_ = x;
      has_forward_ = true;
    }
    return relu6(x);
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    if (!has_forward_) throw Error(ErrorKind::state, "relu6 backward before forward");
    TensorT<T> gx(gy.shape());
    for (long i = 0; i < gy.size(); ++i) gx[i] = (x_[i] > T(0) && x_[i] < T(6)) ? gy[i] : T(0);
    return gx;
  }

 private:
  TensorT<T> x_;
  bool has_forward_ = false;
};

// 1-D convolution layer on (N, C, L) with same padding and bias; the model
// head uses k = 1.
template <class T>
class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(long out_channels, long in_channels, long k, Rng& rng)
      : w(TensorT<T>({out_channels, in_channels, k})), b(TensorT<T>({out_channels})) {
    init_uniform_fan_in(w.value, in_channels * k, rng);
  }

  TensorT<T> forward(const TensorT<T>& x, bool cache) {
    if (cache) {
      x_ = x;
      has_forward_ = true;
    }
    return conv1d(x, w.value, &b.value);
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    if (!has_forward_) throw Error(ErrorKind::state, "conv1d backward before forward");
    const long n = x_.extent(0), ci = x_.extent(1), len = x_.extent(2);
    const long co = w.value.extent(0), k = w.value.extent(2);
    const auto e = conv_detail::resolve(len, k, 1, Padding::same);

    for (long o = 0; o < co; ++o) {
      double acc = 0.0;
      for (long bt = 0; bt < n; ++bt)
        for (long i = 0; i < len; ++i) acc += static_cast<double>(gy.at(bt, o, i));
      b.gradient[o] += static_cast<T>(acc);
      for (long c = 0; c < ci; ++c)
        for (long r = 0; r < k; ++r) {
          double wacc = 0.0;
          for (long bt = 0; bt < n; ++bt)
            for (long i = 0; i < len; ++i) {
              const long j = i - e.pad_lo + r;
              if (j < 0 || j >= len) continue;
              wacc += static_cast<double>(gy.at(bt, o, i)) * static_cast<double>(x_.at(bt, c, j));
            }
          w.gradient.at(o, c, r) += static_cast<T>(wacc);
        }
    }

    TensorT<T> gx({n, ci, len});
    for (long bt = 0; bt < n; ++bt)
      for (long c = 0; c < ci; ++c)
        for (long j = 0; j < len; ++j) {
          double acc = 0.0;
          for (long o = 0; o < co; ++o)
            for (long r = 0; r < k; ++r) {
              const long i = j + e.pad_lo - r;
              if (i < 0 || i >= len) continue;
              acc += static_cast<double>(w.value.at(o, c, r)) * static_cast<double>(gy.at(bt, o, i));
            }
          gx.at(bt, c, j) = static_cast<T>(acc);
        }
    return gx;
  }

  ParameterT<T> w, b;

 private:
  TensorT<T> x_;
  bool has_forward_ = false;
};

// Mean softmax cross-entropy over a batch of logits (N, K).
template <class T>
class SoftmaxCrossEntropy {
 public:
  double forward(const TensorT<T>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw Error(ErrorKind::shape, "loss: logits must be (N,K)");
    const long n = logits.extent(0), k = logits.extent(1);
    if (static_cast<long>(labels.size()) != n) throw Error(ErrorKind::shape, "loss: label count mismatch");
    probs_ = TensorT<T>({n, k});
    labels_ = labels;
    double total = 0.0;
    for (long b = 0; b < n; ++b) {
      std::vector<T> row(static_cast<std::size_t>(k));
      for (long j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = logits.at(b, j);
      const std::vector<T> p = softmax(row);
      for (long j = 0; j < k; ++j) probs_.at(b, j) = p[static_cast<std::size_t>(j)];
      total += cross_entropy(p, labels[static_cast<std::size_t>(b)]);
    }
    has_forward_ = true;
    return total / static_cast<double>(n);
  }

  // d(mean loss)/d(logits) = (softmax - onehot) / N.
  TensorT<T> backward() const {
    if (!has_forward_) throw Error(ErrorKind::state, "loss backward before forward");
    const long n = probs_.extent(0), k = probs_.extent(1);
    TensorT<T> g({n, k});
    for (long b = 0; b < n; ++b)
      for (long j = 0; j < k; ++j) {
        const double onehot = labels_[static_cast<std::size_t>(b)] == j ? 1.0 : 0.0;
        g.at(b, j) = static_cast<T>((static_cast<double>(probs_.at(b, j)) - onehot) / static_cast<double>(n));
      }
    return g;
  }

  const TensorT<T>& probs() const { return probs_; }

 private:
  TensorT<T> probs_;
  std::vector<int> labels_;
  bool has_forward_ = false;
};

}  // namespace speechfcn
