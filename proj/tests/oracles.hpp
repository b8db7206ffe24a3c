// Test-only oracles, implemented independently of the library code paths
// they check: naive O(n^2) transforms, brute-force convolution loops,
// central finite differences, exhaustive Otsu search, and a direct
// linear-interpolation resampler.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "speechfcn/tensor.hpp"

namespace oracles {

inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double two_pi = 6.283185307179586476925287;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = -two_pi * static_cast<double>(k) * static_cast<double>(i) / static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

// Orthonormal DCT-II by the direct cosine sum.
inline std::vector<double> naive_dct2(const std::vector<double>& x, int n_out) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(static_cast<std::size_t>(n_out));
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += x[static_cast<std::size_t>(i)] * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    out[static_cast<std::size_t>(k)] = scale * acc;
  }
  return out;
}

// Orthonormal DCT-III (the inverse of the above).
inline std::vector<double> naive_idct2(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size());
  std::vector<double> out(static_cast<std::size_t>(n));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    double acc = std::sqrt(1.0 / n) * c[0];
    for (int k = 1; k < n; ++k)
      acc += std::sqrt(2.0 / n) * c[static_cast<std::size_t>(k)] * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

// Brute-force conv2d on (C,H,W) with its own padding arithmetic.
template <class T>
speechfcn::TensorT<T> brute_conv2d(const speechfcn::TensorT<T>& x, const speechfcn::TensorT<T>& k, long stride,
                                   bool same_padding) {
  const long ci = x.extent(0), h = x.extent(1), w = x.extent(2);
  const long co = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  long oh, ow, ph, pw;
  if (same_padding) {
    oh = (h + stride - 1) / stride;
    ow = (w + stride - 1) / stride;
    ph = std::max((oh - 1) * stride + kh - h, 0L) / 2;
    pw = std::max((ow - 1) * stride + kw - w, 0L) / 2;
  } else {
    oh = (h - kh) / stride + 1;
    ow = (w - kw) / stride + 1;
    ph = pw = 0;
  }
  speechfcn::TensorT<T> y({co, oh, ow});
  for (long o = 0; o < co; ++o)
    for (long i = 0; i < oh; ++i)
      for (long j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (long c = 0; c < ci; ++c)
          for (long r = 0; r < kh; ++r)
            for (long s = 0; s < kw; ++s) {
              const long ih = i * stride - ph + r;
              const long iw = j * stride - pw + s;
              if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
              acc += static_cast<double>(k.at(o, c, r, s)) * static_cast<double>(x.at(c, ih, iw));
            }
        y.at(o, i, j) = static_cast<T>(acc);
      }
  return y;
}

template <class T>
speechfcn::TensorT<T> brute_depthwise(const speechfcn::TensorT<T>& x, const speechfcn::TensorT<T>& k, long stride,
                                      bool same_padding) {
  const long c = x.extent(0), h = x.extent(1), w = x.extent(2);
  const long kh = k.extent(1), kw = k.extent(2);
  long oh, ow, ph, pw;
  if (same_padding) {
    oh = (h + stride - 1) / stride;
    ow = (w + stride - 1) / stride;
    ph = std::max((oh - 1) * stride + kh - h, 0L) / 2;
    pw = std::max((ow - 1) * stride + kw - w, 0L) / 2;
  } else {
    oh = (h - kh) / stride + 1;
    ow = (w - kw) / stride + 1;
    ph = pw = 0;
  }
  speechfcn::TensorT<T> y({c, oh, ow});
  for (long ch = 0; ch < c; ++ch)
    for (long i = 0; i < oh; ++i)
      for (long j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (long r = 0; r < kh; ++r)
          for (long s = 0; s < kw; ++s) {
            const long ih = i * stride - ph + r;
            const long iw = j * stride - pw + s;
            if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
            acc += static_cast<double>(k.at(ch, r, s)) * static_cast<double>(x.at(ch, ih, iw));
          }
        y.at(ch, i, j) = static_cast<T>(acc);
      }
  return y;
}

// Central finite difference of a scalar functional at one tensor element.
inline double central_difference(speechfcn::TensorT<double>& x, long index, double h,
                                 const std::function<double()>& loss) {
  const double orig = x[index];
  x[index] = orig + h;
  const double up = loss();
  x[index] = orig - h;
  const double down = loss();
  x[index] = orig;
  return (up - down) / (2.0 * h);
}

inline double rel_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-3);
  return std::abs(analytic - numeric) / denom;
}

// Exhaustive Otsu: tries every cut between consecutive distinct values and
// maximizes w0*w1*(mu0-mu1)^2 computed directly on the values; ties resolve
// to the lowest cut.
inline std::vector<std::uint8_t> exhaustive_otsu_bits(const std::vector<double>& values) {
  std::vector<double> distinct = values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::uint8_t> bits(values.size(), 0);
  if (distinct.size() < 2) return bits;

  double best = -1.0;
  double best_cut = distinct[0];
  for (std::size_t d = 0; d + 1 < distinct.size(); ++d) {
    const double cut = distinct[d];  // class 0: v <= cut
    long n0 = 0, n1 = 0;
    double s0 = 0.0, s1 = 0.0;
    for (double v : values) {
      if (v <= cut) {
        ++n0;
        s0 += v;
      } else {
        ++n1;
        s1 += v;
      }
    }
    const double mu0 = s0 / n0, mu1 = s1 / n1;
    const double variance = static_cast<double>(n0) * static_cast<double>(n1) * (mu0 - mu1) * (mu0 - mu1);
    if (variance > best + 1e-12) {
      best = variance;
      best_cut = cut;
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) bits[i] = values[i] > best_cut ? 1 : 0;
  return bits;
}

// Direct reimplementation of the documented linear resampler contract.
inline std::vector<double> linear_resample(const std::vector<double>& x, int src_hz, int dst_hz) {
  const long n = static_cast<long>(x.size());
  const long out_n = std::llround(static_cast<double>(n) * dst_hz / src_hz);
  std::vector<double> out(static_cast<std::size_t>(out_n));
  for (long i = 0; i < out_n; ++i) {
    const double pos = static_cast<double>(i) * src_hz / dst_hz;
    const long i0 = static_cast<long>(pos);
    if (i0 >= n - 1) {
      out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(n - 1)];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out[static_cast<std::size_t>(i)] =
        x[static_cast<std::size_t>(i0)] * (1.0 - frac) + x[static_cast<std::size_t>(i0 + 1)] * frac;
  }
  return out;
}

}  // namespace oracles
