// Iterative radix-2 FFT used by the spectral front end.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "speechfcn/common.hpp"

namespace speechfcn {

class Radix2Fft {
 public:
  explicit Radix2Fft(int n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0) throw Error(ErrorKind::shape, "FFT size must be a power of two >= 2");
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    log2n_ = log2n;

    bitrev_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < log2n; ++b)
        if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
      bitrev_[static_cast<std::size_t>(i)] = r;
    }

    twiddles_.resize(static_cast<std::size_t>(n / 2));
    const double two_pi = 6.283185307179586476925287;
    for (int k = 0; k < n / 2; ++k) {
      const double a = -two_pi * k / n;
      twiddles_[static_cast<std::size_t>(k)] = {std::cos(a), std::sin(a)};
    }
  }

  int size() const { return n_; }

  // In-place forward DFT of a length-n complex buffer.
  void forward(std::vector<std::complex<double>>& a) const {
    if (static_cast<int>(a.size()) != n_) throw Error(ErrorKind::shape, "FFT buffer length mismatch");
    for (int i = 0; i < n_; ++i) {
      const int j = bitrev_[static_cast<std::size_t>(i)];
      if (i < j) std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    }
    for (int len = 2; len <= n_; len <<= 1) {
      const int half = len >> 1;
      const int step = n_ / len;
      for (int start = 0; start < n_; start += len) {
        for (int k = 0; k < half; ++k) {
          const std::complex<double> w = twiddles_[static_cast<std::size_t>(k * step)];
          std::complex<double>& u = a[static_cast<std::size_t>(start + k)];
          std::complex<double>& v = a[static_cast<std::size_t>(start + k + half)];
          const std::complex<double> t = v * w;
          v = u - t;
          u += t;
        }
      }
    }
  }

  // Power spectrum of a real frame: |X_k|^2 for k = 0..n/2.
  std::vector<double> power_spectrum(const std::vector<double>& frame) const {
    if (static_cast<int>(frame.size()) != n_) throw Error(ErrorKind::shape, "frame length mismatch");
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) buf[static_cast<std::size_t>(i)] = {frame[static_cast<std::size_t>(i)], 0.0};
    forward(buf);
    std::vector<double> out(static_cast<std::size_t>(n_ / 2 + 1));
    for (int k = 0; k <= n_ / 2; ++k) out[static_cast<std::size_t>(k)] = std::norm(buf[static_cast<std::size_t>(k)]);
    return out;
  }

 private:
  int n_ = 0;
  int log2n_ = 0;
  std::vector<int> bitrev_;
  std::vector<std::complex<double>> twiddles_;
};

}  // namespace speechfcn
