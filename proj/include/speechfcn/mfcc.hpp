// MFCC feature-map extraction: framing, Hann window, power spectra, Slaney
// mel filterbank, orthonormal DCT-II.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "speechfcn/common.hpp"
#include "speechfcn/fft.hpp"
#include "speechfcn/tensor.hpp"
#include "speechfcn/wav.hpp"

namespace speechfcn {

struct MfccConfig {
  int sample_rate_hz = 22050;
  int n_fft = 2048;  // window size in samples
  int hop = 512;     // step size in samples
  int n_mels = 128;
  int n_mfcc = 64;  // coefficients kept (the feature map's p)
  double fmin_hz = 0.0;
  double fmax_hz = 11025.0;  // sample_rate / 2
  bool centered = true;

  void validate() const {
    if (sample_rate_hz <= 0) throw Error(ErrorKind::shape, "sample_rate_hz must be positive");
    if (n_fft < 2) throw Error(ErrorKind::shape, "n_fft must be >= 2");
    if (hop <= 0 || hop > n_fft) throw Error(ErrorKind::shape, "hop must be in [1, n_fft]");
    if (n_mfcc > n_mels) throw Error(ErrorKind::shape, "n_mfcc must be <= n_mels");
    if (n_mels <= 0 || n_mfcc <= 0) throw Error(ErrorKind::shape, "filterbank sizes must be positive");
    if (!(fmin_hz < fmax_hz) || fmax_hz > sample_rate_hz / 2.0 + 1e-9)
      throw Error(ErrorKind::shape, "need fmin < fmax <= sample_rate/2");
  }
};

// The (p,t) MFCC matrix: row = coefficient index, column = time frame.
struct FeatureMap {
  int p = 0;
  long t = 0;
  std::vector<float> values;  // row-major (p, t)

  FeatureMap() = default;
  FeatureMap(int p_, long t_) : p(p_), t(t_), values(static_cast<std::size_t>(p_) * static_cast<std::size_t>(t_), 0.0f) {}

  float& at(int row, long col) { return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(t) + static_cast<std::size_t>(col)]; }
  const float& at(int row, long col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(t) + static_cast<std::size_t>(col)];
  }
};

inline long frame_count(long n_samples, const MfccConfig& cfg) {
  cfg.validate();
  if (n_samples < 1) throw Error(ErrorKind::too_short, "need at least one sample");
  if (cfg.centered) return 1 + n_samples / cfg.hop;
  if (n_samples < cfg.n_fft)
    throw Error(ErrorKind::too_short, "uncentered framing needs n_samples >= n_fft");
  return 1 + (n_samples - cfg.n_fft) / cfg.hop;
}

// Periodic Hann window: w[i] = 0.5 - 0.5 cos(2 pi i / n).
inline std::vector<double> hann_periodic(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const double two_pi = 6.283185307179586476925287;
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(two_pi * i / n);
  return w;
}

namespace detail {

// Reflect indexing without edge repetition, bouncing for out-of-range indices.
inline double sample_reflect(const std::vector<float>& x, long k) {
  const long n = static_cast<long>(x.size());
  if (n == 1) return x[0];
  const long period = 2 * (n - 1);
  long m = k % period;
  if (m < 0) m += period;
  if (m >= n) m = period - m;
  return x[static_cast<std::size_t>(m)];
}

}  // namespace detail

// Squared-magnitude spectrogram, shape (n_fft/2+1, t). Centered mode
// reflect-pads n_fft/2 samples at each end so frame j is centered on sample
// j*hop; uncentered frames start at j*hop.
inline TensorT<double> power_spectrogram(const AudioSignal& signal, const MfccConfig& cfg) {
  cfg.validate();
  const long n = static_cast<long>(signal.samples.size());
  const long t = frame_count(n, cfg);
  const int n_fft = cfg.n_fft;
  const long n_bins = n_fft / 2 + 1;

  const std::vector<double> window = hann_periodic(n_fft);
  const Radix2Fft fft(n_fft);

  TensorT<double> spec({n_bins, t});
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  for (long j = 0; j < t; ++j) {
    const long start = cfg.centered ? j * cfg.hop - n_fft / 2 : j * cfg.hop;
    for (int i = 0; i < n_fft; ++i) {
      const long k = start + i;
      const double s = cfg.centered ? detail::sample_reflect(signal.samples, k)
                                    : static_cast<double>(signal.samples[static_cast<std::size_t>(k)]);
      frame[static_cast<std::size_t>(i)] = s * window[static_cast<std::size_t>(i)];
    }
    const std::vector<double> power = fft.power_spectrum(frame);
    for (long b = 0; b < n_bins; ++b) spec.at(b, j) = power[static_cast<std::size_t>(b)];
  }
  return spec;
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
inline double hz_to_mel(double hz) {
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

inline double mel_to_hz(double mel) {
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

// Triangular mel filterbank, shape (n_mels, n_fft/2+1), with Slaney area
// normalization (each filter scaled by 2 / band width in Hz).
inline TensorT<double> mel_filterbank(const MfccConfig& cfg) {
  cfg.validate();
  const long n_bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(cfg.fmax_hz);

  std::vector<double> edges_hz(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    edges_hz[static_cast<std::size_t>(m)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));

  TensorT<double> fb({cfg.n_mels, n_bins});
  const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / cfg.n_fft;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges_hz[static_cast<std::size_t>(m)];
    const double center = edges_hz[static_cast<std::size_t>(m) + 1];
    const double hi = edges_hz[static_cast<std::size_t>(m) + 2];
    const double enorm = 2.0 / (hi - lo);
    bool any_positive = false;
    for (long b = 0; b < n_bins; ++b) {
      const double f = b * bin_hz;
      const double up = (f - lo) / (center - lo);
      const double down = (hi - f) / (hi - center);
      const double w = std::max(0.0, std::min(up, down));
      fb.at(m, b) = w * enorm;
      if (w > 0.0) any_positive = true;
    }
    if (!any_positive)
      throw Error(ErrorKind::degenerate,
                  "mel filter " + std::to_string(m) + " has no FFT-bin support; reduce n_mels");
  }
  return fb;
}

// Orthonormal DCT-II matrix (n_out x n_in):
//   D[k][i] = s_k * cos(pi (2i+1) k / (2 n_in)),  s_0 = sqrt(1/n_in), s_k = sqrt(2/n_in).
inline TensorT<double> dct2_matrix(int n_out, int n_in) {
  TensorT<double> d({n_out, n_in});
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int i = 0; i < n_in; ++i) d.at(k, i) = scale * std::cos(pi * (2 * i + 1) * k / (2.0 * n_in));
  }
  return d;
}

// Full pipeline: power spectrogram -> mel energies -> natural log floored at
// 1e-10 -> orthonormal DCT-II along the mel axis, keeping the first n_mfcc
// coefficients. Deterministic; the log floor keeps digital silence finite.
inline FeatureMap extract_mfcc(const AudioSignal& signal, const MfccConfig& cfg) {
  cfg.validate();
  const TensorT<double> spec = power_spectrogram(signal, cfg);
  const TensorT<double> fb = mel_filterbank(cfg);
  const TensorT<double> dct = dct2_matrix(cfg.n_mfcc, cfg.n_mels);
  const long t = spec.extent(1);
  const long n_bins = spec.extent(0);

  FeatureMap map(cfg.n_mfcc, t);
  std::vector<double> mel(static_cast<std::size_t>(cfg.n_mels));
  for (long j = 0; j < t; ++j) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (long b = 0; b < n_bins; ++b) acc += fb.at(m, b) * spec.at(b, j);
      mel[static_cast<std::size_t>(m)] = std::log(std::max(acc, 1e-10));
    }
    for (int k = 0; k < cfg.n_mfcc; ++k) {
      double acc = 0.0;
      for (int m = 0; m < cfg.n_mels; ++m) acc += dct.at(k, m) * mel[static_cast<std::size_t>(m)];
      map.at(k, j) = static_cast<float>(acc);
    }
  }
  for (float v : map.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::diverged, "non-finite MFCC value");
  return map;
}

// Optional per-map standardization (zero mean, unit variance over all cells).
// Off by default: the classifier consumes raw maps.
inline void standardize_map(FeatureMap& map) {
  if (map.values.empty()) return;
  double mean = 0.0;
  for (float v : map.values) mean += v;
  mean /= static_cast<double>(map.values.size());
  double var = 0.0;
  for (float v : map.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(map.values.size());
  const double inv = 1.0 / std::sqrt(var + 1e-12);
  for (float& v : map.values) v = static_cast<float>((v - mean) * inv);
}

}  // namespace speechfcn
