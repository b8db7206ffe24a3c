// Otsu thresholding over a 256-bin histogram of the min-max normalized
// input. The bit partition depends only on bin membership, so it is
// invariant under positive affine transforms of the values.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "speechfcn/common.hpp"

namespace speechfcn {

namespace otsu_detail {

inline constexpr int kBins = 256;

inline int bin_of(double v, double lo, double range) {
  const int b = static_cast<int>((v - lo) * kBins / range);
  return b > kBins - 1 ? kBins - 1 : (b < 0 ? 0 : b);
}

struct Analysis {
  double threshold = 0.0;
  int cut_bin = -1;  // bins <= cut_bin are class 0; -1 = degenerate (all 0)
  bool degenerate = false;
};

inline Analysis analyze(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::shape, "otsu: empty input");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Analysis a;
  if (!(hi > lo)) {
    a.degenerate = true;
    a.threshold = hi;
    return a;
  }
  const double range = hi - lo;

  long hist[kBins] = {0};
  for (double v : values) ++hist[bin_of(v, lo, range)];

  const long total = static_cast<long>(values.size());
  double sum_all = 0.0;
  for (int b = 0; b < kBins; ++b) sum_all += static_cast<double>(b) * static_cast<double>(hist[b]);

  // Maximize between-class variance w0*w1*(mu0-mu1)^2 over cut points; ties
  // resolve to the lowest threshold.
  double best = -1.0;
  long w0 = 0;
  double sum0 = 0.0;
  for (int k = 0; k < kBins - 1; ++k) {
    w0 += hist[k];
    sum0 += static_cast<double>(k) * static_cast<double>(hist[k]);
    if (w0 == 0) continue;
    const long w1 = total - w0;
    if (w1 == 0) break;
    const double mu0 = sum0 / static_cast<double>(w0);
    const double mu1 = (sum_all - sum0) / static_cast<double>(w1);
    const double variance = static_cast<double>(w0) * static_cast<double>(w1) * (mu0 - mu1) * (mu0 - mu1);
    if (variance > best) {
      best = variance;
      a.cut_bin = k;
    }
  }
  a.threshold = lo + (a.cut_bin + 1) * range / kBins;
  return a;
}

}  // namespace otsu_detail

// The threshold in original value units: the boundary of the histogram cut
// that maximizes between-class variance. A constant vector is degenerate and
// yields its own value (every element classifies as low).
inline double otsu_threshold(const std::vector<double>& values) {
  return otsu_detail::analyze(values).threshold;
}

// 0/1 class per element, by histogram-bin membership.
inline std::vector<std::uint8_t> otsu_bits(const std::vector<double>& values) {
  const auto a = otsu_detail::analyze(values);
  std::vector<std::uint8_t> bits(values.size(), 0);
  if (a.degenerate) return bits;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t i = 0; i < values.size(); ++i)
    bits[i] = otsu_detail::bin_of(values[i], lo, hi - lo) > a.cut_bin ? 1 : 0;
  return bits;
}

}  // namespace speechfcn
