#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "oracles.hpp"
#include "speechfcn/mfcc.hpp"

using namespace speechfcn;

namespace {

AudioSignal make_signal(std::vector<float> samples, int rate = 22050) {
  AudioSignal s;
  s.samples = std::move(samples);
  s.sample_rate_hz = rate;
  return s;
}

AudioSignal cosine_signal(double freq_hz, long n, double amplitude = 0.5, int rate = 22050) {
  std::vector<float> v(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] =
        static_cast<float>(amplitude * std::cos(2.0 * 3.14159265358979323846 * freq_hz * i / rate));
  return make_signal(std::move(v), rate);
}

}  // namespace

TEST(FrameCount, MatchesFramingArithmetic) {
  MfccConfig cfg;
  EXPECT_EQ(frame_count(220500, cfg), 431);  // 10 s, centered: 1 + floor(220500/512)
  cfg.centered = false;
  EXPECT_EQ(frame_count(220500, cfg), 427);  // 1 + floor((220500-2048)/512)
  cfg.centered = true;
  EXPECT_EQ(frame_count(2048, cfg), 5);
}

TEST(FrameCount, UncenteredTooShortThrows) {
  MfccConfig cfg;
  cfg.centered = false;
  try {
    frame_count(2047, cfg);
    FAIL() << "expected too-short error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_short);
  }
}

TEST(FrameCount, MonotoneAndHopIncrement) {
  MfccConfig cfg;
  long prev = frame_count(1, cfg);
  for (long n = 2; n < 6000; n += 7) {
    const long t = frame_count(n, cfg);
    EXPECT_GE(t, prev);
    prev = t;
  }
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const long n = rng.uniform_int(1, 400000);
    EXPECT_EQ(frame_count(n + cfg.hop, cfg), frame_count(n, cfg) + 1) << "n=" << n;
  }
}

TEST(PowerSpectrogram, ZeroSignalIsZero) {
  MfccConfig cfg;
  const auto spec = power_spectrogram(make_signal(std::vector<float>(22050, 0.0f)), cfg);
  EXPECT_EQ(spec.extent(0), 1025);
  EXPECT_EQ(spec.extent(1), 44);
  for (long i = 0; i < spec.size(); ++i) EXPECT_EQ(spec[i], 0.0);
}

TEST(PowerSpectrogram, CosineAtBinFrequencyPeaksAtThatBin) {
  MfccConfig cfg;
  cfg.centered = false;
  const int k = 100;
  const double freq = static_cast<double>(k) * cfg.sample_rate_hz / cfg.n_fft;
  const auto spec = power_spectrogram(cosine_signal(freq, 22050), cfg);
  for (long j = 0; j < spec.extent(1); ++j) {
    long argmax = 0;
    for (long b = 1; b < spec.extent(0); ++b)
      if (spec.at(b, j) > spec.at(argmax, j)) argmax = b;
    EXPECT_EQ(argmax, k) << "column " << j;
  }
}

TEST(PowerSpectrogram, ScalingIsQuadratic) {
  MfccConfig cfg;
  Rng rng(5);
  std::vector<float> x(8192);
  for (float& v : x) v = static_cast<float>(rng.uniform(-0.2, 0.2));
  // c = 4 scales the float samples exactly, so |c x|^2 = c^2 |x|^2 can be
  // checked at the 1e-9 relative tolerance.
  std::vector<float> x4(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x4[i] = 4.0f * x[i];

  const auto a = power_spectrogram(make_signal(x), cfg);
  const auto b = power_spectrogram(make_signal(x4), cfg);
  for (long i = 0; i < a.size(); ++i) {
    const double expected = 16.0 * a[i];
    EXPECT_NEAR(b[i], expected, 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Fft, AgreesWithNaiveDftOnRandomFrames) {
  const Radix2Fft fft(2048);
  Rng rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> frame(2048);
    for (double& v : frame) v = rng.uniform(-1.0, 1.0);
    const auto naive = oracles::naive_dft(frame);

    std::vector<std::complex<double>> fast(2048);
    for (int i = 0; i < 2048; ++i) fast[static_cast<std::size_t>(i)] = {frame[static_cast<std::size_t>(i)], 0.0};
    fft.forward(fast);

    double max_naive = 0.0, max_diff = 0.0;
    for (int i = 0; i < 2048; ++i) {
      max_naive = std::max(max_naive, std::abs(naive[static_cast<std::size_t>(i)]));
      max_diff = std::max(max_diff, std::abs(naive[static_cast<std::size_t>(i)] - fast[static_cast<std::size_t>(i)]));
    }
    EXPECT_LT(max_diff / max_naive, 1e-6);
  }
}

TEST(MelFilterbank, EveryFilterHasSupport) {
  MfccConfig cfg;
  const auto fb = mel_filterbank(cfg);
  EXPECT_EQ(fb.extent(0), 128);
  EXPECT_EQ(fb.extent(1), 1025);
  for (long m = 0; m < fb.extent(0); ++m) {
    bool positive = false;
    for (long b = 0; b < fb.extent(1); ++b) {
      EXPECT_GE(fb.at(m, b), 0.0);
      if (fb.at(m, b) > 0.0) positive = true;
    }
    EXPECT_TRUE(positive) << "filter " << m;
  }
}

TEST(MelFilterbank, PeakBinsStrictlyIncreaseAndMatchFormulaOracle) {
  MfccConfig cfg;
  const auto fb = mel_filterbank(cfg);

  // Independent recomputation of each filter's peak bin from the mel->Hz
  // formula and the triangle weights.
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(cfg.fmax_hz);
  const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / cfg.n_fft;
  long prev_peak = -1;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));
    const double center = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (cfg.n_mels + 1));
    const double hi = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 2) / (cfg.n_mels + 1));
    long oracle_peak = 0;
    double oracle_best = -1.0;
    for (long b = 0; b < 1025; ++b) {
      const double f = b * bin_hz;
      const double w = std::max(0.0, std::min((f - lo) / (center - lo), (hi - f) / (hi - center)));
      if (w > oracle_best) {
        oracle_best = w;
        oracle_peak = b;
      }
    }

    long peak = 0;
    for (long b = 1; b < fb.extent(1); ++b)
      if (fb.at(m, b) > fb.at(m, peak)) peak = b;
    EXPECT_EQ(peak, oracle_peak) << "filter " << m;
    EXPECT_GT(peak, prev_peak) << "filter " << m;
    prev_peak = peak;
  }
}

TEST(MelFilterbank, FlatSpectrumGetsPositiveResponse) {
  MfccConfig cfg;
  const auto fb = mel_filterbank(cfg);
  double total = 0.0;
  for (long m = 0; m < fb.extent(0); ++m)
    for (long b = 0; b < fb.extent(1); ++b) total += fb.at(m, b);
  EXPECT_GT(total, 0.0);
}

TEST(MelFilterbank, ZeroSupportConfigurationIsDegenerate) {
  MfccConfig cfg;
  cfg.n_fft = 64;
  cfg.hop = 32;
  cfg.n_mels = 60;
  cfg.n_mfcc = 10;
  try {
    mel_filterbank(cfg);
    FAIL() << "expected degenerate-filter error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
  }
}

TEST(Dct, MatchesNaiveSumAndRoundTrips) {
  Rng rng(17);
  std::vector<double> v(128);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);

  const auto d64 = dct2_matrix(64, 128);
  const auto oracle = oracles::naive_dct2(v, 64);
  for (int k = 0; k < 64; ++k) {
    double acc = 0.0;
    for (int i = 0; i < 128; ++i) acc += d64.at(k, i) * v[static_cast<std::size_t>(i)];
    EXPECT_NEAR(acc, oracle[static_cast<std::size_t>(k)], 1e-10) << "coefficient " << k;
  }

  const auto full = dct2_matrix(128, 128);
  std::vector<double> coeffs(128);
  for (int k = 0; k < 128; ++k) {
    double acc = 0.0;
    for (int i = 0; i < 128; ++i) acc += full.at(k, i) * v[static_cast<std::size_t>(i)];
    coeffs[static_cast<std::size_t>(k)] = acc;
  }
  const auto back = oracles::naive_idct2(coeffs);
  for (int i = 0; i < 128; ++i) EXPECT_NEAR(back[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i)], 1e-9);
}

TEST(Dct, ConstantVectorConcentratesInCoefficientZero) {
  const double c = 1.0;
  const auto dct = dct2_matrix(64, 128);
  std::vector<double> ones(128, c);
  double c0 = 0.0;
  for (int i = 0; i < 128; ++i) c0 += dct.at(0, i) * ones[static_cast<std::size_t>(i)];
  EXPECT_NEAR(c0, c * std::sqrt(128.0), 1e-10);
  for (int k = 1; k < 64; ++k) {
    double ck = 0.0;
    for (int i = 0; i < 128; ++i) ck += dct.at(k, i) * ones[static_cast<std::size_t>(i)];
    EXPECT_NEAR(ck, 0.0, 1e-10);
  }
}

TEST(ExtractMfcc, ZeroSignalGivesLogFloorConstantColumns) {
  MfccConfig cfg;
  const FeatureMap map = extract_mfcc(make_signal(std::vector<float>(220500, 0.0f)), cfg);
  EXPECT_EQ(map.p, 64);
  EXPECT_EQ(map.t, 431);
  const double expected_row0 = std::log(1e-10) * std::sqrt(128.0);
  for (long j = 0; j < map.t; ++j) {
    EXPECT_NEAR(map.at(0, j), expected_row0, 1e-3) << "column " << j;
    for (int r = 1; r < 64; ++r) EXPECT_NEAR(map.at(r, j), 0.0, 1e-4) << "row " << r;
  }
}

TEST(ExtractMfcc, SilentSpanColumnsMatchAllSilencePattern) {
  MfccConfig cfg;
  const long sr = 22050;
  AudioSignal mixed = cosine_signal(440.0, 3 * sr);
  for (long i = sr; i < 2 * sr; ++i) mixed.samples[static_cast<std::size_t>(i)] = 0.0f;
  const FeatureMap map = extract_mfcc(mixed, cfg);
  const FeatureMap silent = extract_mfcc(make_signal(std::vector<float>(3 * sr, 0.0f)), cfg);

  // Frames whose whole window lies inside the silent second.
  const long first = (sr + cfg.n_fft / 2 + cfg.hop - 1) / cfg.hop;
  const long last = (2 * sr - cfg.n_fft / 2) / cfg.hop;
  ASSERT_GT(last, first + 10);
  for (long j = first; j <= last; ++j)
    for (int r = 0; r < map.p; ++r) EXPECT_EQ(map.at(r, j), silent.at(r, j)) << "frame " << j << " row " << r;
}

TEST(ExtractMfcc, DeterministicBitwise) {
  MfccConfig cfg;
  const AudioSignal sig = cosine_signal(523.25, 30000, 0.4);
  const FeatureMap a = extract_mfcc(sig, cfg);
  const FeatureMap b = extract_mfcc(sig, cfg);
  ASSERT_EQ(a.values.size(), b.values.size());
  EXPECT_EQ(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)), 0);
}
