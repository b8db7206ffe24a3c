// Synthetic two-class corpus for self-contained end-to-end experiments:
// class A is a continuous voiced-tone speech proxy, class B is the same tone
// fabric interrupted by long pauses (near-silence or soft noise bursts).
// Ground-truth pause positions are emitted in MFCC frame units.
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "speechfcn/common.hpp"
#include "speechfcn/manifest.hpp"
#include "speechfcn/mfcc.hpp"
#include "speechfcn/wav.hpp"

namespace speechfcn {

struct SynthConfig {
  int n_train = 60;
  int n_test = 20;
  std::uint64_t seed = 1;
  MfccConfig mfcc;  // framing parameters for the pause bookkeeping
};

struct PauseSpanSamples {
  long begin = 0, end = 0;  // [begin, end) in samples
};

namespace synth_detail {

inline std::vector<float> tone_segment(Rng& rng, double duration_s, int sr) {
  const long n = std::lround(duration_s * sr);
  const double f0 = rng.uniform(110.0, 240.0);
  const int harmonics = static_cast<int>(rng.uniform_int(3, 4));
  std::vector<double> amp(static_cast<std::size_t>(harmonics));
  std::vector<double> phase(static_cast<std::size_t>(harmonics));
  for (int h = 0; h < harmonics; ++h) {
    amp[static_cast<std::size_t>(h)] = rng.uniform(0.5, 1.0) / (h + 1);
    phase[static_cast<std::size_t>(h)] = rng.uniform(0.0, 6.283185307179586);
  }
  const double am_rate = rng.uniform(4.0, 7.0);
  const double am_depth = rng.uniform(0.25, 0.45);
  const double am_phase = rng.uniform(0.0, 6.283185307179586);
  const double peak_target = rng.uniform(0.35, 0.5);

  std::vector<float> out(static_cast<std::size_t>(n));
  double peak = 1e-9;
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    double s = 0.0;
    for (int h = 0; h < harmonics; ++h)
      s += amp[static_cast<std::size_t>(h)] *
           std::sin(6.283185307179586 * f0 * (h + 1) * t + phase[static_cast<std::size_t>(h)]);
    const double envelope = 1.0 - am_depth * 0.5 * (1.0 + std::sin(6.283185307179586 * am_rate * t + am_phase));
    out[static_cast<std::size_t>(i)] = static_cast<float>(s * envelope);
    peak = std::max(peak, std::abs(static_cast<double>(out[static_cast<std::size_t>(i)])));
  }
  const double gain = peak_target / peak;
  for (float& v : out) v = static_cast<float>(v * gain);
  return out;
}

inline void append_noise(std::vector<float>& samples, Rng& rng, double duration_s, int sr, double amplitude) {
  const long n = std::lround(duration_s * sr);
  for (long i = 0; i < n; ++i) samples.push_back(static_cast<float>(amplitude * rng.normal()));
}

// Frames whose whole analysis window lies inside [begin, end); conservative
// so boundary frames mixing tone and pause are excluded.
inline bool pause_frames(const PauseSpanSamples& span, const MfccConfig& cfg, long* first, long* last_excl) {
  const long half = cfg.n_fft / 2;
  const long lo = (span.begin + half + cfg.hop - 1) / cfg.hop;
  const long hi = (span.end - half) / cfg.hop;
  if (hi < lo) return false;
  *first = lo;
  *last_excl = hi + 1;
  return true;
}

}  // namespace synth_detail

struct SynthSample {
  std::string id;
  int label = 0;
  std::vector<float> samples;
  std::vector<PauseSpanSamples> pauses;
};

inline SynthSample synthesize_sample(const std::string& id, int label, Rng& rng, const MfccConfig& cfg) {
  SynthSample s;
  s.id = id;
  s.label = label;
  const int sr = cfg.sample_rate_hz;

  if (label == 0) {
    // Continuous tone, duration matched to the class-B distribution.
    const double duration = rng.uniform(4.5, 9.0);
    s.samples = synth_detail::tone_segment(rng, duration, sr);
  } else {
    // tone | pause | tone | pause | tone
    for (int seg = 0; seg < 3; ++seg) {
      const std::vector<float> tone = synth_detail::tone_segment(rng, rng.uniform(0.9, 1.5), sr);
      s.samples.insert(s.samples.end(), tone.begin(), tone.end());
      if (seg < 2) {
        const long begin = static_cast<long>(s.samples.size());
        const double pause_s = rng.uniform(1.3, 2.4);
        const bool burst = rng.uniform() < 0.35;
        synth_detail::append_noise(s.samples, rng, pause_s, sr, burst ? 0.04 : 0.0008);
        s.pauses.push_back({begin, static_cast<long>(s.samples.size())});
      }
    }
  }

  // Low noise floor over everything.
  for (float& v : s.samples) v = static_cast<float>(v + 0.0005 * rng.normal());
  return s;
}

struct SynthSummary {
  int n_train = 0;
  int n_test = 0;
  long pause_rows = 0;
};

// Writes wav/<id>.wav, manifest_train.csv, manifest_test.csv (paths point at
// maps/<id>.mfcm, the extraction target) and pauses.csv with ground-truth
// pause frame spans for class-B samples.
inline SynthSummary generate_corpus(const std::string& out_dir, const SynthConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");

  std::ofstream pauses(fs::path(out_dir) / "pauses.csv");
  if (!pauses) throw Error(ErrorKind::io, "cannot write pauses.csv");
  pauses << "id,start_frame,end_frame\n";

  SynthSummary summary;
  std::uint64_t counter = 0;
  auto emit_set = [&](const std::string& prefix, int count, DatasetManifest& manifest) {
    for (int i = 0; i < count; ++i) {
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s%03d", prefix.c_str(), i);
      const int label = i % 2;
      Rng rng(cfg.seed * 1000003ULL + counter++);
      const SynthSample s = synthesize_sample(idbuf, label, rng, cfg.mfcc);
      save_wav_pcm16((fs::path(out_dir) / "wav" / (s.id + ".wav")).string(), s.samples, cfg.mfcc.sample_rate_hz);
      manifest.entries.push_back({s.id, "maps/" + s.id + ".mfcm", label, -1});
      for (const PauseSpanSamples& span : s.pauses) {
        long first = 0, last = 0;
        if (synth_detail::pause_frames(span, cfg.mfcc, &first, &last)) {
          pauses << s.id << "," << first << "," << last << "\n";
          ++summary.pause_rows;
        }
      }
    }
  };

  DatasetManifest train_manifest, test_manifest;
  emit_set("tr", cfg.n_train, train_manifest);
  emit_set("te", cfg.n_test, test_manifest);
  summary.n_train = cfg.n_train;
  summary.n_test = cfg.n_test;

  std::ofstream tm(fs::path(out_dir) / "manifest_train.csv");
  std::ofstream em(fs::path(out_dir) / "manifest_test.csv");
  if (!tm || !em) throw Error(ErrorKind::io, "cannot write manifests");
  auto write_rows = [](std::ofstream& f, const DatasetManifest& m) {
    f << "id,path,label,fold\n";
    for (const ManifestEntry& e : m.entries) f << e.id << "," << e.path << "," << e.label << ",\n";
  };
  write_rows(tm, train_manifest);
  write_rows(em, test_manifest);
  return summary;
}

}  // namespace speechfcn
