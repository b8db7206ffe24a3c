// RIFF/WAVE PCM16 reader/writer and linear resampling.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "speechfcn/common.hpp"

namespace speechfcn {

struct AudioSignal {
  std::vector<float> samples;  // mono, amplitudes in [-1, 1]
  int sample_rate_hz = 0;
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

// Linear-interpolation resampler. Output length is round(n * target / source);
// output sample i is taken at input position i * source / target, clamped at
// the last input sample. Intentionally simple -- swap in a polyphase design if
// resampling quality ever matters.
inline AudioSignal resample_linear(const AudioSignal& in, int target_hz) {
  if (target_hz <= 0) throw Error(ErrorKind::shape, "target sample rate must be positive");
  if (in.sample_rate_hz == target_hz || in.samples.empty()) {
    AudioSignal out = in;
    out.sample_rate_hz = target_hz;
    return out;
  }
  const long n = static_cast<long>(in.samples.size());
  const double ratio = static_cast<double>(in.sample_rate_hz) / target_hz;
  const long out_n = std::llround(static_cast<double>(n) * target_hz / in.sample_rate_hz);
  AudioSignal out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(static_cast<std::size_t>(out_n));
  for (long i = 0; i < out_n; ++i) {
    const double pos = i * ratio;
    long i0 = static_cast<long>(pos);
    if (i0 >= n - 1) {
      out.samples[static_cast<std::size_t>(i)] = in.samples[static_cast<std::size_t>(n - 1)];
      continue;
    }
    const double frac = pos - i0;
    const double a = in.samples[static_cast<std::size_t>(i0)];
    const double b = in.samples[static_cast<std::size_t>(i0 + 1)];
    out.samples[static_cast<std::size_t>(i)] = static_cast<float>(a + (b - a) * frac);
  }
  return out;
}

// Loads a PCM 16-bit RIFF/WAVE file (1 or 2 channels). Stereo is averaged to
// mono, samples scaled by 1/32768, and anything not at 22050 Hz is linearly
// resampled to 22050.
inline AudioSignal load_wav(const std::string& path, int target_rate_hz = 22050) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorKind::format, path + ": not a RIFF/WAVE file");

  int channels = 0, bits = 0, rate = 0, format_tag = 0;
  bool have_fmt = false;
  const unsigned char* data_chunk = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const char* cid = reinterpret_cast<const char*>(bytes.data() + off);
    const std::uint32_t clen = detail::read_u32le(bytes.data() + off + 4);
    const std::size_t body = off + 8;
    if (body + clen > bytes.size()) throw Error(ErrorKind::format, path + ": truncated chunk");
    if (std::memcmp(cid, "fmt ", 4) == 0) {
      if (clen < 16) throw Error(ErrorKind::format, path + ": fmt chunk too small");
      format_tag = detail::read_u16le(bytes.data() + body);
      channels = detail::read_u16le(bytes.data() + body + 2);
      rate = static_cast<int>(detail::read_u32le(bytes.data() + body + 4));
      bits = detail::read_u16le(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(cid, "data", 4) == 0) {
      data_chunk = bytes.data() + body;
      data_len = clen;
    }
    off = body + clen + (clen & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_chunk == nullptr) throw Error(ErrorKind::format, path + ": missing fmt or data chunk");
  if (format_tag != 1) throw Error(ErrorKind::unsupported, path + ": only PCM integer encoding is supported");
  if (bits != 16) throw Error(ErrorKind::unsupported, path + ": only 16-bit samples are supported");
  if (channels != 1 && channels != 2) throw Error(ErrorKind::unsupported, path + ": only mono/stereo supported");
  if (rate <= 0) throw Error(ErrorKind::format, path + ": bad sample rate");

  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * 2;
  const std::size_t n_frames = data_len / frame_bytes;
  AudioSignal sig;
  sig.sample_rate_hz = rate;
  sig.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const unsigned char* p = data_chunk + i * frame_bytes;
    const std::int16_t l = static_cast<std::int16_t>(detail::read_u16le(p));
    if (channels == 1) {
      sig.samples[i] = static_cast<float>(l) / 32768.0f;
    } else {
      const std::int16_t r = static_cast<std::int16_t>(detail::read_u16le(p + 2));
      sig.samples[i] = (static_cast<float>(l) + static_cast<float>(r)) / 2.0f / 32768.0f;
    }
  }

  if (rate != target_rate_hz) return resample_linear(sig, target_rate_hz);
  return sig;
}

// Writes mono PCM16. Samples are clipped to [-1, 1] and quantized by
// round(x * 32767).
inline void save_wav_pcm16(const std::string& path, const std::vector<float>& samples, int rate_hz) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path);

  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    f.write(reinterpret_cast<const char*>(b), 2);
  };

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  f.write("RIFF", 4);
  put_u32(36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<std::uint32_t>(rate_hz));
  put_u32(static_cast<std::uint32_t>(rate_hz * 2));
  put_u16(2);
  put_u16(16);
  f.write("data", 4);
  put_u32(data_bytes);
  for (float s : samples) {
    float c = s;
    if (c > 1.0f) c = 1.0f;
    if (c < -1.0f) c = -1.0f;
    const std::int16_t q = static_cast<std::int16_t>(std::lround(c * 32767.0f));
    put_u16(static_cast<std::uint16_t>(q));
  }
  if (!f) throw Error(ErrorKind::io, "write failed for " + path);
}

}  // namespace speechfcn
