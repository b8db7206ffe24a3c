// Temporal impact heatmap: Otsu-threshold one class row of the time
// activations, nearest-neighbor upsample from t' to t, and render the
// feature map with an impact bar underneath.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "speechfcn/common.hpp"
#include "speechfcn/mfcc.hpp"
#include "speechfcn/model.hpp"
#include "speechfcn/otsu.hpp"

namespace speechfcn {

// Binary impact vector, one bit per MFCC frame: 0 = dark/low impact,
// 1 = yellow/high impact.
struct Heatmap {
  std::vector<std::uint8_t> bits;
  int class_index = 1;
  double threshold = 0.0;
};

// Otsu-partitions the chosen class column (default 1 = AD) at t' resolution
// and upsamples to t: output index i reads source index
// min(t'-1, floor((i+0.5) * t' / t)).
inline Heatmap heatmap(const TimeActivations& acts, int class_index = 1) {
  if (class_index != 0 && class_index != 1) throw Error(ErrorKind::shape, "heatmap: class_index must be 0 or 1");
  if (acts.values.rank() != 2 || acts.values.extent(1) != 2 || acts.source_t < 1)
    throw Error(ErrorKind::shape, "heatmap: invalid time activations");
  const long tp = acts.values.extent(0);
  std::vector<double> column(static_cast<std::size_t>(tp));
  for (long j = 0; j < tp; ++j) column[static_cast<std::size_t>(j)] = static_cast<double>(acts.values.at(j, class_index));

  const auto analysis = otsu_detail::analyze(column);
  const std::vector<std::uint8_t> coarse = otsu_bits(column);

  Heatmap hm;
  hm.class_index = class_index;
  hm.threshold = analysis.threshold;
  hm.bits.resize(static_cast<std::size_t>(acts.source_t));
  const long t = acts.source_t;
  for (long i = 0; i < t; ++i) {
    long src = static_cast<long>((static_cast<double>(i) + 0.5) * static_cast<double>(tp) / static_cast<double>(t));
    if (src > tp - 1) src = tp - 1;
    hm.bits[static_cast<std::size_t>(i)] = coarse[static_cast<std::size_t>(src)];
  }
  return hm;
}

struct HeatmapRun {
  int bit = 0;
  long start_frame = 0, end_frame = 0;  // [start, end)
  double start_sec = 0.0, end_sec = 0.0;
};

inline std::vector<HeatmapRun> heatmap_runs(const Heatmap& hm, const MfccConfig& cfg) {
  std::vector<HeatmapRun> runs;
  const double sec_per_frame = static_cast<double>(cfg.hop) / cfg.sample_rate_hz;
  long start = 0;
  for (std::size_t i = 1; i <= hm.bits.size(); ++i) {
    if (i == hm.bits.size() || hm.bits[i] != hm.bits[static_cast<std::size_t>(start)]) {
      HeatmapRun r;
      r.bit = hm.bits[static_cast<std::size_t>(start)];
      r.start_frame = start;
      r.end_frame = static_cast<long>(i);
      r.start_sec = r.start_frame * sec_per_frame;
      r.end_sec = r.end_frame * sec_per_frame;
      runs.push_back(r);
      start = static_cast<long>(i);
    }
  }
  return runs;
}

// Writes a P6 portable pixmap (t wide, p+16 tall): the feature map rendered
// grayscale with per-image min-max scaling, above a 16-pixel impact bar,
// dark (32,32,64) for 0 and yellow (240,200,32) for 1. A JSON sidecar
// (same path, .json extension) lists the threshold, class index and bit
// runs with start/end times in seconds.
inline void render(const FeatureMap& map, const Heatmap& hm, const MfccConfig& cfg, const std::string& out_path) {
  if (static_cast<long>(hm.bits.size()) != map.t)
    throw Error(ErrorKind::shape, "render: heatmap length does not match feature map");

  const int bar_height = 16;
  const long width = map.t;
  const long height = map.p + bar_height;

  float mn = map.values[0], mx = map.values[0];
  for (float v : map.values) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  const double range = mx > mn ? static_cast<double>(mx) - mn : 1.0;

  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + out_path);
  f << "P6\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 3);
  for (int r = 0; r < map.p; ++r) {
    for (long j = 0; j < width; ++j) {
      const double g = (static_cast<double>(map.at(r, j)) - mn) / range;
      const unsigned char byte = static_cast<unsigned char>(g * 255.0 + 0.5);
      row[static_cast<std::size_t>(j) * 3] = byte;
      row[static_cast<std::size_t>(j) * 3 + 1] = byte;
      row[static_cast<std::size_t>(j) * 3 + 2] = byte;
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  for (int r = 0; r < bar_height; ++r) {
    for (long j = 0; j < width; ++j) {
      const bool hot = hm.bits[static_cast<std::size_t>(j)] != 0;
      row[static_cast<std::size_t>(j) * 3] = hot ? 240 : 32;
      row[static_cast<std::size_t>(j) * 3 + 1] = hot ? 200 : 32;
      row[static_cast<std::size_t>(j) * 3 + 2] = hot ? 32 : 64;
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw Error(ErrorKind::io, "write failed for " + out_path);

  nlohmann::json j;
  j["class_index"] = hm.class_index;
  j["threshold"] = hm.threshold;
  nlohmann::json runs = nlohmann::json::array();
  for (const HeatmapRun& r : heatmap_runs(hm, cfg))
    runs.push_back({{"bit", r.bit},
                    {"start_frame", r.start_frame},
                    {"end_frame", r.end_frame},
                    {"start_sec", r.start_sec},
                    {"end_sec", r.end_sec}});
  j["runs"] = runs;

  std::string json_path = out_path;
  const std::size_t dot = json_path.find_last_of('.');
  if (dot != std::string::npos && json_path.find('/', dot) == std::string::npos)
    json_path = json_path.substr(0, dot);
  json_path += ".json";
  std::ofstream jf(json_path);
  if (!jf) throw Error(ErrorKind::io, "cannot write " + json_path);
  jf << j.dump(2) << "\n";
}

}  // namespace speechfcn
