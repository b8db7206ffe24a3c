// JSON (de)serialization for configuration structs. Field names match the
// struct members one-to-one.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "speechfcn/backbone.hpp"
#include "speechfcn/mfcc.hpp"

namespace speechfcn {

inline nlohmann::json to_json(const MfccConfig& c) {
  return {
      {"sample_rate_hz", c.sample_rate_hz}, {"n_fft", c.n_fft},   {"hop", c.hop},
      {"n_mels", c.n_mels},                 {"n_mfcc", c.n_mfcc}, {"fmin_hz", c.fmin_hz},
      {"fmax_hz", c.fmax_hz},               {"centered", c.centered},
  };
}

inline MfccConfig mfcc_config_from_json(const nlohmann::json& j) {
  MfccConfig c;
  c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
  c.n_fft = j.value("n_fft", c.n_fft);
  c.hop = j.value("hop", c.hop);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.n_mfcc = j.value("n_mfcc", c.n_mfcc);
  c.fmin_hz = j.value("fmin_hz", c.fmin_hz);
  c.fmax_hz = j.contains("fmax_hz") ? j.at("fmax_hz").get<double>() : c.sample_rate_hz / 2.0;
  c.centered = j.value("centered", c.centered);
  c.validate();
  return c;
}

inline nlohmann::json to_json(const BackboneConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const BlockSpec& b : c.blocks)
    blocks.push_back({{"type", block_type_name(b.type)}, {"stride", b.stride}, {"out_channels", b.out_channels}});
  return {
      {"width_multiplier", c.width_multiplier},
      {"input_channels", c.input_channels},
      {"blocks", blocks},
  };
}

inline BackboneConfig backbone_config_from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.width_multiplier = j.value("width_multiplier", c.width_multiplier);
  c.input_channels = j.value("input_channels", c.input_channels);
  if (j.contains("blocks")) {
    c.blocks.clear();
    for (const auto& b : j.at("blocks")) {
      BlockSpec s;
      s.type = block_type_from_name(b.at("type").get<std::string>());
      s.stride = b.at("stride").get<int>();
      s.out_channels = b.at("out_channels").get<int>();
      c.blocks.push_back(s);
    }
  }
  c.validate();
  return c;
}

}  // namespace speechfcn
