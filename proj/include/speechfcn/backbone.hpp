// Backbone block table: a width-scalable MobileNet-style stack of one
// standard convolution followed by depthwise-separable blocks, total spatial
// stride 32 on both axes.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "speechfcn/common.hpp"

namespace speechfcn {

enum class BlockType { standard, depthwise_separable };

struct BlockSpec {
  BlockType type = BlockType::depthwise_separable;
  int stride = 1;
  int out_channels = 0;
};

struct BackboneConfig {
  double width_multiplier = 0.25;  // alpha; 1.0 = full width
  int input_channels = 3;
  std::vector<BlockSpec> blocks = mobilenet_v1_table();

  // Stem stride 2, then strides 1,2,1,2,1,2, five stride-1 blocks, 2, 1.
  static std::vector<BlockSpec> mobilenet_v1_table() {
    return {
        {BlockType::standard, 2, 32},
        {BlockType::depthwise_separable, 1, 64},
        {BlockType::depthwise_separable, 2, 128},
        {BlockType::depthwise_separable, 1, 128},
        {BlockType::depthwise_separable, 2, 256},
        {BlockType::depthwise_separable, 1, 256},
        {BlockType::depthwise_separable, 2, 512},
        {BlockType::depthwise_separable, 1, 512},
        {BlockType::depthwise_separable, 1, 512},
        {BlockType::depthwise_separable, 1, 512},
        {BlockType::depthwise_separable, 1, 512},
        {BlockType::depthwise_separable, 1, 512},
        {BlockType::depthwise_separable, 2, 1024},
        {BlockType::depthwise_separable, 1, 1024},
    };
  }

  long scaled(long channels) const {
    const long c = std::llround(channels * width_multiplier);
    return c < 1 ? 1 : c;
  }

  long final_channels() const { return scaled(blocks.back().out_channels); }

  long total_stride() const {
    long s = 1;
    for (const BlockSpec& b : blocks) s *= b.stride;
    return s;
  }

  void validate() const {
    if (!(width_multiplier > 0.0 && width_multiplier <= 1.0))
      throw Error(ErrorKind::shape, "width_multiplier must be in (0, 1]");
    if (input_channels != 3) throw Error(ErrorKind::shape, "backbone expects 3 input channels");
    if (blocks.empty()) throw Error(ErrorKind::shape, "backbone needs at least one block");
    if (total_stride() != 32) throw Error(ErrorKind::shape, "backbone block strides must multiply to 32");
    for (const BlockSpec& b : blocks) {
      if (b.stride < 1 || b.out_channels < 1) throw Error(ErrorKind::shape, "bad block spec");
    }
  }
};

inline std::string block_type_name(BlockType t) {
  return t == BlockType::standard ? "standard" : "depthwise-separable";
}

inline BlockType block_type_from_name(const std::string& s) {
  if (s == "standard") return BlockType::standard;
  if (s == "depthwise-separable") return BlockType::depthwise_separable;
  throw Error(ErrorKind::data, "unknown block type: " + s);
}

}  // namespace speechfcn
