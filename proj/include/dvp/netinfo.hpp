#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dvp/weights.hpp"

namespace dvp {

struct BlockInfo {
  ScaleFactor scale;
  int stream = 0;
  int block = 0;
  std::uint64_t params = 0;        // 0 for blocks that reuse another block's weights
  std::uint64_t macs = 0;          // block layers at the block's output resolution
  std::uint64_t projection_macs = 0;
  int out_width = 0;
  int out_height = 0;
};

/// Analytic parameter and multiply-accumulate counts. Only convolutions
/// count towards MACs; linear resampling and PReLU are free.
struct NetInfo {
  std::uint64_t total_params = 0;
  std::uint64_t root_params = 0;
  std::uint64_t projection_params = 0;
  std::uint64_t root_macs = 0;
  std::uint64_t total_macs = 0;
  std::vector<BlockInfo> blocks;
  /// Block + projection MACs of the block producing each scale.
  std::map<ScaleFactor, std::uint64_t> macs_per_scale;
};

/// Weights, biases and PReLU slopes of one conv layer (+ activation).
std::uint64_t layer_params(const Conv2d& conv, const PRelu* act);
std::uint64_t conv_macs(const Conv2d& conv, int out_width, int out_height);

/// Learnable parameters of one precoding block (with PReLU slopes).
std::uint64_t block_params(const PrecodingBlock& b);
/// MACs of one block whose layers all run at out_width x out_height.
std::uint64_t block_macs(const PrecodingBlock& b, int out_width, int out_height);

NetInfo count_params_and_macs(const NetworkWeights& w, int input_width, int input_height);

}  // namespace dvp
