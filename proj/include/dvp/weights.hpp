#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dvp/scale.hpp"
#include "dvp/tensor.hpp"

namespace dvp {

/// Root feature width K and the two layer widths used throughout the net.
inline constexpr int kRootChannels = 4;
inline constexpr int kWideChannels = 8;
inline constexpr std::uint32_t kDvpwVersion = 1;

struct NetworkTopology {
  /// Ascending scale list per stream.
  std::vector<std::vector<ScaleFactor>> streams;
  /// Blocks of a stream whose inter-block ratio equals an earlier block's
  /// reuse that block's weights.
  bool share_equal_ratio_blocks = false;

  /// S1 = {4/3, 2, 4}, S2 = {3/2, 3, 6}, S3 = {5/4, 5/2}.
  static NetworkTopology canonical(bool share_equal_ratio_blocks = false);
};

/// One precoding block:
///   c = conv1(i)            stride alpha, or bilinear D_alpha then stride 1
///   v = act2(conv2(act_mid(conv_mid(act1(c))))) + c
///   p = act_out(conv_out(v) + r_ds)
struct PrecodingBlock {
  ScaleFactor scale;  // cumulative factor this block produces
  ScaleFactor alpha;  // scale / previous scale
  Conv2d conv1, conv_mid, conv2, conv_out;
  PRelu act1, act_mid, act2, act_out;
  int shares_with = -1;  // block index inside the stream, or -1

  bool strided() const { return alpha.is_integer(); }
};

struct PrecodingStream {
  std::vector<ScaleFactor> scales;
  std::vector<PrecodingBlock> blocks;
  std::vector<Conv2d> projections;  // F_mn, 4 -> 1, 3x3
};

struct WeightsMetadata {
  std::uint32_t version = kDvpwVersion;
  std::string run_id;
};

struct NetworkWeights {
  NetworkTopology topology;
  Conv2d root_conv1;  // 1 -> 8, 3x3
  PRelu root_act1;
  Conv2d root_conv2;  // 8 -> 4, 1x1
  PRelu root_act2;
  std::vector<PrecodingStream> streams;
  WeightsMetadata metadata;

  /// Stream and block index producing `s`, or {-1, -1}.
  std::pair<int, int> locate(const ScaleFactor& s) const;
};

/// A named tensor as it appears in a DVPW file.
struct TensorRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

/// Canonical record list (name, shape) for a topology, in file order.
std::vector<std::pair<std::string, std::vector<std::uint32_t>>> canonical_records(const NetworkTopology& topo);

/// All-zero weights with identity PReLUs for a topology.
NetworkWeights make_zero_weights(const NetworkTopology& topo = NetworkTopology::canonical());

/// Xavier-uniform kernels, zero biases, PReLU 0.25 except the pre-skip
/// activation (act2) at 1.0. Deterministic for a given seed.
NetworkWeights init_xavier(std::uint64_t seed, const NetworkTopology& topo = NetworkTopology::canonical());

/// Weights under which every output equals bilinear D_s of the input luma:
/// the root copies luma into channel 0, blocks contribute nothing, and F_mn
/// reads channel 0 of the root residual.
NetworkWeights init_linear_baseline(const NetworkTopology& topo = NetworkTopology::canonical());

std::vector<TensorRecord> to_records(const NetworkWeights& w);
NetworkWeights from_records(const std::vector<TensorRecord>& records, const NetworkTopology& topo);

/// Parses and validates a DVPW byte stream.
NetworkWeights load_weights(std::span<const std::uint8_t> bytes,
                            const NetworkTopology& topo = NetworkTopology::canonical());
NetworkWeights load_weights(std::istream& in, const NetworkTopology& topo = NetworkTopology::canonical());
NetworkWeights load_weights_file(const std::string& path,
                                 const NetworkTopology& topo = NetworkTopology::canonical());

std::vector<std::uint8_t> encode_dvpw(const std::vector<TensorRecord>& records,
                                      std::uint32_t version = kDvpwVersion);
std::vector<std::uint8_t> save_weights(const NetworkWeights& w);
void save_weights_file(const NetworkWeights& w, const std::string& path);

}  // namespace dvp
