#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dvp/frame.hpp"
#include "dvp/tensor.hpp"

namespace dvp {

// Golden pack: a directory with index.json and raw little-endian tensors.
//
// index.json
//   {"format": "dvp-golden", "version": 1, "seed": 7, "weights": "weights.dvpw",
//    "lambda": 0.5, "range": "limited",
//    "vectors": [{"input":  {"file": "v0_input.f32", "dtype": "float32", "shape": [H, W]},
//                 "root":   {"file": "v0_root.f32", "dtype": "float32", "shape": [4, H, W]},
//                 "outputs": {"3/2": {"float":     {"file": ..., "dtype": "float32", "shape": [h, w]},
//                                     "quantized": {"file": ..., "dtype": "uint8",   "shape": [h, w]}}},
//                 "loss": 0.0123}]}
//
// input is normalized luma in [0,1]; root holds the pre-activation root
// features; outputs hold y_mn before denormalization and the 8-bit plane
// after it; loss is eval_loss over the bilinear-upscaled float outputs.

struct GoldenOutput {
  FloatPlane float_out;
  Plane quantized;
};

struct GoldenVector {
  FloatPlane input;
  std::optional<FeatureMap> root;
  std::map<ScaleFactor, GoldenOutput> outputs;
  std::optional<double> loss;
};

struct GoldenPack {
  std::uint64_t seed = 0;
  std::filesystem::path weights;  // resolved against the pack directory on read
  double lambda = 0.5;
  PixelRange range = PixelRange::limited;
  std::vector<GoldenVector> vectors;
};

/// Throws FormatError on a malformed index or tensor.
GoldenPack read_golden_pack(const std::filesystem::path& dir);
void write_golden_pack(const std::filesystem::path& dir, const GoldenPack& pack);

}  // namespace dvp
