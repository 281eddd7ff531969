#pragma once

#include <filesystem>
#include <string>

#include "dvp/golden.hpp"
#include "dvp/weights.hpp"

namespace dvp::test {

struct ParityReport {
  int vectors = 0;
  double max_float_error = 0.0;
  double max_root_error = 0.0;
  int max_lsb_error = 0;
  double max_loss_rel_error = 0.0;
  bool pass() const;
  std::string summary() const;
};

/// Runs the engine on every vector of a golden pack with the pack's weights.
/// Thresholds: 1e-4 max-abs on float outputs and root features, 1 LSB on the
/// quantized planes, 1e-5 relative on the loss.
ParityReport golden_parity(const std::filesystem::path& dir);

/// Builds a pack from the engine itself (for exercising the reader and the
/// parity harness without an exporter).
GoldenPack engine_pack(const NetworkWeights& w, const std::filesystem::path& weights_file, int width, int height,
                       int vectors, std::uint64_t seed);

}  // namespace dvp::test
