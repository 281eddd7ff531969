#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dvp/frame.hpp"
#include "dvp/resample.hpp"
#include "dvp/tensor.hpp"
#include "dvp/weights.hpp"

namespace dvp {

struct PrecodeOptions {
  /// In-network linear downscaler for non-integer alpha and for the root residual.
  FilterKind linear_downscaler = FilterKind::bilinear();
  FilterKind chroma_filter = FilterKind::bicubic();
};

/// Evaluation counters. Owned by the caller, so concurrent passes never share one.
struct PrecodeStats {
  std::uint64_t root_evals = 0;
  std::uint64_t block_evals = 0;
  std::uint64_t projection_evals = 0;
};

/// Root mapping on luma normalized to [0,1]. Returns the pre-activation
/// features r (K = 4 channels, same spatial size).
FeatureMap root_forward(const FloatPlane& luma, const NetworkWeights& w);

/// One precoding block. The output takes the spatial size of r_ds.
FeatureMap block_forward(const FeatureMap& input, const PrecodingBlock& block, const FeatureMap& r_ds,
                         const PrecodeOptions& opts = {});

/// Float outputs y_mn (normalized units, before denormalization and
/// clipping) for every requested scale > 1. Blocks shared by several
/// requested scales of one stream are evaluated once.
std::map<ScaleFactor, FloatPlane> precode_luma(const FloatPlane& luma, const NetworkWeights& w,
                                               std::span<const ScaleFactor> scales, const PrecodeOptions& opts = {},
                                               PrecodeStats* stats = nullptr);

/// Full frame precoding. Luma through the network, denormalized by 255,
/// rounded and clipped to the frame's legal range; chroma by the chroma
/// filter. s = 1 yields the input frame unchanged.
std::map<ScaleFactor, PlanarFrame> precode_frame(const PlanarFrame& frame, const NetworkWeights& w,
                                                 std::span<const ScaleFactor> scales,
                                                 const PrecodeOptions& opts = {}, PrecodeStats* stats = nullptr);

/// Mean over pixels of sum over scales of |x^ - x| + lambda * (|dx x^ - dx x| + |dy x^ - dy x|),
/// with forward differences and clamp-to-edge.
double eval_loss(const std::map<ScaleFactor, FloatPlane>& upscaled, const FloatPlane& ground_truth, double lambda);

struct LossSample {
  std::map<ScaleFactor, FloatPlane> upscaled;
  FloatPlane ground_truth;
};
/// Batch mean of eval_loss.
double eval_loss(std::span<const LossSample> batch, double lambda);

/// Produces downscaled versions of frames for a set of modes.
class Downscaler {
 public:
  virtual ~Downscaler() = default;
  virtual std::map<ScaleFactor, PlanarFrame> precode(const PlanarFrame& frame,
                                                     std::span<const ScaleFactor> scales) const = 0;
  /// Stable identifier used in cache keys.
  virtual std::string id() const = 0;
};

class NetworkDownscaler final : public Downscaler {
 public:
  explicit NetworkDownscaler(std::shared_ptr<const NetworkWeights> weights, PrecodeOptions opts = {});
  std::map<ScaleFactor, PlanarFrame> precode(const PlanarFrame& frame,
                                             std::span<const ScaleFactor> scales) const override;
  std::string id() const override;
  const NetworkWeights& weights() const { return *weights_; }

 private:
  std::shared_ptr<const NetworkWeights> weights_;
  PrecodeOptions opts_;
};

/// Classical resampling for every mode (luma and chroma filters).
class LinearDownscaler final : public Downscaler {
 public:
  explicit LinearDownscaler(FilterKind luma = FilterKind::bicubic(), FilterKind chroma = FilterKind::bicubic());
  std::map<ScaleFactor, PlanarFrame> precode(const PlanarFrame& frame,
                                             std::span<const ScaleFactor> scales) const override;
  std::string id() const override;

 private:
  FilterKind luma_;
  FilterKind chroma_;
};

}  // namespace dvp
