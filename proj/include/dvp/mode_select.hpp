#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "dvp/codec.hpp"
#include "dvp/frame.hpp"
#include "dvp/precoder.hpp"
#include "dvp/resample.hpp"

namespace dvp {

struct RDPoint {
  double rate = 0.0;        // bits/s
  double distortion = 0.0;  // MSE at native resolution
  ScaleFactor scale;
  std::shared_ptr<const GopSegment> handle;  // precoded frames the point was measured on
};

struct StageLog {
  std::vector<RDPoint> all_points;
  std::vector<RDPoint> after_monotone;
  std::vector<RDPoint> after_hull;
  double cbr_rate = 0.0;
  std::vector<RDPoint> remapped_points;
};

struct ModeDecision {
  ScaleFactor selected;
  std::shared_ptr<const GopSegment> selected_handle;
  StageLog stage_log;
};

struct SelectOptions {
  int footprint_n = 1;
  FilterKind upscaler = FilterKind::bilinear();
  /// Run the CBR remap on the whole GOP instead of the footprint.
  bool full_remap = false;
  /// Concurrent encodes within one decision.
  int jobs = 1;
};

/// Mean over frames of (mse_y + mse_cb + mse_cr) / 3 after upscaling each
/// decoded frame to the reference geometry.
double upscaled_distortion(std::span<const PlanarFrame> reference, std::span<const PlanarFrame> decoded,
                           const FilterKind& upscaler);

/// Precodes every frame of a GOP for each mode. Mode 1 is the GOP itself.
std::map<ScaleFactor, std::shared_ptr<const GopSegment>> precode_gop(const GopSegment& gop,
                                                                      std::span<const ScaleFactor> scales,
                                                                      const Downscaler& downscaler, int jobs = 1);

/// Step 1: one VBV-encoded RD point per mode, measured on every
/// footprint_n-th frame. Codec failures are rethrown with the mode attached.
std::vector<RDPoint> extract_rd_points(const GopSegment& gop, std::span<const ScaleFactor> scales,
                                       const Downscaler& downscaler, CodecDriver& driver, double target_rate,
                                       const SelectOptions& opts = {});

/// Step 2: ascending rate (then distortion, then larger scale first); a point
/// survives iff its distortion is strictly below every earlier survivor's.
std::vector<RDPoint> prune_monotone(std::vector<RDPoint> points);

/// Lower convex hull of a rate-sorted, distortion-decreasing list. Lists of
/// two or fewer points are returned unchanged; collinear interior points go.
std::vector<RDPoint> lower_convex_hull(std::vector<RDPoint> points);

/// Step 3: re-encodes each survivor's handle at the mean survivor rate in CBR
/// and picks the lowest distortion against `reference`; ties go to the
/// larger scale.
ModeDecision cbr_remap_and_select(const std::vector<RDPoint>& survivors, std::span<const PlanarFrame> reference,
                                  CodecDriver& driver, const FilterKind& upscaler, int jobs = 1);

ModeDecision select_mode(const GopSegment& gop, std::span<const ScaleFactor> scales, const Downscaler& downscaler,
                         CodecDriver& driver, double target_rate, const SelectOptions& opts = {});

}  // namespace dvp
