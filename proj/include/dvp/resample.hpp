#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dvp/frame.hpp"
#include "dvp/scale.hpp"

namespace dvp {

/// Single-channel float image, row-major.
struct FloatPlane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  FloatPlane() = default;
  FloatPlane(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Separable interpolation kernel.
struct FilterKind {
  enum class Type { bilinear, bicubic, lanczos };

  Type type = Type::bilinear;
  double a = -0.75;  // bicubic sharpness
  int taps = 3;      // lanczos lobes

  static FilterKind bilinear() { return {Type::bilinear}; }
  static FilterKind bicubic(double a = -0.75) { return {Type::bicubic, a}; }
  static FilterKind lanczos(int taps = 3) { return {Type::lanczos, -0.75, taps}; }

  /// "bilinear", "bicubic" or "lanczos" (defaults for the coefficients).
  static FilterKind parse(std::string_view name);
  std::string name() const;

  /// Kernel half-width in source samples at unit scale.
  double radius() const;
  double operator()(double x) const;

  friend bool operator==(const FilterKind&, const FilterKind&) = default;
};

enum class Precision { float32, fixed8 };

/// Per-output-sample taps along one axis. Indices are already clamped to
/// the source extent; weights sum to 1.
struct AxisWeights {
  int in_size = 0;
  int out_size = 0;
  std::vector<int> offsets;  // out_size + 1 entries into index/weight
  std::vector<int> index;
  std::vector<float> weight;
};

/// Half-pixel-centre taps: output j reads source position (j + 0.5)*in/out - 0.5.
/// On downscale the kernel is stretched by in/out.
AxisWeights compute_axis_weights(int in_size, int out_size, const FilterKind& filter);

FloatPlane resize_rows(const FloatPlane& src, int target_w, const FilterKind& filter);
FloatPlane resize_cols(const FloatPlane& src, int target_h, const FilterKind& filter);

/// Horizontal pass, then vertical pass. No rounding or clamping.
FloatPlane resize_float(const FloatPlane& src, int target_w, int target_h, const FilterKind& filter);

/// 8-bit resize. The float32 path rounds half away from zero and clamps to
/// [0,255]; fixed8 uses 8-bit fractional weights and is not bit-exact.
Plane resize_plane(const Plane& src, int target_w, int target_h, const FilterKind& filter,
                   Precision precision = Precision::float32);

FloatPlane to_float(const Plane& p, float scale = 1.0f);
/// Multiplies by `scale`, rounds half away from zero and clamps to [lo, hi].
Plane quantize(const FloatPlane& p, float scale = 1.0f, int lo = 0, int hi = 255);

/// Luma by luma_filter, chroma by chroma_filter, to round(dim/s).
PlanarFrame downscale_frame(const PlanarFrame& frame, const ScaleFactor& s,
                            const FilterKind& luma_filter = FilterKind::bicubic(),
                            const FilterKind& chroma_filter = FilterKind::bicubic());

/// All planes with the same filter; chroma goes to ceil(target/2).
PlanarFrame upscale_frame(const PlanarFrame& frame, int target_w, int target_h,
                          const FilterKind& filter = FilterKind::bilinear());

}  // namespace dvp
