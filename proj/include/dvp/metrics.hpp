#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvp/frame.hpp"

namespace dvp {

/// PSNR reported for a channel with zero MSE.
inline constexpr double kPsnrCap = 100.0;

double plane_mse(const Plane& a, const Plane& b);
/// 10 log10(255^2 / mse), or `cap` when mse is 0. Never exceeds cap.
double psnr_from_mse(double mse, double cap = kPsnrCap);

struct FrameQuality {
  double mse_y = 0.0;
  double mse_cb = 0.0;
  double mse_cr = 0.0;
  double psnr_y = 0.0;
  double psnr_cb = 0.0;
  double psnr_cr = 0.0;
  /// Arithmetic mean of the three channel PSNRs.
  double psnr_avg = 0.0;
};

/// Throws ShapeError on geometry mismatch.
FrameQuality frame_psnr(const PlanarFrame& a, const PlanarFrame& b, double cap = kPsnrCap);

struct QualityReport {
  std::vector<FrameQuality> per_frame;
  double sequence_psnr = 0.0;  // mean of per-frame psnr_avg
  std::optional<double> sequence_vmaf;
};

QualityReport sequence_quality(std::span<const PlanarFrame> reference, std::span<const PlanarFrame> distorted,
                               double cap = kPsnrCap);

struct RDSample {
  double rate = 0.0;  // bits/s
  double quality = 0.0;
};

struct RDCurve {
  std::string metric = "psnr";
  std::vector<RDSample> points;
};

/// CSV with a "rate,quality" header. Blank lines and '#' comments are skipped.
RDCurve read_rd_curve_csv(std::istream& in, std::string metric = "psnr");
RDCurve read_rd_curve_csv_file(const std::filesystem::path& path, std::string metric = "psnr");
void write_rd_curve_csv(std::ostream& out, const RDCurve& curve);

enum class BdMethod { cubic, pchip };

struct BdResult {
  double bd_rate = 0.0;     // percent, test relative to anchor
  double bd_quality = 0.0;  // metric units, test minus anchor
};

/// Bjontegaard deltas of `test` against `anchor`. Both curves need at least
/// four points with strictly increasing rates and distinct qualities, and
/// their rate and quality ranges must overlap.
BdResult bd_metrics(const RDCurve& anchor, const RDCurve& test, BdMethod method = BdMethod::cubic);

struct VmafResult {
  enum class Status { ok, unavailable };
  Status status = Status::unavailable;
  std::optional<double> score;
  std::string message;
};

inline const std::string kDefaultVmafTemplate =
    "vmaf --reference {REF} --distorted {DIS} --width {W} --height {H} --pixel_format 420 --bitdepth 8 --json "
    "--output {OUT}";

/// Runs an external VMAF tool and returns pooled_metrics.vmaf.mean from its
/// JSON report. A missing tool is reported as unavailable; a failing tool
/// raises CodecError and unparsable output raises FormatError.
VmafResult vmaf_external(const std::filesystem::path& reference, const std::filesystem::path& distorted, int width,
                         int height, const std::string& tool_template = kDefaultVmafTemplate,
                         std::chrono::seconds timeout = std::chrono::seconds{0});

/// Parses a VMAF JSON report. Throws FormatError when the pooled mean is absent.
double parse_vmaf_json(const std::string& text);

}  // namespace dvp
