#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dvp/codec.hpp"
#include "dvp/frame.hpp"
#include "dvp/json.hpp"
#include "dvp/metrics.hpp"
#include "dvp/mode_select.hpp"
#include "dvp/precoder.hpp"

namespace dvp {

/// "500k", "1.5M", "2000000" -> bits/s.
double parse_bitrate(std::string_view text);
/// Comma separated bitrates; must be strictly increasing.
std::vector<double> parse_bitrate_list(std::string_view text);

struct LadderConfig {
  std::vector<double> bitrates;
  CodecProfile codec = CodecProfile::mock_codec();
  std::vector<ScaleFactor> scales = all_modes();
  int gop_len = 90;
  int footprint_n = 5;
  FilterKind upscaler = FilterKind::bilinear();
  /// "network" or a linear filter name.
  std::string downscaler = "network";
  FilterKind chroma_downscaler = FilterKind::bicubic();
  /// Empty with the network downscaler: linear-baseline weights.
  std::string weights_path;
  std::filesystem::path output_dir = "dvp_out";
  /// Empty: <output_dir>/cache.
  std::filesystem::path cache_dir;
  bool use_cache = true;
  bool full_remap = false;
  int jobs = 1;

  /// Throws InvalidArgument when a field is out of its domain.
  void validate() const;
};

std::unique_ptr<Downscaler> make_downscaler(const LadderConfig& cfg);

struct ManifestEntry {
  int gop_index = 0;
  int start_frame = 0;
  int frame_count = 0;
  double bitrate = 0.0;
  ScaleFactor scale;
  int encoded_width = 0;
  int encoded_height = 0;
  std::string segment_uri;
  std::string codec;

  ordered_json to_json() const;
};

/// A (GOP, bitrate) cell that failed; the rest of the ladder still runs.
struct CellError {
  int gop_index = 0;
  int start_frame = 0;
  int frame_count = 0;
  double bitrate = 0.0;
  std::string message;

  ordered_json to_json() const;
};

struct CellReport {
  ManifestEntry entry;
  QualityReport quality;  // decoded, upscaled, against the source GOP
  double measured_rate = 0.0;
  StageLog stage_log;
};

struct LadderResult {
  VideoInfo source;
  std::vector<CellReport> cells;  // sorted by (gop_index, bitrate)
  std::vector<CellError> errors;  // same order
  std::uint64_t encoder_invocations = 0;
  std::uint64_t decoder_invocations = 0;
  std::uint64_t cache_hits = 0;

  /// Manifest array: every cell, and every failed cell as an error record.
  ordered_json manifest() const;
  ordered_json quality_report() const;
};

/// Per GOP and rung: mode selection, production VBV encode of the full GOP at
/// the chosen mode, decode and quality measurement. Writes segments under
/// <output_dir>/segments; manifest() and quality_report() are left to the
/// caller. A custom codec
/// backend may be injected (the profile still decides crf and fingerprint).
LadderResult run_ladder(const Y4mVideo& source, const LadderConfig& cfg,
                        std::shared_ptr<const Codec> backend = nullptr);
LadderResult run_ladder_file(const std::filesystem::path& source, const LadderConfig& cfg);

void write_json_file(const std::filesystem::path& path, const ordered_json& j);

}  // namespace dvp
