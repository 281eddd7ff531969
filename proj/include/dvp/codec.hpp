#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dvp/frame.hpp"
#include "dvp/scale.hpp"

namespace dvp {

/// Constant-quality encoding capped by a VBV buffer.
struct Vbv {
  int crf = 23;  // or libvpx speed, see CodecProfile::knob
  double maxrate = 0.0;
  double bufsize = 0.0;
  double minrate = 0.0;  // only used by VP9 min/max rate mode
  friend bool operator==(const Vbv&, const Vbv&) = default;
};

struct Cbr {
  double bitrate = 0.0;
  friend bool operator==(const Cbr&, const Cbr&) = default;
};

using RateControl = std::variant<Vbv, Cbr>;

/// Throws InvalidArgument for non-positive rates or out-of-range crf.
void validate(const RateControl& rc);
std::string describe(const RateControl& rc);

enum class QualityKnob { crf, speed };

/// Parameters of the mock codec's exponential rate-distortion model:
/// per-sample noise variance = variance * 2^(-2 * bits_per_pixel / bits_per_halving).
struct MockModel {
  double variance = 1000.0;
  double bits_per_halving = 0.05;
  std::uint64_t seed = 0;
};

struct CodecProfile {
  std::string name;  // h264 | hevc | vp9 | mock
  std::string preset;
  QualityKnob knob = QualityKnob::crf;
  std::map<ScaleFactor, int> crf_by_scale;
  std::string encode_vbv_template;
  std::string encode_cbr_template;
  std::string decode_template;
  std::string extension = "bin";
  MockModel mock;

  static CodecProfile h264();
  static CodecProfile hevc();
  static CodecProfile vp9();
  static CodecProfile mock_codec(MockModel model = {});
  static CodecProfile by_name(const std::string& name);

  bool is_mock() const { return name == "mock"; }
  /// crf (or speed) for a mode; throws when the table has no entry.
  int quality_for(const ScaleFactor& s) const;
  /// Canonical text of everything that affects encoder output.
  std::string fingerprint() const;
};

/// A finished encode. measured_rate = 8 * bitstream_bytes * fps / frame_count.
struct EncodeResult {
  std::filesystem::path bitstream;
  std::uint64_t bitstream_bytes = 0;
  double measured_rate = 0.0;
  int frame_count = 0;
  FrameRate fps;
  int width = 0;
  int height = 0;
};

double byte_accounted_rate(std::uint64_t bytes, FrameRate fps, int frame_count);

/// VBV settings for a mode: crf from the profile's table, maxrate = bufsize = target.
/// VP9 additionally gets minrate = maxrate / 1.45.
RateControl vbv_for(const CodecProfile& profile, const ScaleFactor& s, double target_rate);

/// Replaces {NAME} placeholders. Unknown names and names without a value
/// are errors; nothing unresolved survives.
std::string substitute_template(const std::string& tmpl, const std::map<std::string, std::string>& vars);

/// Backend that turns frames into a bitstream file and back.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual EncodeResult encode(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                              const RateControl& rc, const std::filesystem::path& out) const = 0;
  virtual std::vector<PlanarFrame> decode(const EncodeResult& result) const = 0;
};

/// External encoder/decoder driven by command templates. Y4M goes to the
/// encoder's stdin, the decoder writes Y4M to stdout.
class TemplateCodec final : public Codec {
 public:
  explicit TemplateCodec(CodecProfile profile, std::chrono::seconds timeout = std::chrono::seconds{0});
  EncodeResult encode(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                      const RateControl& rc, const std::filesystem::path& out) const override;
  std::vector<PlanarFrame> decode(const EncodeResult& result) const override;

 private:
  CodecProfile profile_;
  std::chrono::seconds timeout_;
};

/// Deterministic test double. Decoded output is the input plus zero-mean
/// Gaussian noise whose variance follows MockModel; the noise pattern is
/// seeded by the content hash so equal inputs give equal outputs.
class MockCodec final : public Codec {
 public:
  explicit MockCodec(MockModel model = {});
  EncodeResult encode(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                      const RateControl& rc, const std::filesystem::path& out) const override;
  std::vector<PlanarFrame> decode(const EncodeResult& result) const override;

  /// Rate a VBV encode settles at: what the model needs to reach the crf's
  /// target noise, capped at maxrate.
  double vbv_rate(const Vbv& vbv, int width, int height, FrameRate fps) const;
  /// Noise variance at a rate for a given geometry.
  double noise_variance(double rate, int width, int height, FrameRate fps) const;
  const MockModel& model() const { return model_; }

 private:
  MockModel model_;
};

/// Noise variance the mock codec targets for a crf value.
double mock_crf_variance(int crf);

class EncodeCache;

/// Codec front end used by mode selection and the pipeline: profile-aware
/// VBV/CBR jobs, a bounded worker pool, an optional encode cache and
/// invocation counters.
class CodecDriver {
 public:
  CodecDriver(CodecProfile profile, std::filesystem::path work_dir, int jobs = 1);
  /// Uses a custom backend instead of one derived from the profile.
  CodecDriver(CodecProfile profile, std::shared_ptr<const Codec> backend, std::filesystem::path work_dir,
              int jobs = 1);

  EncodeResult encode(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                      const RateControl& rc);
  EncodeResult encode_vbv(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                          double target_rate);
  EncodeResult encode_cbr(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                          double bitrate);
  /// Throws CodecError when the decoded frame count differs from the result's.
  std::vector<PlanarFrame> decode(const EncodeResult& result);

  void set_cache(std::shared_ptr<EncodeCache> cache) { cache_ = std::move(cache); }
  const CodecProfile& profile() const { return profile_; }
  int jobs() const { return jobs_; }
  const std::filesystem::path& work_dir() const { return work_dir_; }

  std::uint64_t encoder_invocations() const { return encodes_.load(); }
  std::uint64_t decoder_invocations() const { return decodes_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }

 private:
  CodecProfile profile_;
  std::shared_ptr<const Codec> backend_;
  std::filesystem::path work_dir_;
  int jobs_;
  std::shared_ptr<EncodeCache> cache_;
  std::atomic<std::uint64_t> encodes_{0};
  std::atomic<std::uint64_t> decodes_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> serial_{0};
};

}  // namespace dvp
