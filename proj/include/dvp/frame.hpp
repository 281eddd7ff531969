#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dvp/scale.hpp"

namespace dvp {

enum class PixelRange { limited, full };

/// One 8-bit image plane, row-major, no padding.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Plane() = default;
  Plane(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }

  friend bool operator==(const Plane&, const Plane&) = default;
};

/// Chroma dimension for 4:2:0 subsampling of a luma dimension.
constexpr int chroma_dim(int luma) { return (luma + 1) / 2; }

/// A 4:2:0 8-bit video frame.
struct PlanarFrame {
  int width = 0;
  int height = 0;
  Plane y;
  Plane cb;
  Plane cr;
  PixelRange range = PixelRange::limited;

  PlanarFrame() = default;
  PlanarFrame(int w, int h, PixelRange r = PixelRange::limited);

  /// Throws ShapeError unless the planes agree with width/height.
  void validate() const;
  std::size_t payload_bytes() const { return y.size() + cb.size() + cr.size(); }

  friend bool operator==(const PlanarFrame&, const PlanarFrame&) = default;
};

struct VideoInfo {
  int width = 0;
  int height = 0;
  FrameRate fps;
  PixelRange range = PixelRange::limited;
};

/// A group of pictures. Immutable once built.
struct GopSegment {
  int index = 0;
  int start_frame = 0;
  std::vector<PlanarFrame> frames;
  FrameRate fps;

  int size() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.front().width; }
  int height() const { return frames.front().height; }
};

/// Every n-th frame of a GOP, starting at frame 0.
struct FootprintView {
  const GopSegment* parent = nullptr;
  int stride = 1;
  std::vector<const PlanarFrame*> frames;

  /// Copies the retained frames into a standalone segment with the parent's
  /// index, start frame and frame rate.
  GopSegment materialize() const;
};

/// Streaming YUV4MPEG2 reader. Accepts only 8-bit 4:2:0.
class Y4mReader {
 public:
  explicit Y4mReader(std::istream& in);

  const VideoInfo& info() const { return info_; }

  /// Next frame, or nullopt at a clean end of stream.
  std::optional<PlanarFrame> next();

 private:
  std::istream& in_;
  VideoInfo info_;
};

struct Y4mVideo {
  VideoInfo info;
  std::vector<PlanarFrame> frames;
};

Y4mVideo read_y4m(std::istream& in);
Y4mVideo read_y4m_file(const std::string& path);

void write_y4m_header(std::ostream& out, const VideoInfo& info);
void write_y4m_frame(std::ostream& out, const PlanarFrame& frame);
void write_y4m(std::ostream& out, const VideoInfo& info, std::span<const PlanarFrame> frames);
void write_y4m_file(const std::string& path, const VideoInfo& info, std::span<const PlanarFrame> frames);

/// Headerless planar yuv420p: frames of w*h + 2*ceil(w/2)*ceil(h/2) bytes.
std::vector<PlanarFrame> read_raw_yuv420(std::istream& in, int width, int height,
                                         PixelRange range = PixelRange::limited);
void write_raw_yuv420(std::ostream& out, std::span<const PlanarFrame> frames);

/// Splits frames into consecutive segments of gop_len; the last may be shorter.
std::vector<GopSegment> segment_gops(std::vector<PlanarFrame> frames, int gop_len, FrameRate fps);

FootprintView footprint(const GopSegment& gop, int n);

/// 64-bit FNV-1a over the payload and geometry of a frame sequence.
std::uint64_t content_hash(std::span<const PlanarFrame> frames);

}  // namespace dvp
