#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dvp/error.hpp"
#include "dvp/frame.hpp"

namespace dvp {

Plane::Plane(int w, int h, std::uint8_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

PlanarFrame::PlanarFrame(int w, int h, PixelRange r)
    : width(w),
      height(h),
      y(w, h, r == PixelRange::limited ? 16 : 0),
      cb(chroma_dim(w), chroma_dim(h), 128),
      cr(chroma_dim(w), chroma_dim(h), 128),
      range(r) {}

void PlanarFrame::validate() const {
  const auto cw = chroma_dim(width);
  const auto ch = chroma_dim(height);
  if (width <= 0 || height <= 0 || y.width != width || y.height != height ||
      y.size() != static_cast<std::size_t>(width) * height || cb.width != cw || cb.height != ch ||
      cr.width != cw || cr.height != ch || cb.size() != static_cast<std::size_t>(cw) * ch ||
      cr.size() != cb.size()) {
    throw_shape("frame planes do not match " + std::to_string(width) + "x" + std::to_string(height) +
                " 4:2:0 geometry");
  }
}

GopSegment FootprintView::materialize() const {
  GopSegment g;
  g.index = parent->index;
  g.start_frame = parent->start_frame;
  g.fps = parent->fps;
  g.frames.reserve(frames.size());
  for (const auto* f : frames) g.frames.push_back(*f);
  return g;
}

namespace {

constexpr std::size_t kMaxHeaderLine = 4096;

std::string read_line(std::istream& in, bool& eof_before_any) {
  std::string line;
  eof_before_any = false;
  char c = 0;
  bool any = false;
  while (in.get(c)) {
    any = true;
    if (c == '\n') return line;
    line.push_back(c);
    if (line.size() > kMaxHeaderLine) throw_format("y4m: header line too long");
  }
  if (!any) {
    eof_before_any = true;
    return line;
  }
  throw_format("y4m: unterminated header line");
}

FrameRate parse_ratio(const std::string& token) {
  const auto colon = token.find(':');
  if (colon == std::string::npos) throw_format("y4m: bad frame rate '" + token + "'");
  try {
    FrameRate r{std::stoll(token.substr(0, colon)), std::stoll(token.substr(colon + 1))};
    if (r.num <= 0 || r.den <= 0) throw_format("y4m: non-positive frame rate");
    return r;
  } catch (const std::logic_error&) {
    throw_format("y4m: bad frame rate '" + token + "'");
  }
}

int parse_dim(const std::string& token) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size() || v <= 0) throw_format("y4m: bad dimension '" + token + "'");
    return v;
  } catch (const std::logic_error&) {
    throw_format("y4m: bad dimension '" + token + "'");
  }
}

void read_plane(std::istream& in, Plane& p) {
  in.read(reinterpret_cast<char*>(p.data.data()), static_cast<std::streamsize>(p.data.size()));
  if (static_cast<std::size_t>(in.gcount()) != p.data.size()) {
    throw_format("truncated frame payload: expected " + std::to_string(p.data.size()) +
                 " bytes, got " + std::to_string(in.gcount()));
  }
}

void write_plane(std::ostream& out, const Plane& p) {
  out.write(reinterpret_cast<const char*>(p.data.data()), static_cast<std::streamsize>(p.data.size()));
}

}  // namespace

Y4mReader::Y4mReader(std::istream& in) : in_(in) {
  bool empty = false;
  const std::string header = read_line(in_, empty);
  if (empty) throw_format("y4m: empty stream");
  std::istringstream ts(header);
  std::string token;
  ts >> token;
  if (token != "YUV4MPEG2") throw_format("y4m: missing YUV4MPEG2 signature");
  bool have_w = false, have_h = false, have_f = false;
  while (ts >> token) {
    const char tag = token[0];
    const std::string value = token.substr(1);
    switch (tag) {
      case 'W':
        info_.width = parse_dim(value);
        have_w = true;
        break;
      case 'H':
        info_.height = parse_dim(value);
        have_h = true;
        break;
      case 'F':
        info_.fps = parse_ratio(value);
        have_f = true;
        break;
      case 'C':
        if (value != "420" && value != "420jpeg" && value != "420paldv" && value != "420mpeg2") {
          throw_format("y4m: unsupported colorspace C" + value + " (only 8-bit 4:2:0 is accepted)");
        }
        break;
      case 'I':
        if (value != "p" && value != "?") throw_format("y4m: interlaced input is not supported");
        break;
      case 'X':
        if (value == "COLORRANGE=FULL") info_.range = PixelRange::full;
        else if (value == "COLORRANGE=LIMITED") info_.range = PixelRange::limited;
        break;
      default:
        break;  // A (aspect) and unknown tags carry nothing we use
    }
  }
  if (!have_w || !have_h || !have_f) throw_format("y4m: header must declare W, H and F");
}

std::optional<PlanarFrame> Y4mReader::next() {
  bool eof = false;
  const std::string line = read_line(in_, eof);
  if (eof) return std::nullopt;
  if (line.rfind("FRAME", 0) != 0) throw_format("y4m: expected FRAME marker");
  PlanarFrame f(info_.width, info_.height, info_.range);
  read_plane(in_, f.y);
  read_plane(in_, f.cb);
  read_plane(in_, f.cr);
  return f;
}

Y4mVideo read_y4m(std::istream& in) {
  Y4mReader reader(in);
  Y4mVideo video{reader.info(), {}};
  while (auto f = reader.next()) video.frames.push_back(std::move(*f));
  return video;
}

Y4mVideo read_y4m_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_y4m(in);
}

void write_y4m_header(std::ostream& out, const VideoInfo& info) {
  out << "YUV4MPEG2 W" << info.width << " H" << info.height << " F" << info.fps.num << ':'
      << info.fps.den << " Ip A1:1 C420jpeg";
  if (info.range == PixelRange::full) out << " XCOLORRANGE=FULL";
  out << '\n';
}

void write_y4m_frame(std::ostream& out, const PlanarFrame& frame) {
  frame.validate();
  out << "FRAME\n";
  write_plane(out, frame.y);
  write_plane(out, frame.cb);
  write_plane(out, frame.cr);
}

void write_y4m(std::ostream& out, const VideoInfo& info, std::span<const PlanarFrame> frames) {
  write_y4m_header(out, info);
  for (const auto& f : frames) {
    if (f.width != info.width || f.height != info.height) throw_shape("frame geometry differs from stream header");
    write_y4m_frame(out, f);
  }
}

void write_y4m_file(const std::string& path, const VideoInfo& info, std::span<const PlanarFrame> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create " + path);
  write_y4m(out, info, frames);
  if (!out) throw Error("write failed for " + path);
}

std::vector<PlanarFrame> read_raw_yuv420(std::istream& in, int width, int height, PixelRange range) {
  if (width <= 0 || height <= 0) throw_invalid("raw yuv: dimensions must be positive");
  std::vector<PlanarFrame> frames;
  while (in.peek() != std::char_traits<char>::eof()) {
    PlanarFrame f(width, height, range);
    read_plane(in, f.y);
    read_plane(in, f.cb);
    read_plane(in, f.cr);
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_raw_yuv420(std::ostream& out, std::span<const PlanarFrame> frames) {
  for (const auto& f : frames) {
    write_plane(out, f.y);
    write_plane(out, f.cb);
    write_plane(out, f.cr);
  }
}

std::vector<GopSegment> segment_gops(std::vector<PlanarFrame> frames, int gop_len, FrameRate fps) {
  if (gop_len < 1) throw_invalid("gop length must be at least 1");
  if (frames.empty()) throw_invalid("cannot segment an empty frame sequence");
  const int w = frames.front().width;
  const int h = frames.front().height;
  std::vector<GopSegment> out;
  const int total = static_cast<int>(frames.size());
  for (int start = 0; start < total; start += gop_len) {
    GopSegment g;
    g.index = static_cast<int>(out.size());
    g.start_frame = start;
    g.fps = fps;
    const int end = std::min(total, start + gop_len);
    g.frames.reserve(end - start);
    for (int i = start; i < end; ++i) {
      if (frames[i].width != w || frames[i].height != h) throw_shape("frames in a sequence must share geometry");
      g.frames.push_back(std::move(frames[i]));
    }
    out.push_back(std::move(g));
  }
  return out;
}

FootprintView footprint(const GopSegment& gop, int n) {
  if (n < 1) throw_invalid("footprint stride must be at least 1");
  FootprintView v;
  v.parent = &gop;
  v.stride = n;
  for (int i = 0; i < gop.size(); i += n) v.frames.push_back(&gop.frames[i]);
  return v;
}

std::uint64_t content_hash(std::span<const PlanarFrame> frames) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  auto mix_u32 = [&mix](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) mix(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  mix_u32(static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    mix_u32(static_cast<std::uint32_t>(f.width));
    mix_u32(static_cast<std::uint32_t>(f.height));
    for (const Plane* p : {&f.y, &f.cb, &f.cr}) {
      for (auto b : p->data) mix(b);
    }
  }
  return h;
}

}  // namespace dvp
