#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "dvp/codec.hpp"
#include "dvp/error.hpp"

namespace dvp {

namespace {

constexpr char kMagic[8] = {'D', 'V', 'P', 'M', 'O', 'C', 'K', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw_format("mock bitstream: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void add_noise(Plane& p, double sigma, std::mt19937_64& rng, std::uint8_t lo, std::uint8_t hi) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& px : p.data) {
    // Always draw, so the noise pattern does not depend on sigma.
    const double z = gauss(rng);
    const double v = std::round(static_cast<double>(px) + sigma * z);
    px = static_cast<std::uint8_t>(std::clamp(v, static_cast<double>(lo), static_cast<double>(hi)));
  }
}

}  // namespace

double mock_crf_variance(int crf) { return std::pow(4.0, crf / 6.0) / 16.0; }

MockCodec::MockCodec(MockModel model) : model_(model) {
  if (!(model_.variance > 0.0) || !(model_.bits_per_halving > 0.0)) {
    throw_invalid("mock model needs positive variance and bits_per_halving");
  }
}

double MockCodec::noise_variance(double rate, int width, int height, FrameRate fps) const {
  const double bpp = rate / (static_cast<double>(width) * height * fps.value());
  return model_.variance * std::exp2(-2.0 * bpp / model_.bits_per_halving);
}

double MockCodec::vbv_rate(const Vbv& vbv, int width, int height, FrameRate fps) const {
  const double target = mock_crf_variance(vbv.crf);
  double natural = 0.0;
  if (target < model_.variance) {
    const double bpp = 0.5 * model_.bits_per_halving * std::log2(model_.variance / target);
    natural = bpp * width * height * fps.value();
  }
  // A real encoder never spends nothing; keep at least the floor rate.
  natural = std::max(natural, vbv.minrate);
  return std::min(natural, vbv.maxrate);
}

EncodeResult MockCodec::encode(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                               const RateControl& rc, const std::filesystem::path& out) const {
  (void)scale;
  if (frames.empty()) throw_invalid("mock codec: no frames");
  const int w = frames.front().width;
  const int h = frames.front().height;
  double rate = 0.0;
  if (const auto* v = std::get_if<Vbv>(&rc)) rate = vbv_rate(*v, w, h, fps);
  else rate = std::get<Cbr>(rc).bitrate;

  const double sigma = std::sqrt(noise_variance(rate, w, h, fps));
  std::mt19937_64 rng(content_hash(frames) ^ (model_.seed * 0x9E3779B97F4A7C15ULL));

  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw CodecError("mock codec: cannot write " + out.string());
  os.write(kMagic, sizeof kMagic);
  put_u64(os, static_cast<std::uint64_t>(w));
  put_u64(os, static_cast<std::uint64_t>(h));
  put_u64(os, frames.front().range == PixelRange::full ? 1 : 0);
  put_u64(os, frames.size());
  for (const auto& f : frames) {
    PlanarFrame d = f;
    const bool full = f.range == PixelRange::full;
    add_noise(d.y, sigma, rng, full ? 0 : 16, full ? 255 : 235);
    add_noise(d.cb, sigma, rng, full ? 0 : 16, full ? 255 : 240);
    add_noise(d.cr, sigma, rng, full ? 0 : 16, full ? 255 : 240);
    for (const Plane* p : {&d.y, &d.cb, &d.cr}) {
      os.write(reinterpret_cast<const char*>(p->data.data()), static_cast<std::streamsize>(p->data.size()));
    }
  }
  if (!os) throw CodecError("mock codec: write failed for " + out.string());

  EncodeResult r;
  r.bitstream = out;
  r.frame_count = static_cast<int>(frames.size());
  r.fps = fps;
  r.width = w;
  r.height = h;
  r.bitstream_bytes = static_cast<std::uint64_t>(std::llround(rate * r.frame_count / (8.0 * fps.value())));
  r.measured_rate = byte_accounted_rate(r.bitstream_bytes, fps, r.frame_count);
  return r;
}

std::vector<PlanarFrame> MockCodec::decode(const EncodeResult& result) const {
  std::ifstream is(result.bitstream, std::ios::binary);
  if (!is) throw CodecError("mock codec: cannot open " + result.bitstream.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw_format("mock bitstream: bad magic");
  const auto w = static_cast<int>(get_u64(is));
  const auto h = static_cast<int>(get_u64(is));
  const auto range = get_u64(is) ? PixelRange::full : PixelRange::limited;
  const auto n = get_u64(is);
  if (w <= 0 || h <= 0 || n > (1u << 24)) throw_format("mock bitstream: bad header");
  std::vector<PlanarFrame> frames;
  frames.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    PlanarFrame f(w, h, range);
    for (Plane* p : {&f.y, &f.cb, &f.cr}) {
      if (!is.read(reinterpret_cast<char*>(p->data.data()), static_cast<std::streamsize>(p->data.size()))) {
        throw_format("mock bitstream: truncated frame data");
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace dvp
