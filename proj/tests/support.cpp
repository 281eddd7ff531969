#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <unistd.h>

namespace dvp::test {

Plane random_plane(int w, int h, std::mt19937_64& rng, int lo, int hi) {
  Plane p(w, h);
  std::uniform_int_distribution<int> d(lo, hi);
  for (auto& v : p.data) v = static_cast<std::uint8_t>(d(rng));
  return p;
}

PlanarFrame random_frame(int w, int h, std::mt19937_64& rng, PixelRange range) {
  PlanarFrame f(w, h, range);
  const bool lim = range == PixelRange::limited;
  f.y = random_plane(w, h, rng, lim ? 16 : 0, lim ? 235 : 255);
  f.cb = random_plane(chroma_dim(w), chroma_dim(h), rng, lim ? 16 : 0, lim ? 240 : 255);
  f.cr = random_plane(chroma_dim(w), chroma_dim(h), rng, lim ? 16 : 0, lim ? 240 : 255);
  return f;
}

PlanarFrame textured_frame(int w, int h, int t, double detail, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 0.05 + 0.15 * u(rng);
  const double fy = 0.04 + 0.12 * u(rng);
  const double ph = 6.283 * u(rng);
  const double hx = 0.9 + 0.6 * u(rng);
  const double hy = 0.8 + 0.7 * u(rng);
  const double base = 90.0 + 60.0 * u(rng);
  PlanarFrame f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double smooth = 45.0 * std::sin(fx * (x + 0.7 * t) + ph) * std::cos(fy * y);
      const double fine = 35.0 * detail * std::sin(hx * x + 0.5 * t) * std::sin(hy * y + ph);
      f.y.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(base + smooth + fine), 16L, 235L));
    }
  }
  for (int y = 0; y < chroma_dim(h); ++y) {
    for (int x = 0; x < chroma_dim(w); ++x) {
      f.cb.at(x, y) = static_cast<std::uint8_t>(std::lround(128.0 + 20.0 * std::sin(0.2 * x + ph)));
      f.cr.at(x, y) = static_cast<std::uint8_t>(std::lround(128.0 + 20.0 * std::cos(0.17 * y + 0.1 * t)));
    }
  }
  return f;
}

GopSegment make_gop(int w, int h, int frames, double detail, std::uint64_t seed, int index) {
  GopSegment g;
  g.index = index;
  g.start_frame = 0;
  for (int t = 0; t < frames; ++t) g.frames.push_back(textured_frame(w, h, t, detail, seed));
  return g;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace dvp::test
