#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dvp/frame.hpp"

namespace dvp::test {

Plane random_plane(int w, int h, std::mt19937_64& rng, int lo = 0, int hi = 255);
PlanarFrame random_frame(int w, int h, std::mt19937_64& rng, PixelRange range = PixelRange::limited);

/// Smooth moving texture with some detail; `detail` in [0,1] scales the
/// high-frequency share. Values stay inside the limited range.
PlanarFrame textured_frame(int w, int h, int t, double detail, std::uint64_t seed);

GopSegment make_gop(int w, int h, int frames, double detail, std::uint64_t seed, int index = 0);

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "dvp");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace dvp::test
