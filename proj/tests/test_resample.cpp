#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dvp/error.hpp"
#include "dvp/resample.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dvp;

namespace {

const FilterKind kFilters[] = {FilterKind::bilinear(), FilterKind::bicubic(), FilterKind::lanczos()};

oracle::Kernel as_oracle(const FilterKind& f) {
  switch (f.type) {
    case FilterKind::Type::bilinear:
      return oracle::Kernel::bilinear;
    case FilterKind::Type::bicubic:
      return oracle::Kernel::bicubic;
    default:
      return oracle::Kernel::lanczos3;
  }
}

int max_abs_diff(const Plane& a, const Plane& b) {
  int m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(int(a.data[i]) - int(b.data[i])));
  return m;
}

}  // namespace

TEST_CASE("2x2 bilinear to 1x1 averages the four samples") {
  Plane p(2, 2);
  p.data = {10, 20, 30, 40};
  const Plane out = resize_plane(p, 1, 1, FilterKind::bilinear());
  CHECK(out.data[0] == 25);
}

TEST_CASE("constant planes stay constant") {
  for (const auto& f : kFilters) {
    for (auto [w, h, tw, th] : {std::array{7, 5, 3, 2}, std::array{4, 4, 13, 9}, std::array{16, 9, 16, 3}}) {
      const Plane p(w, h, 137);
      const Plane out = resize_plane(p, tw, th, f);
      CHECK(out.width == tw);
      CHECK(out.height == th);
      CHECK(std::all_of(out.data.begin(), out.data.end(), [](auto v) { return v == 137; }));
    }
  }
}

TEST_CASE("zero-sized targets are errors") {
  const Plane p(4, 4, 1);
  CHECK_THROWS_AS(resize_plane(p, 0, 2, FilterKind::bilinear()), InvalidArgument);
  CHECK_THROWS_AS(resize_plane(p, 2, 0, FilterKind::bicubic()), InvalidArgument);
}

TEST_CASE("4x4 ramp upscaled 2x matches the direct convolution oracle") {
  Plane p(4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) p.at(x, y) = static_cast<std::uint8_t>(20 * x + 50 * y);
  }
  for (const auto& f : kFilters) {
    const Plane out = resize_plane(p, 8, 8, f);
    const Plane ref = oracle::to_u8(oracle::resize(oracle::from_plane(p), 8, 8, as_oracle(f)));
    CHECK(max_abs_diff(out, ref) <= 1);
  }
}

TEST_CASE("single white pixel upscaled 2x bilinear equals the oracle exactly") {
  Plane p(5, 5, 0);
  p.at(2, 2) = 255;
  const Plane out = resize_plane(p, 10, 10, FilterKind::bilinear());
  const Plane ref = oracle::to_u8(oracle::resize(oracle::from_plane(p), 10, 10, oracle::Kernel::bilinear));
  CHECK(out == ref);
  CHECK(out.at(4, 4) == 143);  // 255 * 0.75 * 0.75 = 143.44
}

TEST_CASE("random planes agree with the oracle within one LSB") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 20);
  for (int i = 0; i < 60; ++i) {
    const Plane p = test::random_plane(dim(rng), dim(rng), rng);
    const int tw = dim(rng), th = dim(rng);
    for (const auto& f : kFilters) {
      const Plane ref = oracle::to_u8(oracle::resize(oracle::from_plane(p), tw, th, as_oracle(f)));
      CHECK(max_abs_diff(resize_plane(p, tw, th, f), ref) <= 1);
    }
  }
}

TEST_CASE("axis weights form a partition of unity") {
  for (const auto& f : kFilters) {
    for (int in = 1; in <= 40; in += 3) {
      for (int out = 1; out <= 40; out += 2) {
        const auto aw = compute_axis_weights(in, out, f);
        REQUIRE(aw.offsets.size() == static_cast<std::size_t>(out + 1));
        for (int j = 0; j < out; ++j) {
          double s = 0.0;
          for (int t = aw.offsets[j]; t < aw.offsets[j + 1]; ++t) {
            s += aw.weight[t];
            CHECK(aw.index[t] >= 0);
            CHECK(aw.index[t] < in);
          }
          CHECK(std::abs(s - 1.0) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("integer downscales preserve the mean within half an LSB") {
  std::mt19937_64 rng(77);
  for (const auto& f : kFilters) {
    for (int k : {2, 3, 4, 6}) {
      const Plane p = test::random_plane(64 * k, 32 * k, rng);
      const Plane out = resize_plane(p, 64, 32, f);
      const double ms = std::accumulate(p.data.begin(), p.data.end(), 0.0) / p.data.size();
      const double mo = std::accumulate(out.data.begin(), out.data.end(), 0.0) / out.data.size();
      CHECK(std::abs(ms - mo) <= 0.5);
    }
  }
}

TEST_CASE("flat planes stay flat under every filter and factor") {
  for (const auto& f : kFilters) {
    for (int k : {2, 3, 4, 6}) {
      const Plane out = resize_plane(Plane(7 * k, 5 * k, 123), 7, 5, f);
      CHECK(std::all_of(out.data.begin(), out.data.end(), [](std::uint8_t v) { return v == 123; }));
    }
  }
}

TEST_CASE("2-D resize equals row pass then column pass, bit for bit") {
  std::mt19937_64 rng(8);
  const FloatPlane src = to_float(test::random_plane(17, 11, rng));
  for (const auto& f : kFilters) {
    const FloatPlane a = resize_float(src, 9, 23, f);
    const FloatPlane b = resize_cols(resize_rows(src, 9, f), 23, f);
    CHECK(a.data == b.data);
  }
}

TEST_CASE("fixed8 path stays close to float32") {
  std::mt19937_64 rng(4);
  const Plane p = test::random_plane(30, 20, rng);
  for (const auto& f : kFilters) {
    const Plane a = resize_plane(p, 13, 41, f, Precision::float32);
    const Plane b = resize_plane(p, 13, 41, f, Precision::fixed8);
    CHECK(max_abs_diff(a, b) <= 3);
  }
}

TEST_CASE("frame resizing geometry") {
  const PlanarFrame f(1920, 1080);
  const auto d = downscale_frame(f, ScaleFactor(3, 2));
  CHECK(d.width == 1280);
  CHECK(d.height == 720);
  CHECK(d.cb.width == 640);
  const auto d6 = downscale_frame(f, ScaleFactor(6, 1));
  CHECK(d6.width == 320);
  CHECK(d6.cr.height == 90);
  d6.validate();

  std::mt19937_64 rng(1);
  const PlanarFrame r = test::random_frame(33, 17, rng);
  CHECK(downscale_frame(r, ScaleFactor(1, 1)) == r);
  CHECK_THROWS_AS(downscale_frame(r, ScaleFactor(2, 3)), InvalidArgument);

  const auto up = upscale_frame(d6, 1920, 1080);
  CHECK(up.width == 1920);
  CHECK(std::all_of(up.y.data.begin(), up.y.data.end(), [](auto v) { return v == 16; }));
  CHECK(std::all_of(up.cb.data.begin(), up.cb.data.end(), [](auto v) { return v == 128; }));
  CHECK_THROWS_AS(upscale_frame(r, 10, 10), InvalidArgument);
}

TEST_CASE("constant image survives integer upscale then downscale") {
  PlanarFrame f(20, 12);
  std::fill(f.y.data.begin(), f.y.data.end(), 90);
  for (int k : {2, 3, 4}) {
    for (const auto& flt : kFilters) {
      const auto up = upscale_frame(f, 20 * k, 12 * k, flt);
      const auto down = downscale_frame(up, ScaleFactor(k, 1), flt, flt);
      CHECK(down == f);
    }
  }
}

TEST_CASE("filter names") {
  CHECK(FilterKind::parse("lanczos") == FilterKind::lanczos());
  CHECK(FilterKind::bicubic().a == doctest::Approx(-0.75));
  CHECK(FilterKind::lanczos().taps == 3);
  CHECK(FilterKind::bicubic().name() == "bicubic");
  CHECK_THROWS_AS(FilterKind::parse("nearest"), InvalidArgument);
}
