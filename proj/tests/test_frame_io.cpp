#include <doctest.h>

#include <numeric>
#include <sstream>

#include "dvp/error.hpp"
#include "dvp/frame.hpp"
#include "support.hpp"

using namespace dvp;

namespace {

std::string y4m_bytes(const std::string& header, int frames, std::size_t payload) {
  std::string s = header + "\n";
  for (int i = 0; i < frames; ++i) {
    s += "FRAME\n";
    for (std::size_t b = 0; b < payload; ++b) s.push_back(static_cast<char>((i * 31 + b) & 0xff));
  }
  return s;
}

}  // namespace

TEST_CASE("4x4 C420 stream gives two frames with 2x2 chroma") {
  std::istringstream in(y4m_bytes("YUV4MPEG2 W4 H4 F25:1 Ip A1:1 C420", 2, 24));
  const auto v = read_y4m(in);
  REQUIRE(v.frames.size() == 2);
  CHECK(v.info.width == 4);
  CHECK(v.info.fps == FrameRate{25, 1});
  CHECK(v.frames[0].y.size() == 16);
  CHECK(v.frames[0].cb.width == 2);
  CHECK(v.frames[0].cr.height == 2);
  CHECK(v.frames[1].y.at(0, 0) == 31);
}

TEST_CASE("header variants") {
  for (const char* cs : {"C420jpeg", "C420paldv", "C420mpeg2", ""}) {
    std::istringstream in(y4m_bytes(std::string("YUV4MPEG2 W2 H2 F30000:1001 ") + cs, 1, 6));
    const auto v = read_y4m(in);
    CHECK(v.frames.size() == 1);
    CHECK(v.info.fps == FrameRate{30000, 1001});
  }
  std::istringstream full(y4m_bytes("YUV4MPEG2 W2 H2 F25:1 C420jpeg XCOLORRANGE=FULL", 1, 6));
  CHECK(read_y4m(full).info.range == PixelRange::full);
}

TEST_CASE("malformed and unsupported streams are rejected") {
  auto fails = [](const std::string& s) {
    std::istringstream in(s);
    CHECK_THROWS_AS(read_y4m(in), FormatError);
  };
  fails(y4m_bytes("YUV4MPEG2 W4 H4 F25:1 C444", 1, 48));
  fails(y4m_bytes("YUV4MPEG2 W4 H4 F25:1 C420p10", 1, 48));
  fails(y4m_bytes("YUV4MPEG2 W4 H4 F25:1 It C420", 1, 24));
  fails(y4m_bytes("YUV4MPEG2 H4 F25:1", 1, 24));
  fails(y4m_bytes("YUV4MPEG2 W4 H4", 1, 24));
  fails(y4m_bytes("YUV4MPEG W4 H4 F25:1", 1, 24));
  fails(y4m_bytes("YUV4MPEG2 W4 H4 F25:1 C420", 1, 23));  // short payload
  std::string bad = y4m_bytes("YUV4MPEG2 W2 H2 F25:1", 1, 6);
  bad.replace(bad.find("FRAME"), 5, "FRAMX");
  fails(bad);
}

TEST_CASE("truncated payload reports truncation") {
  std::istringstream in(y4m_bytes("YUV4MPEG2 W4 H4 F25:1 C420", 1, 20));
  try {
    (void)read_y4m(in);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
}

TEST_CASE("1080p frame has 2,073,600 luma samples") {
  std::mt19937_64 rng(3);
  PlanarFrame f(1920, 1080);
  std::ostringstream out;
  VideoInfo info{1920, 1080, {25, 1}, PixelRange::limited};
  std::vector<PlanarFrame> frames(2, f);
  write_y4m(out, info, frames);
  std::istringstream in(out.str());
  const auto v = read_y4m(in);
  REQUIRE(v.frames.size() == 2);
  CHECK(v.frames[1].y.size() == 2073600u);
}

TEST_CASE("write/read round trip preserves payload bytes, odd sizes included") {
  std::mt19937_64 rng(11);
  for (auto [w, h] : {std::pair{7, 5}, std::pair{16, 9}, std::pair{1, 1}}) {
    std::vector<PlanarFrame> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(test::random_frame(w, h, rng));
    std::ostringstream out;
    write_y4m(out, VideoInfo{w, h, {24, 1}, PixelRange::limited}, frames);
    std::istringstream in(out.str());
    const auto v = read_y4m(in);
    REQUIRE(v.frames.size() == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) CHECK(v.frames[i] == frames[i]);
    CHECK(v.frames[0].cb.width == (w + 1) / 2);

    std::ostringstream again;
    write_y4m(again, v.info, v.frames);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("raw yuv420 round trip") {
  std::mt19937_64 rng(5);
  std::vector<PlanarFrame> frames{test::random_frame(5, 3, rng), test::random_frame(5, 3, rng)};
  std::ostringstream out;
  write_raw_yuv420(out, frames);
  CHECK(out.str().size() == 2u * (15 + 2 * 3 * 2));
  std::istringstream in(out.str());
  const auto back = read_raw_yuv420(in, 5, 3);
  REQUIRE(back.size() == 2);
  CHECK(back[1] == frames[1]);
  std::istringstream partial(out.str().substr(0, 30));
  CHECK_THROWS_AS(read_raw_yuv420(partial, 5, 3), FormatError);
}

TEST_CASE("GOP segmentation") {
  auto frames = [](int n) { return std::vector<PlanarFrame>(n, PlanarFrame(2, 2)); };
  auto g = segment_gops(frames(270), 90, {25, 1});
  REQUIRE(g.size() == 3);
  CHECK(g[2].start_frame == 180);
  CHECK(g[2].index == 2);

  g = segment_gops(frames(100), 90, {25, 1});
  REQUIRE(g.size() == 2);
  CHECK(g[0].size() == 90);
  CHECK(g[1].size() == 10);

  CHECK(segment_gops(frames(30), 30, {25, 1}).size() == 1);
  CHECK_THROWS_AS(segment_gops({}, 30, {25, 1}), InvalidArgument);
  CHECK_THROWS_AS(segment_gops(frames(3), 0, {25, 1}), InvalidArgument);

  std::vector<PlanarFrame> mixed = frames(3);
  mixed.push_back(PlanarFrame(4, 2));
  CHECK_THROWS_AS(segment_gops(mixed, 2, {25, 1}), ShapeError);
}

TEST_CASE("segments concatenate back to the input") {
  std::mt19937_64 rng(9);
  std::vector<PlanarFrame> frames;
  for (int i = 0; i < 23; ++i) frames.push_back(test::random_frame(3, 3, rng));
  for (int len : {1, 4, 7, 23, 40}) {
    std::vector<PlanarFrame> joined;
    for (const auto& g : segment_gops(frames, len, {25, 1})) {
      CHECK(g.start_frame == static_cast<int>(joined.size()));
      joined.insert(joined.end(), g.frames.begin(), g.frames.end());
    }
    CHECK(joined == frames);
  }
}

TEST_CASE("footprint keeps every n-th frame") {
  GopSegment g;
  for (int i = 0; i < 90; ++i) {
    PlanarFrame f(2, 2);
    f.y.data[0] = static_cast<std::uint8_t>(i);
    g.frames.push_back(f);
  }
  CHECK(footprint(g, 5).frames.size() == 18);
  CHECK(footprint(g, 1).frames.size() == 90);
  for (int n = 1; n <= 90; ++n) CHECK(footprint(g, n).frames.size() == static_cast<std::size_t>((90 + n - 1) / n));

  g.frames.resize(7);
  const auto v = footprint(g, 3);
  REQUIRE(v.frames.size() == 3);
  CHECK(v.frames[0]->y.data[0] == 0);
  CHECK(v.frames[1]->y.data[0] == 3);
  CHECK(v.frames[2]->y.data[0] == 6);
  const GopSegment m = v.materialize();
  CHECK(m.size() == 3);
  CHECK(m.frames[2].y.data[0] == 6);
  CHECK_THROWS_AS(footprint(g, 0), InvalidArgument);
}

TEST_CASE("content hash tracks payload and geometry") {
  std::mt19937_64 rng(1);
  std::vector<PlanarFrame> a{test::random_frame(8, 8, rng)};
  auto b = a;
  CHECK(content_hash(a) == content_hash(b));
  b[0].cr.data[3] ^= 1;
  CHECK(content_hash(a) != content_hash(b));
  std::vector<PlanarFrame> c{PlanarFrame(4, 2)}, d{PlanarFrame(2, 4)};
  CHECK(content_hash(c) != content_hash(d));
}
