#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "dvp/error.hpp"
#include "dvp/netinfo.hpp"
#include "dvp/precoder.hpp"
#include "dvp/weights.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dvp;

namespace {

FloatPlane random_luma(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return to_float(test::random_plane(w, h, rng, 16, 235), 1.0f / 255.0f);
}

oracle::Image as_image(const FloatPlane& p) {
  oracle::Image img{p.width, p.height, std::vector<double>(p.data.begin(), p.data.end())};
  return img;
}

double max_abs(const FloatPlane& a, const oracle::Image& b) {
  REQUIRE(a.width == b.w);
  REQUIRE(a.height == b.h);
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(double(a.data[i]) - b.v[i]));
  return m;
}


}  // namespace

TEST_CASE("zero weights give zero root features of the input size") {
  const NetworkWeights w = make_zero_weights();
  const FeatureMap r = root_forward(random_luma(120, 120, 1), w);
  CHECK(r.channels == 4);
  CHECK(r.height == 120);
  CHECK(r.width == 120);
  CHECK(std::all_of(r.data.begin(), r.data.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("forward pass matches the double-precision oracle") {
  for (std::uint64_t seed : {1u, 2u}) {
    NetworkWeights w = init_xavier(seed);
    // Non-trivial biases and slopes so every term is exercised.
    auto recs = to_records(w);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<float> u(-0.2f, 0.2f);
    for (auto& r : recs) {
      if (r.name.ends_with(".bias")) for (auto& v : r.values) v = u(rng);
      if (r.name.ends_with(".prelu")) for (auto& v : r.values) v = 0.25f + u(rng);
    }
    w = from_records(recs, NetworkTopology::canonical());
    for (auto [W, H] : {std::pair{40, 30}, std::pair{37, 29}}) {
      const FloatPlane luma = random_luma(W, H, seed * 7 + W);
      const auto got = precode_luma(luma, w, canonical_scales());
      const auto ref = oracle::network_forward(recs, as_image(luma));
      REQUIRE(got.size() == 8);
      for (const auto& [s, img] : ref) CHECK(max_abs(got.at(s), img) < 1e-4);

      const FeatureMap r = root_forward(luma, w);
      const auto rr = oracle::root_features(recs, as_image(luma));
      for (int c = 0; c < 4; ++c) CHECK(max_abs(r.channel_plane(c), rr[c]) < 1e-5);
    }
  }
}

TEST_CASE("linear baseline weights reduce to bilinear downscaling") {
  const NetworkWeights w = init_linear_baseline();
  const FloatPlane luma = random_luma(45, 31, 3);
  const auto out = precode_luma(luma, w, canonical_scales());
  for (const auto& s : canonical_scales()) {
    const FloatPlane ref = resize_float(luma, s.output_dim(45), s.output_dim(31), FilterKind::bilinear());
    CHECK(out.at(s).data == ref.data);
  }
}

TEST_CASE("strided and resampled blocks") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  FeatureMap in(4, 12, 10);
  for (auto& v : in.data) v = u(rng);

  PrecodingBlock b = make_zero_weights().streams[0].blocks[1];  // alpha = 3/2 for s = 2
  REQUIRE(b.alpha == ScaleFactor(3, 2));
  REQUIRE(b.strided() == false);
  // conv1 copies channel i into channel i, conv_out copies it back.
  for (int c = 0; c < 4; ++c) {
    b.conv1.weight[((c * 4 + c) * 3 + 1) * 3 + 1] = 1.0f;
    b.conv_out.weight[c * 8 + c] = 1.0f;
  }
  FeatureMap r_ds(4, 8, 7);
  for (auto& v : r_ds.data) v = u(rng);

  // Non-integer ratio: bilinear resample to the target, then stride 1.
  const FeatureMap p = block_forward(in, b, r_ds);
  const FeatureMap lin = resize_channels(in, 8, 7, FilterKind::bilinear());
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const float z = lin.data[i] + r_ds.data[i];
    CHECK(p.data[i] == doctest::Approx(z).epsilon(1e-6));
  }

  // Integer ratio: plain subsampling through the stride, no resampling.
  b.alpha = ScaleFactor(2, 1);
  FeatureMap r2(4, 6, 5, 0.0f);
  const FeatureMap q = block_forward(in, b, r2);
  CHECK(q.height == 6);
  CHECK(q.width == 5);
  for (int c = 0; c < 4; ++c) {
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 5; ++x) CHECK(q.at(c, y, x) == in.at(c, 2 * y, 2 * x));
    }
  }
  FeatureMap too_big(4, 7, 5);
  CHECK_THROWS_AS(block_forward(in, b, too_big), ShapeError);
}

TEST_CASE("zeroed nonlinear path leaves skip plus root residual") {
  NetworkWeights w = init_xavier(9);
  PrecodingBlock b = w.streams[2].blocks[1];  // alpha = 2
  std::fill(b.conv_mid.weight.begin(), b.conv_mid.weight.end(), 0.0f);
  std::fill(b.conv2.weight.begin(), b.conv2.weight.end(), 0.0f);
  std::fill(b.act2.slope.begin(), b.act2.slope.end(), 1.0f);
  std::fill(b.act_out.slope.begin(), b.act_out.slope.end(), 1.0f);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  FeatureMap in(4, 9, 9), r(4, 5, 5);
  for (auto& v : in.data) v = u(rng);
  for (auto& v : r.data) v = u(rng);
  const FeatureMap got = block_forward(in, b, r);

  // By hand: c = conv1(in) at stride 2, p = conv_out(c) + r.
  for (int o = 0; o < 4; ++o) {
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 5; ++x) {
        double z = b.conv_out.bias[o] + r.at(o, y, x);
        for (int m = 0; m < 8; ++m) {
          double c = b.conv1.bias[m];
          for (int i = 0; i < 4; ++i) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = 2 * y + ky - 1, sx = 2 * x + kx - 1;
                if (sy >= 0 && sx >= 0 && sy < 9 && sx < 9) c += b.conv1.w(m, i, ky, kx) * in.at(i, sy, sx);
              }
            }
          }
          z += b.conv_out.w(o, m, 0, 0) * c;
        }
        CHECK(got.at(o, y, x) == doctest::Approx(z).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("shared stream blocks are evaluated once") {
  const NetworkWeights w = init_xavier(3);
  const FloatPlane luma = random_luma(48, 36, 4);
  PrecodeStats st;
  const std::vector<ScaleFactor> s1{ScaleFactor(4, 3), ScaleFactor(2, 1), ScaleFactor(4, 1)};
  (void)precode_luma(luma, w, s1, {}, &st);
  CHECK(st.root_evals == 1);
  CHECK(st.block_evals == 3);
  CHECK(st.projection_evals == 3);

  PrecodeStats all;
  (void)precode_luma(luma, w, canonical_scales(), {}, &all);
  CHECK(all.root_evals == 1);
  CHECK(all.block_evals == 8);

  PrecodeStats deep;
  const std::vector<ScaleFactor> six{ScaleFactor(6, 1)};
  const auto out = precode_luma(luma, w, six, {}, &deep);
  CHECK(deep.block_evals == 3);
  CHECK(deep.projection_evals == 1);
  CHECK(out.size() == 1);
}

TEST_CASE("precoded frames have the rounded geometry and legal ranges") {
  const NetworkWeights w = init_xavier(12);
  std::mt19937_64 rng(3);
  const PlanarFrame f = test::random_frame(121, 97, rng);
  const auto out = precode_frame(f, w, all_modes());
  REQUIRE(out.size() == 9);
  CHECK(out.at(ScaleFactor(1, 1)) == f);
  for (const auto& s : canonical_scales()) {
    const auto& p = out.at(s);
    p.validate();
    CHECK(p.width == s.output_dim(121));
    CHECK(p.height == s.output_dim(97));
    for (auto v : p.y.data) CHECK((v >= 16 && v <= 235));
    for (auto v : p.cb.data) CHECK((v >= 16 && v <= 240));
  }
  const std::vector<ScaleFactor> bad{ScaleFactor(7, 2)};
  CHECK_THROWS_AS(precode_frame(f, w, bad), InvalidArgument);
}

TEST_CASE("full-range frames clip to [0,255] and luma follows the network") {
  NetworkWeights w = init_linear_baseline();
  std::mt19937_64 rng(4);
  PlanarFrame f = test::random_frame(30, 20, rng, PixelRange::full);
  const auto out = precode_frame(f, w, std::vector<ScaleFactor>{ScaleFactor(2, 1)});
  const Plane ref = resize_plane(f.y, 15, 10, FilterKind::bilinear());
  int worst = 0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    worst = std::max(worst, std::abs(int(ref.data[i]) - int(out.at(ScaleFactor(2, 1)).y.data[i])));
  }
  CHECK(worst <= 1);
}

TEST_CASE("eval_loss") {
  const FloatPlane x = random_luma(8, 8, 21);
  std::map<ScaleFactor, FloatPlane> same{{ScaleFactor(2, 1), x}, {ScaleFactor(3, 1), x}};
  CHECK(eval_loss(same, x, 0.5) == 0.0);

  FloatPlane shifted = x;
  for (auto& v : shifted.data) v += 0.125f;
  CHECK(eval_loss({{ScaleFactor(2, 1), shifted}}, x, 0.0) == doctest::Approx(0.125).epsilon(1e-6));
  CHECK(eval_loss({{ScaleFactor(2, 1), shifted}}, x, 0.5) == doctest::Approx(0.125).epsilon(1e-6));

  // Scalar oracle with forward differences and clamp-to-edge.
  const FloatPlane y = random_luma(8, 8, 22);
  double l1 = 0.0, g = 0.0;
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const int cn = c == 7 ? 7 : c + 1, rn = r == 7 ? 7 : r + 1;
      l1 += std::abs(double(y.at(c, r)) - x.at(c, r));
      g += std::abs((double(y.at(cn, r)) - y.at(c, r)) - (double(x.at(cn, r)) - x.at(c, r)));
      g += std::abs((double(y.at(c, rn)) - y.at(c, r)) - (double(x.at(c, rn)) - x.at(c, r)));
    }
  }
  const double expect = (l1 + 0.5 * g) / 64.0;
  CHECK(eval_loss({{ScaleFactor(2, 1), y}}, x, 0.5) == doctest::Approx(expect).epsilon(1e-9));

  const LossSample batch[] = {{{{ScaleFactor(2, 1), y}}, x}, {{{ScaleFactor(2, 1), x}}, x}};
  CHECK(eval_loss(batch, 0.5) == doctest::Approx(expect / 2).epsilon(1e-9));
  CHECK_THROWS_AS(eval_loss({{ScaleFactor(2, 1), random_luma(4, 4, 1)}}, x, 0.5), ShapeError);
  CHECK_THROWS_AS(eval_loss(same, x, -1.0), InvalidArgument);
}

TEST_CASE("DVPW round trip is byte identical") {
  const NetworkWeights w = init_xavier(42);
  const auto bytes = save_weights(w);
  CHECK(std::memcmp(bytes.data(), "DVPW", 4) == 0);
  const NetworkWeights back = load_weights(bytes);
  CHECK(save_weights(back) == bytes);
  CHECK(back.metadata.version == 1);
  CHECK(back.metadata.run_id.size() == 8);
  CHECK(count_params_and_macs(back, 1920, 1080).total_params == 5928);

  test::TempDir dir;
  save_weights_file(w, (dir / "w.dvpw").string());
  CHECK(save_weights(load_weights_file((dir / "w.dvpw").string())) == bytes);
}

TEST_CASE("DVPW validation") {
  const auto recs = to_records(init_xavier(1));
  SUBCASE("bad magic") {
    auto b = encode_dvpw(recs);
    b[0] = 'X';
    CHECK_THROWS_WITH_AS(load_weights(b), doctest::Contains("magic"), FormatError);
  }
  SUBCASE("version 99") {
    CHECK_THROWS_WITH_AS(load_weights(encode_dvpw(recs, 99)), doctest::Contains("version 99"), FormatError);
  }
  SUBCASE("corrupt payload") {
    auto b = encode_dvpw(recs);
    b[b.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(load_weights(b), FormatError);
  }
  SUBCASE("truncated tensor") {
    auto r = recs;
    r[3].values.pop_back();
    r[3].dims.back() -= 0;  // dims still claim the full tensor
    CHECK_THROWS_AS(load_weights(encode_dvpw(r)), Error);
  }
  SUBCASE("shape mismatch") {
    auto r = recs;
    r[0].dims = {8, 1, 1, 9};
    CHECK_THROWS_AS(load_weights(encode_dvpw(r)), ShapeError);
  }
  SUBCASE("missing record") {
    auto r = recs;
    r.pop_back();
    CHECK_THROWS_AS(load_weights(encode_dvpw(r)), ShapeError);
  }
  SUBCASE("duplicate record") {
    auto r = recs;
    r.push_back(r.front());
    CHECK_THROWS_AS(load_weights(encode_dvpw(r)), FormatError);
  }
  SUBCASE("NaN") {
    auto r = recs;
    r[5].values[0] = std::nanf("");
    CHECK_THROWS_AS(load_weights(encode_dvpw(r)), FormatError);
  }
  SUBCASE("truncated file") {
    auto b = encode_dvpw(recs);
    b.resize(b.size() - 10);
    CHECK_THROWS_AS(load_weights(b), FormatError);
  }
}

TEST_CASE("canonical record names") {
  const auto names = canonical_records(NetworkTopology::canonical());
  auto has = [&](const std::string& n) {
    return std::any_of(names.begin(), names.end(), [&](const auto& p) { return p.first == n; });
  };
  CHECK(has("root.conv1"));
  CHECK(has("root.conv2.prelu"));
  CHECK(has("s1.b2.conv_mid"));
  CHECK(has("s1.f3"));
  CHECK(has("s3.b2.conv_out.bias"));
  CHECK_FALSE(has("s3.b3.conv1"));
  CHECK_FALSE(has("s1.f1.prelu"));
}

TEST_CASE("xavier initializer") {
  const NetworkWeights a = init_xavier(7), b = init_xavier(7), c = init_xavier(8);
  CHECK(save_weights(a) == save_weights(b));
  CHECK(save_weights(a) != save_weights(c));
  const auto& blk = a.streams[0].blocks[0];
  CHECK(blk.act1.slope[0] == 0.25f);
  CHECK(blk.act2.slope[0] == 1.0f);
  const double limit = std::sqrt(6.0 / (4 * 9 + 8 * 9));
  for (float v : blk.conv1.weight) CHECK(std::abs(v) <= limit);
}

TEST_CASE("parameter and MAC budget") {
  const NetworkWeights w = make_zero_weights();
  const NetInfo info = count_params_and_macs(w, 1920, 1080);
  CHECK(info.total_params == 5928);
  CHECK(info.root_params == 128);
  CHECK(info.projection_params == 296);
  REQUIRE(info.blocks.size() == 8);
  const auto& b = w.streams[0].blocks[0];
  CHECK(block_params(b) == 688);
  CHECK(b.conv1.weight_count() + b.conv_mid.weight_count() + b.conv2.weight_count() + b.conv_out.weight_count() ==
        640);
  CHECK(block_macs(b, 1920, 1080) == 640ull * 1920 * 1080);
  CHECK(info.root_macs == 104ull * 1920 * 1080);
  CHECK(std::abs(double(info.total_macs) - 3.38e9) / 3.38e9 < 0.01);

  const NetInfo shared = count_params_and_macs(make_zero_weights(NetworkTopology::canonical(true)), 1920, 1080);
  CHECK(shared.total_params == 5928 - 688);
  CHECK(shared.total_macs == info.total_macs);
}
