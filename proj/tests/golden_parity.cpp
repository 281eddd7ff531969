#include "golden_parity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dvp/precoder.hpp"
#include "dvp/resample.hpp"

namespace dvp::test {

namespace {

std::map<ScaleFactor, FloatPlane> upscaled(const std::map<ScaleFactor, FloatPlane>& outs, int w, int h) {
  std::map<ScaleFactor, FloatPlane> up;
  for (const auto& [s, p] : outs) up[s] = resize_float(p, w, h, FilterKind::bilinear());
  return up;
}

}  // namespace

bool ParityReport::pass() const {
  return vectors > 0 && max_float_error <= 1e-4 && max_root_error <= 1e-4 && max_lsb_error <= 1 &&
         max_loss_rel_error <= 1e-5;
}

std::string ParityReport::summary() const {
  std::ostringstream os;
  os << vectors << " vectors, float " << max_float_error << ", root " << max_root_error << ", " << max_lsb_error
     << " LSB, loss rel " << max_loss_rel_error;
  return os.str();
}

ParityReport golden_parity(const std::filesystem::path& dir) {
  const GoldenPack pack = read_golden_pack(dir);
  const auto wpath = pack.weights.is_absolute() ? pack.weights : dir / pack.weights;
  const NetworkWeights w = load_weights_file(wpath.string());
  const bool full = pack.range == PixelRange::full;
  ParityReport rep;
  for (const auto& v : pack.vectors) {
    ++rep.vectors;
    if (v.root) {
      const FeatureMap r = root_forward(v.input, w);
      if (r.data.size() != v.root->data.size()) {
        rep.max_root_error = INFINITY;
      } else {
        for (std::size_t i = 0; i < r.data.size(); ++i) {
          rep.max_root_error = std::max(rep.max_root_error, double(std::abs(r.data[i] - v.root->data[i])));
        }
      }
    }
    std::vector<ScaleFactor> scales;
    for (const auto& [s, o] : v.outputs) scales.push_back(s);
    const auto outs = precode_luma(v.input, w, scales);
    for (const auto& [s, o] : v.outputs) {
      const FloatPlane& got = outs.at(s);
      if (got.width != o.float_out.width || got.height != o.float_out.height) {
        rep.max_float_error = INFINITY;
        rep.max_lsb_error = 255;
        continue;
      }
      for (std::size_t i = 0; i < got.data.size(); ++i) {
        rep.max_float_error = std::max(rep.max_float_error, double(std::abs(got.data[i] - o.float_out.data[i])));
      }
      const Plane q = quantize(got, 255.0f, full ? 0 : 16, full ? 255 : 235);
      for (std::size_t i = 0; i < q.data.size(); ++i) {
        rep.max_lsb_error = std::max(rep.max_lsb_error, std::abs(int(q.data[i]) - int(o.quantized.data[i])));
      }
    }
    if (v.loss) {
      const double l = eval_loss(upscaled(outs, v.input.width, v.input.height), v.input, pack.lambda);
      rep.max_loss_rel_error =
          std::max(rep.max_loss_rel_error, std::abs(l - *v.loss) / std::max(std::abs(*v.loss), 1e-12));
    }
  }
  return rep;
}

GoldenPack engine_pack(const NetworkWeights& w, const std::filesystem::path& weights_file, int width, int height,
                       int vectors, std::uint64_t seed) {
  GoldenPack pack;
  pack.seed = seed;
  pack.weights = weights_file;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(16.0f / 255.0f, 235.0f / 255.0f);
  for (int k = 0; k < vectors; ++k) {
    GoldenVector v;
    v.input = FloatPlane(width, height);
    for (auto& x : v.input.data) x = u(rng);
    v.root = root_forward(v.input, w);
    const auto outs = precode_luma(v.input, w, canonical_scales());
    for (const auto& [s, p] : outs) v.outputs[s] = GoldenOutput{p, quantize(p, 255.0f, 16, 235)};
    v.loss = eval_loss(upscaled(outs, width, height), v.input, pack.lambda);
    pack.vectors.push_back(std::move(v));
  }
  return pack;
}

}  // namespace dvp::test
