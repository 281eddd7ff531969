#include "dvp/precoder.hpp"

#include <algorithm>
#include <cmath>

#include "dvp/error.hpp"

namespace dvp {

FeatureMap root_forward(const FloatPlane& luma, const NetworkWeights& w) {
  if (luma.width < 1 || luma.height < 1) throw_shape("root: empty input");
  FeatureMap h = conv2d(FeatureMap::from_plane(luma), w.root_conv1);
  prelu_inplace(h, w.root_act1);
  return conv2d(h, w.root_conv2);
}

FeatureMap block_forward(const FeatureMap& input, const PrecodingBlock& block, const FeatureMap& r_ds,
                         const PrecodeOptions& opts) {
  const int th = r_ds.height;
  const int tw = r_ds.width;
  if (r_ds.channels != kRootChannels || input.channels != kRootChannels) {
    throw_shape("block: expected " + std::to_string(kRootChannels) + "-channel input and residual");
  }
  FeatureMap c;
  if (block.strided()) {
    const int stride = static_cast<int>(block.alpha.num());
    const int natural_h = (input.height + stride - 1) / stride;
    const int natural_w = (input.width + stride - 1) / stride;
    if (th > natural_h || tw > natural_w) {
      throw_shape("block: residual " + std::to_string(tw) + "x" + std::to_string(th) +
                  " exceeds the strided output of a " + std::to_string(input.width) + "x" +
                  std::to_string(input.height) + " input");
    }
    c = conv2d(input, block.conv1, stride, th, tw);
  } else {
    c = conv2d(resize_channels(input, th, tw, opts.linear_downscaler), block.conv1);
  }

  FeatureMap t = c;
  prelu_inplace(t, block.act1);
  FeatureMap u = conv2d(t, block.conv_mid);
  prelu_inplace(u, block.act_mid);
  FeatureMap v = conv2d(u, block.conv2);
  prelu_inplace(v, block.act2);
  add_inplace(v, c);
  FeatureMap z = conv2d(v, block.conv_out);
  add_inplace(z, r_ds);
  prelu_inplace(z, block.act_out);
  return z;
}

std::map<ScaleFactor, FloatPlane> precode_luma(const FloatPlane& luma, const NetworkWeights& w,
                                               std::span<const ScaleFactor> scales, const PrecodeOptions& opts,
                                               PrecodeStats* stats) {
  // Deepest requested block per stream.
  std::vector<int> depth(w.streams.size(), -1);
  for (const auto& s : scales) {
    if (s.is_native()) continue;
    const auto [m, n] = w.locate(s);
    if (m < 0) throw_invalid("scale " + s.to_string() + " is not produced by the network");
    depth[m] = std::max(depth[m], n);
  }
  std::map<ScaleFactor, FloatPlane> out;
  if (std::all_of(depth.begin(), depth.end(), [](int d) { return d < 0; })) return out;

  const FeatureMap r = root_forward(luma, w);
  if (stats) ++stats->root_evals;
  FeatureMap activated = r;
  prelu_inplace(activated, w.root_act2);

  for (std::size_t m = 0; m < w.streams.size(); ++m) {
    const auto& st = w.streams[m];
    const FeatureMap* input = &activated;
    FeatureMap current;
    for (int n = 0; n <= depth[m]; ++n) {
      const auto& block = st.blocks[n];
      const int th = block.scale.output_dim(luma.height);
      const int tw = block.scale.output_dim(luma.width);
      const FeatureMap r_ds = resize_channels(r, th, tw, opts.linear_downscaler);
      FeatureMap p = block_forward(*input, block, r_ds, opts);
      if (stats) ++stats->block_evals;
      if (std::find(scales.begin(), scales.end(), block.scale) != scales.end()) {
        out[block.scale] = conv2d(p, st.projections[n]).channel_plane(0);
        if (stats) ++stats->projection_evals;
      }
      current = std::move(p);
      input = &current;
    }
  }
  return out;
}

namespace {

int luma_lo(PixelRange r) { return r == PixelRange::limited ? 16 : 0; }
int luma_hi(PixelRange r) { return r == PixelRange::limited ? 235 : 255; }
int chroma_lo(PixelRange r) { return r == PixelRange::limited ? 16 : 0; }
int chroma_hi(PixelRange r) { return r == PixelRange::limited ? 240 : 255; }

Plane clamp_plane(Plane p, int lo, int hi) {
  for (auto& v : p.data) v = static_cast<std::uint8_t>(std::clamp<int>(v, lo, hi));
  return p;
}

void check_modes(std::span<const ScaleFactor> scales) {
  for (const auto& s : scales) {
    if (!s.is_native() && !is_canonical(s)) throw_invalid("scale " + s.to_string() + " is not in the canonical set");
  }
}

}  // namespace

std::map<ScaleFactor, PlanarFrame> precode_frame(const PlanarFrame& frame, const NetworkWeights& w,
                                                 std::span<const ScaleFactor> scales, const PrecodeOptions& opts,
                                                 PrecodeStats* stats) {
  frame.validate();
  check_modes(scales);
  std::map<ScaleFactor, PlanarFrame> out;
  const auto luma = precode_luma(to_float(frame.y, 1.0f / 255.0f), w, scales, opts, stats);
  for (const auto& s : scales) {
    if (s.is_native()) {
      out[s] = frame;
      continue;
    }
    PlanarFrame f;
    f.width = s.output_dim(frame.width);
    f.height = s.output_dim(frame.height);
    f.range = frame.range;
    f.y = quantize(luma.at(s), 255.0f, luma_lo(frame.range), luma_hi(frame.range));
    const int cw = chroma_dim(f.width);
    const int ch = chroma_dim(f.height);
    f.cb = clamp_plane(resize_plane(frame.cb, cw, ch, opts.chroma_filter), chroma_lo(frame.range),
                       chroma_hi(frame.range));
    f.cr = clamp_plane(resize_plane(frame.cr, cw, ch, opts.chroma_filter), chroma_lo(frame.range),
                       chroma_hi(frame.range));
    out[s] = std::move(f);
  }
  return out;
}

namespace {

double sample_loss(const FloatPlane& xh, const FloatPlane& x, double lambda) {
  if (xh.width != x.width || xh.height != x.height) throw_shape("loss: upscaled plane differs from ground truth");
  const int w = x.width;
  const int h = x.height;
  double l1 = 0.0;
  double grad = 0.0;
  for (int yy = 0; yy < h; ++yy) {
    const int yn = std::min(yy + 1, h - 1);
    for (int xx = 0; xx < w; ++xx) {
      const int xn = std::min(xx + 1, w - 1);
      const double a = xh.at(xx, yy);
      const double b = x.at(xx, yy);
      l1 += std::abs(a - b);
      const double gx = (xh.at(xn, yy) - a) - (x.at(xn, yy) - b);
      const double gy = (xh.at(xx, yn) - a) - (x.at(xx, yn) - b);
      grad += std::abs(gx) + std::abs(gy);
    }
  }
  const double n = static_cast<double>(w) * h;
  return (l1 + lambda * grad) / n;
}

}  // namespace

double eval_loss(const std::map<ScaleFactor, FloatPlane>& upscaled, const FloatPlane& ground_truth, double lambda) {
  if (lambda < 0.0) throw_invalid("loss: lambda must be non-negative");
  if (ground_truth.width < 1 || ground_truth.height < 1) throw_shape("loss: empty ground truth");
  double total = 0.0;
  for (const auto& [s, xh] : upscaled) total += sample_loss(xh, ground_truth, lambda);
  return total;
}

double eval_loss(std::span<const LossSample> batch, double lambda) {
  if (batch.empty()) throw_invalid("loss: empty batch");
  double total = 0.0;
  for (const auto& s : batch) total += eval_loss(s.upscaled, s.ground_truth, lambda);
  return total / static_cast<double>(batch.size());
}

NetworkDownscaler::NetworkDownscaler(std::shared_ptr<const NetworkWeights> weights, PrecodeOptions opts)
    : weights_(std::move(weights)), opts_(opts) {
  if (!weights_) throw_invalid("network downscaler needs weights");
}

std::map<ScaleFactor, PlanarFrame> NetworkDownscaler::precode(const PlanarFrame& frame,
                                                              std::span<const ScaleFactor> scales) const {
  return precode_frame(frame, *weights_, scales, opts_);
}

std::string NetworkDownscaler::id() const {
  return "network:" + weights_->metadata.run_id + ":" + opts_.linear_downscaler.name() + ":" +
         opts_.chroma_filter.name();
}

LinearDownscaler::LinearDownscaler(FilterKind luma, FilterKind chroma) : luma_(luma), chroma_(chroma) {}

std::map<ScaleFactor, PlanarFrame> LinearDownscaler::precode(const PlanarFrame& frame,
                                                             std::span<const ScaleFactor> scales) const {
  check_modes(scales);
  std::map<ScaleFactor, PlanarFrame> out;
  for (const auto& s : scales) out[s] = downscale_frame(frame, s, luma_, chroma_);
  return out;
}

std::string LinearDownscaler::id() const { return "linear:" + luma_.name() + ":" + chroma_.name(); }

}  // namespace dvp
