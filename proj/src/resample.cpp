#include "dvp/resample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "dvp/error.hpp"

namespace dvp {

FilterKind FilterKind::parse(std::string_view name) {
  if (name == "bilinear") return bilinear();
  if (name == "bicubic") return bicubic();
  if (name == "lanczos") return lanczos();
  throw_invalid("unknown filter '" + std::string(name) + "' (bilinear|bicubic|lanczos)");
}

std::string FilterKind::name() const {
  switch (type) {
    case Type::bilinear:
      return "bilinear";
    case Type::bicubic:
      return "bicubic";
    case Type::lanczos:
      return "lanczos";
  }
  return "?";
}

double FilterKind::radius() const {
  switch (type) {
    case Type::bilinear:
      return 1.0;
    case Type::bicubic:
      return 2.0;
    case Type::lanczos:
      return static_cast<double>(taps);
  }
  return 1.0;
}

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

double FilterKind::operator()(double x) const {
  x = std::abs(x);
  switch (type) {
    case Type::bilinear:
      return x < 1.0 ? 1.0 - x : 0.0;
    case Type::bicubic:
      if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
      if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
      return 0.0;
    case Type::lanczos:
      return x < taps ? sinc(x) * sinc(x / taps) : 0.0;
  }
  return 0.0;
}

AxisWeights compute_axis_weights(int in_size, int out_size, const FilterKind& filter) {
  if (in_size < 1 || out_size < 1) throw_invalid("resize dimensions must be positive");
  AxisWeights aw;
  aw.in_size = in_size;
  aw.out_size = out_size;
  aw.offsets.reserve(out_size + 1);
  aw.offsets.push_back(0);

  const double ratio = static_cast<double>(in_size) / out_size;
  const double stretch = std::max(1.0, ratio);
  const double support = filter.radius() * stretch;

  std::vector<double> w;
  std::vector<int> idx;
  for (int j = 0; j < out_size; ++j) {
    const double center = (j + 0.5) * ratio - 0.5;
    const int lo = static_cast<int>(std::ceil(center - support));
    const int hi = static_cast<int>(std::floor(center + support));
    w.clear();
    idx.clear();
    double sum = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double k = filter((i - center) / stretch);
      if (k == 0.0) continue;
      const int ci = std::clamp(i, 0, in_size - 1);
      // Clamped taps that land on the same sample are merged.
      if (!idx.empty() && idx.back() == ci) {
        w.back() += k;
      } else {
        idx.push_back(ci);
        w.push_back(k);
      }
      sum += k;
    }
    if (idx.empty() || sum == 0.0) {
      // Only reachable when the support collapses onto a kernel zero.
      idx.assign(1, std::clamp(static_cast<int>(std::lround(center)), 0, in_size - 1));
      w.assign(1, 1.0);
      sum = 1.0;
    }
    for (std::size_t t = 0; t < idx.size(); ++t) {
      aw.index.push_back(idx[t]);
      aw.weight.push_back(static_cast<float>(w[t] / sum));
    }
    aw.offsets.push_back(static_cast<int>(aw.index.size()));
  }
  return aw;
}

FloatPlane resize_rows(const FloatPlane& src, int target_w, const FilterKind& filter) {
  if (target_w < 1) throw_invalid("zero-sized resize target");
  if (target_w == src.width) return src;
  const AxisWeights aw = compute_axis_weights(src.width, target_w, filter);
  FloatPlane out(target_w, src.height);
  for (int y = 0; y < src.height; ++y) {
    const float* row = src.data.data() + static_cast<std::size_t>(y) * src.width;
    float* dst = out.data.data() + static_cast<std::size_t>(y) * target_w;
    for (int x = 0; x < target_w; ++x) {
      float acc = 0.0f;
      for (int t = aw.offsets[x]; t < aw.offsets[x + 1]; ++t) acc += aw.weight[t] * row[aw.index[t]];
      dst[x] = acc;
    }
  }
  return out;
}

FloatPlane resize_cols(const FloatPlane& src, int target_h, const FilterKind& filter) {
  if (target_h < 1) throw_invalid("zero-sized resize target");
  if (target_h == src.height) return src;
  const AxisWeights aw = compute_axis_weights(src.height, target_h, filter);
  FloatPlane out(src.width, target_h);
  const std::size_t w = src.width;
  for (int y = 0; y < target_h; ++y) {
    float* dst = out.data.data() + y * w;
    for (int t = aw.offsets[y]; t < aw.offsets[y + 1]; ++t) {
      const float k = aw.weight[t];
      const float* row = src.data.data() + static_cast<std::size_t>(aw.index[t]) * w;
      for (std::size_t x = 0; x < w; ++x) dst[x] += k * row[x];
    }
  }
  return out;
}

FloatPlane resize_float(const FloatPlane& src, int target_w, int target_h, const FilterKind& filter) {
  if (target_w < 1 || target_h < 1) throw_invalid("zero-sized resize target");
  return resize_cols(resize_rows(src, target_w, filter), target_h, filter);
}

FloatPlane to_float(const Plane& p, float scale) {
  FloatPlane out(p.width, p.height);
  for (std::size_t i = 0; i < p.data.size(); ++i) out.data[i] = static_cast<float>(p.data[i]) * scale;
  return out;
}

Plane quantize(const FloatPlane& p, float scale, int lo, int hi) {
  Plane out(p.width, p.height);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    // std::round rounds halves away from zero.
    const float v = std::round(p.data[i] * scale);
    out.data[i] = static_cast<std::uint8_t>(std::clamp(v, static_cast<float>(lo), static_cast<float>(hi)));
  }
  return out;
}

namespace {

// Weights in 1/256 units that sum to exactly 256.
std::vector<std::int32_t> fixed_weights(const AxisWeights& aw) {
  std::vector<std::int32_t> q(aw.weight.size());
  for (int j = 0; j < aw.out_size; ++j) {
    int sum = 0;
    int biggest = aw.offsets[j];
    for (int t = aw.offsets[j]; t < aw.offsets[j + 1]; ++t) {
      q[t] = static_cast<std::int32_t>(std::lround(aw.weight[t] * 256.0f));
      sum += q[t];
      if (aw.weight[t] > aw.weight[biggest]) biggest = t;
    }
    q[biggest] += 256 - sum;
  }
  return q;
}

Plane resize_fixed8(const Plane& src, int target_w, int target_h, const FilterKind& filter) {
  const AxisWeights hx = compute_axis_weights(src.width, target_w, filter);
  const AxisWeights vy = compute_axis_weights(src.height, target_h, filter);
  const auto qx = fixed_weights(hx);
  const auto qy = fixed_weights(vy);

  std::vector<std::int32_t> mid(static_cast<std::size_t>(target_w) * src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < target_w; ++x) {
      std::int32_t acc = 0;
      for (int t = hx.offsets[x]; t < hx.offsets[x + 1]; ++t) acc += qx[t] * src.at(hx.index[t], y);
      mid[static_cast<std::size_t>(y) * target_w + x] = acc;
    }
  }
  Plane out(target_w, target_h);
  for (int y = 0; y < target_h; ++y) {
    for (int x = 0; x < target_w; ++x) {
      std::int64_t acc = 0;
      for (int t = vy.offsets[y]; t < vy.offsets[y + 1]; ++t) {
        acc += static_cast<std::int64_t>(qy[t]) * mid[static_cast<std::size_t>(vy.index[t]) * target_w + x];
      }
      const std::int64_t v = (acc + 32768) >> 16;
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp<std::int64_t>(v, 0, 255));
    }
  }
  return out;
}

}  // namespace

Plane resize_plane(const Plane& src, int target_w, int target_h, const FilterKind& filter,
                   Precision precision) {
  if (target_w < 1 || target_h < 1) throw_invalid("zero-sized resize target");
  if (src.width < 1 || src.height < 1) throw_invalid("cannot resize an empty plane");
  if (target_w == src.width && target_h == src.height) return src;
  if (precision == Precision::fixed8) return resize_fixed8(src, target_w, target_h, filter);
  return quantize(resize_float(to_float(src), target_w, target_h, filter));
}

PlanarFrame downscale_frame(const PlanarFrame& frame, const ScaleFactor& s, const FilterKind& luma_filter,
                            const FilterKind& chroma_filter) {
  if (s < ScaleFactor(1, 1)) throw_invalid("downscale factor must be >= 1");
  frame.validate();
  if (s.is_native()) return frame;
  const int w = s.output_dim(frame.width);
  const int h = s.output_dim(frame.height);
  PlanarFrame out;
  out.width = w;
  out.height = h;
  out.range = frame.range;
  out.y = resize_plane(frame.y, w, h, luma_filter);
  out.cb = resize_plane(frame.cb, chroma_dim(w), chroma_dim(h), chroma_filter);
  out.cr = resize_plane(frame.cr, chroma_dim(w), chroma_dim(h), chroma_filter);
  return out;
}

PlanarFrame upscale_frame(const PlanarFrame& frame, int target_w, int target_h, const FilterKind& filter) {
  frame.validate();
  if (target_w < frame.width || target_h < frame.height) throw_invalid("upscale target is smaller than the source");
  PlanarFrame out;
  out.width = target_w;
  out.height = target_h;
  out.range = frame.range;
  out.y = resize_plane(frame.y, target_w, target_h, filter);
  out.cb = resize_plane(frame.cb, chroma_dim(target_w), chroma_dim(target_h), filter);
  out.cr = resize_plane(frame.cr, chroma_dim(target_w), chroma_dim(target_h), filter);
  return out;
}

}  // namespace dvp
