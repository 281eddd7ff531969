#include "dvp/tensor.hpp"

#include <algorithm>

#include "dvp/error.hpp"

namespace dvp {

FeatureMap FeatureMap::from_plane(const FloatPlane& p) {
  FeatureMap m(1, p.height, p.width);
  std::copy(p.data.begin(), p.data.end(), m.data.begin());
  return m;
}

FloatPlane FeatureMap::channel_plane(int c) const {
  FloatPlane p(width, height);
  std::copy(channel(c), channel(c) + plane_size(), p.data.begin());
  return p;
}

FeatureMap conv2d(const FeatureMap& in, const Conv2d& conv, int stride, int out_h, int out_w) {
  if (in.channels != conv.in_channels) {
    throw_shape("conv2d: input has " + std::to_string(in.channels) + " channels, layer expects " +
                std::to_string(conv.in_channels));
  }
  if (stride < 1 || out_h < 1 || out_w < 1) throw_shape("conv2d: bad output geometry");
  const int k = conv.kernel;
  const int pad = k / 2;
  const int ih = in.height;
  const int iw = in.width;
  FeatureMap out(conv.out_channels, out_h, out_w);

  for (int o = 0; o < conv.out_channels; ++o) {
    float* dst = out.channel(o);
    std::fill(dst, dst + out.plane_size(), conv.bias[o]);
    for (int i = 0; i < conv.in_channels; ++i) {
      const float* src = in.channel(i);
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const float wv = conv.w(o, i, ky, kx);
          if (wv == 0.0f) continue;
          const int dx = kx - pad;
          // Valid output columns: 0 <= x*stride + dx < iw.
          const int x0 = dx >= 0 ? 0 : (-dx + stride - 1) / stride;
          const int span = iw - 1 - dx;
          const int x1 = span < 0 ? 0 : std::min(out_w, span / stride + 1);
          if (x0 >= x1) continue;
          for (int y = 0; y < out_h; ++y) {
            const int sy = y * stride + ky - pad;
            if (sy < 0 || sy >= ih) continue;
            const float* srow = src + static_cast<std::size_t>(sy) * iw + dx;
            float* drow = dst + static_cast<std::size_t>(y) * out_w;
            if (stride == 1) {
              for (int x = x0; x < x1; ++x) drow[x] += wv * srow[x];
            } else {
              for (int x = x0; x < x1; ++x) drow[x] += wv * srow[x * stride];
            }
          }
        }
      }
    }
  }
  return out;
}

void prelu_inplace(FeatureMap& x, const PRelu& act) {
  if (static_cast<int>(act.slope.size()) != x.channels) throw_shape("prelu: slope count differs from channels");
  for (int c = 0; c < x.channels; ++c) {
    const float a = act.slope[c];
    float* p = x.channel(c);
    for (std::size_t i = 0; i < x.plane_size(); ++i) p[i] = p[i] >= 0.0f ? p[i] : a * p[i];
  }
}

void add_inplace(FeatureMap& x, const FeatureMap& y) {
  if (x.channels != y.channels || x.height != y.height || x.width != y.width) {
    throw_shape("feature map sum: geometry mismatch");
  }
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += y.data[i];
}

FeatureMap resize_channels(const FeatureMap& in, int out_h, int out_w, const FilterKind& filter) {
  FeatureMap out(in.channels, out_h, out_w);
  for (int c = 0; c < in.channels; ++c) {
    const FloatPlane r = resize_float(in.channel_plane(c), out_w, out_h, filter);
    std::copy(r.data.begin(), r.data.end(), out.channel(c));
  }
  return out;
}

}  // namespace dvp
