#pragma once

#include <cstdint>
#include <vector>

#include "dvp/resample.hpp"

namespace dvp {

/// Channel-major (C, H, W) float feature maps.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  float* channel(int c) { return data.data() + c * plane_size(); }
  const float* channel(int c) const { return data.data() + c * plane_size(); }
  float at(int c, int y, int x) const { return data[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
  float& at(int c, int y, int x) { return data[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }

  static FeatureMap from_plane(const FloatPlane& p);
  FloatPlane channel_plane(int c) const;
};

/// Square zero-padded convolution with weights in (out, in, k, k) order.
struct Conv2d {
  int out_channels = 0;
  int in_channels = 0;
  int kernel = 1;  // 1 or 3
  std::vector<float> weight;
  std::vector<float> bias;

  std::size_t weight_count() const { return weight.size(); }
  float w(int o, int i, int ky, int kx) const {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
};

/// Per-channel parametric ReLU: x >= 0 ? x : slope * x.
struct PRelu {
  std::vector<float> slope;
};

/// Output pixel (y, x) is centred on input (y*stride, x*stride). The output
/// geometry is given explicitly so strided layers can land on a rounded
/// target size; positions outside the input read zero.
FeatureMap conv2d(const FeatureMap& in, const Conv2d& conv, int stride, int out_h, int out_w);

/// Stride-1 convolution that keeps the spatial size.
inline FeatureMap conv2d(const FeatureMap& in, const Conv2d& conv) {
  return conv2d(in, conv, 1, in.height, in.width);
}

void prelu_inplace(FeatureMap& x, const PRelu& act);
void add_inplace(FeatureMap& x, const FeatureMap& y);

/// Resizes every channel with the given filter (float path, no clamping).
FeatureMap resize_channels(const FeatureMap& in, int out_h, int out_w, const FilterKind& filter);

}  // namespace dvp
