#include "dvp/netinfo.hpp"

namespace dvp {

std::uint64_t layer_params(const Conv2d& conv, const PRelu* act) {
  return conv.weight.size() + conv.bias.size() + (act ? act->slope.size() : 0);
}

std::uint64_t conv_macs(const Conv2d& conv, int out_width, int out_height) {
  return static_cast<std::uint64_t>(out_width) * out_height * conv.out_channels * conv.in_channels * conv.kernel *
         conv.kernel;
}

std::uint64_t block_params(const PrecodingBlock& b) {
  return layer_params(b.conv1, &b.act1) + layer_params(b.conv_mid, &b.act_mid) + layer_params(b.conv2, &b.act2) +
         layer_params(b.conv_out, &b.act_out);
}

std::uint64_t block_macs(const PrecodingBlock& b, int out_width, int out_height) {
  return conv_macs(b.conv1, out_width, out_height) + conv_macs(b.conv_mid, out_width, out_height) +
         conv_macs(b.conv2, out_width, out_height) + conv_macs(b.conv_out, out_width, out_height);
}

NetInfo count_params_and_macs(const NetworkWeights& w, int input_width, int input_height) {
  NetInfo info;
  info.root_params = layer_params(w.root_conv1, &w.root_act1) + layer_params(w.root_conv2, &w.root_act2);
  info.root_macs =
      conv_macs(w.root_conv1, input_width, input_height) + conv_macs(w.root_conv2, input_width, input_height);
  info.total_params = info.root_params;
  info.total_macs = info.root_macs;
  for (std::size_t m = 0; m < w.streams.size(); ++m) {
    const auto& st = w.streams[m];
    for (std::size_t n = 0; n < st.blocks.size(); ++n) {
      const auto& b = st.blocks[n];
      BlockInfo bi;
      bi.scale = b.scale;
      bi.stream = static_cast<int>(m);
      bi.block = static_cast<int>(n);
      bi.out_width = b.scale.output_dim(input_width);
      bi.out_height = b.scale.output_dim(input_height);
      bi.params = b.shares_with >= 0 ? 0 : block_params(b);
      bi.macs = block_macs(b, bi.out_width, bi.out_height);
      bi.projection_macs = conv_macs(st.projections[n], bi.out_width, bi.out_height);
      const std::uint64_t proj_params = layer_params(st.projections[n], nullptr);
      info.projection_params += proj_params;
      info.total_params += bi.params + proj_params;
      info.total_macs += bi.macs + bi.projection_macs;
      info.macs_per_scale[b.scale] = bi.macs + bi.projection_macs;
      info.blocks.push_back(bi);
    }
  }
  return info;
}

}  // namespace dvp
