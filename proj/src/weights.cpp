#include "dvp/weights.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iterator>
#include <map>
#include <random>
#include <sstream>

#include "dvp/error.hpp"

namespace dvp {

NetworkTopology NetworkTopology::canonical(bool share) {
  NetworkTopology t;
  t.streams = {{{4, 3}, {2, 1}, {4, 1}}, {{3, 2}, {3, 1}, {6, 1}}, {{5, 4}, {5, 2}}};
  t.share_equal_ratio_blocks = share;
  return t;
}

std::pair<int, int> NetworkWeights::locate(const ScaleFactor& s) const {
  for (int m = 0; m < static_cast<int>(streams.size()); ++m) {
    const auto& sc = streams[m].scales;
    for (int n = 0; n < static_cast<int>(sc.size()); ++n) {
      if (sc[n] == s) return {m, n};
    }
  }
  return {-1, -1};
}

namespace {

Conv2d make_conv(int out, int in, int k) {
  Conv2d c;
  c.out_channels = out;
  c.in_channels = in;
  c.kernel = k;
  c.weight.assign(static_cast<std::size_t>(out) * in * k * k, 0.0f);
  c.bias.assign(out, 0.0f);
  return c;
}

PRelu make_prelu(int channels, float slope = 1.0f) { return PRelu{std::vector<float>(channels, slope)}; }

struct LayerRef {
  std::string name;
  Conv2d* conv;
  PRelu* act;  // may be null
  bool pre_skip = false;
};

// Enumerates the layers that own weights, in DVPW record order. Shared
// blocks are skipped because their records live under the first block.
std::vector<LayerRef> owned_layers(NetworkWeights& w) {
  std::vector<LayerRef> out;
  out.push_back({"root.conv1", &w.root_conv1, &w.root_act1});
  out.push_back({"root.conv2", &w.root_conv2, &w.root_act2});
  for (std::size_t m = 0; m < w.streams.size(); ++m) {
    auto& st = w.streams[m];
    const std::string sp = "s" + std::to_string(m + 1);
    for (std::size_t n = 0; n < st.blocks.size(); ++n) {
      auto& b = st.blocks[n];
      if (b.shares_with >= 0) continue;
      const std::string bp = sp + ".b" + std::to_string(n + 1);
      out.push_back({bp + ".conv1", &b.conv1, &b.act1});
      out.push_back({bp + ".conv_mid", &b.conv_mid, &b.act_mid});
      out.push_back({bp + ".conv2", &b.conv2, &b.act2, true});
      out.push_back({bp + ".conv_out", &b.conv_out, &b.act_out});
    }
    for (std::size_t n = 0; n < st.projections.size(); ++n) {
      out.push_back({sp + ".f" + std::to_string(n + 1), &st.projections[n], nullptr});
    }
  }
  return out;
}

void resolve_sharing(NetworkWeights& w) {
  for (auto& st : w.streams) {
    for (auto& b : st.blocks) {
      if (b.shares_with < 0) continue;
      const auto& src = st.blocks[b.shares_with];
      b.conv1 = src.conv1;
      b.conv_mid = src.conv_mid;
      b.conv2 = src.conv2;
      b.conv_out = src.conv_out;
      b.act1 = src.act1;
      b.act_mid = src.act_mid;
      b.act2 = src.act2;
      b.act_out = src.act_out;
    }
  }
}

std::vector<std::uint32_t> conv_dims(const Conv2d& c) {
  return {static_cast<std::uint32_t>(c.out_channels), static_cast<std::uint32_t>(c.in_channels),
          static_cast<std::uint32_t>(c.kernel), static_cast<std::uint32_t>(c.kernel)};
}

std::string dims_string(const std::vector<std::uint32_t>& d) {
  std::string s = "(";
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s + ")";
}

}  // namespace

NetworkWeights make_zero_weights(const NetworkTopology& topo) {
  NetworkWeights w;
  w.topology = topo;
  w.root_conv1 = make_conv(kWideChannels, 1, 3);
  w.root_act1 = make_prelu(kWideChannels);
  w.root_conv2 = make_conv(kRootChannels, kWideChannels, 1);
  w.root_act2 = make_prelu(kRootChannels);
  for (const auto& scales : topo.streams) {
    PrecodingStream st;
    st.scales = scales;
    ScaleFactor prev(1, 1);
    for (std::size_t n = 0; n < scales.size(); ++n) {
      if (!(prev < scales[n])) throw_invalid("stream scales must be strictly increasing and above 1");
      PrecodingBlock b;
      b.scale = scales[n];
      b.alpha = scales[n].ratio_to(prev);
      b.conv1 = make_conv(kWideChannels, kRootChannels, 3);
      b.act1 = make_prelu(kWideChannels);
      b.conv_mid = make_conv(kRootChannels, kWideChannels, 1);
      b.act_mid = make_prelu(kRootChannels);
      b.conv2 = make_conv(kWideChannels, kRootChannels, 3);
      b.act2 = make_prelu(kWideChannels);
      b.conv_out = make_conv(kRootChannels, kWideChannels, 1);
      b.act_out = make_prelu(kRootChannels);
      if (topo.share_equal_ratio_blocks) {
        for (std::size_t j = 0; j < n; ++j) {
          if (st.blocks[j].alpha == b.alpha && st.blocks[j].shares_with < 0) {
            b.shares_with = static_cast<int>(j);
            break;
          }
        }
      }
      st.blocks.push_back(std::move(b));
      st.projections.push_back(make_conv(1, kRootChannels, 3));
      prev = scales[n];
    }
    w.streams.push_back(std::move(st));
  }
  return w;
}

std::vector<std::pair<std::string, std::vector<std::uint32_t>>> canonical_records(const NetworkTopology& topo) {
  NetworkWeights w = make_zero_weights(topo);
  std::vector<std::pair<std::string, std::vector<std::uint32_t>>> out;
  for (const auto& l : owned_layers(w)) {
    out.emplace_back(l.name, conv_dims(*l.conv));
    out.emplace_back(l.name + ".bias", std::vector<std::uint32_t>{static_cast<std::uint32_t>(l.conv->out_channels)});
    if (l.act) {
      out.emplace_back(l.name + ".prelu",
                       std::vector<std::uint32_t>{static_cast<std::uint32_t>(l.conv->out_channels)});
    }
  }
  return out;
}

NetworkWeights init_xavier(std::uint64_t seed, const NetworkTopology& topo) {
  NetworkWeights w = make_zero_weights(topo);
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double limit) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return static_cast<float>((2.0 * u - 1.0) * limit);
  };
  for (auto& l : owned_layers(w)) {
    const int k2 = l.conv->kernel * l.conv->kernel;
    const double limit = std::sqrt(6.0 / (l.conv->in_channels * k2 + l.conv->out_channels * k2));
    for (auto& v : l.conv->weight) v = uniform(limit);
    if (l.act) std::fill(l.act->slope.begin(), l.act->slope.end(), l.pre_skip ? 1.0f : 0.25f);
  }
  resolve_sharing(w);
  w.metadata.run_id = "xavier-" + std::to_string(seed);
  return w;
}

NetworkWeights init_linear_baseline(const NetworkTopology& topo) {
  NetworkWeights w = make_zero_weights(topo);
  // root: channel 0 of conv1 copies the input (centre tap), conv2 copies it on.
  w.root_conv1.weight[4] = 1.0f;
  w.root_conv2.weight[0] = 1.0f;
  for (auto& st : w.streams) {
    for (auto& f : st.projections) f.weight[4] = 1.0f;  // (0,0,1,1)
  }
  w.metadata.run_id = "linear-baseline";
  return w;
}

std::vector<TensorRecord> to_records(const NetworkWeights& w_in) {
  NetworkWeights w = w_in;
  std::vector<TensorRecord> out;
  for (const auto& l : owned_layers(w)) {
    out.push_back({l.name, conv_dims(*l.conv), l.conv->weight});
    out.push_back({l.name + ".bias", {static_cast<std::uint32_t>(l.conv->out_channels)}, l.conv->bias});
    if (l.act) out.push_back({l.name + ".prelu", {static_cast<std::uint32_t>(l.conv->out_channels)}, l.act->slope});
  }
  return out;
}

NetworkWeights from_records(const std::vector<TensorRecord>& records, const NetworkTopology& topo) {
  std::map<std::string, const TensorRecord*> by_name;
  for (const auto& r : records) {
    if (!by_name.emplace(r.name, &r).second) throw_format("dvpw: duplicate record '" + r.name + "'");
  }
  NetworkWeights w = make_zero_weights(topo);
  std::size_t used = 0;
  auto take = [&](const std::string& name, const std::vector<std::uint32_t>& dims, std::vector<float>& dst) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw_shape("dvpw: missing record '" + name + "'");
    const TensorRecord& r = *it->second;
    if (r.dims != dims) {
      throw_shape("dvpw: record '" + name + "' has shape " + dims_string(r.dims) + ", expected " + dims_string(dims));
    }
    if (r.values.size() != dst.size()) throw_shape("dvpw: record '" + name + "' payload size mismatch");
    for (float v : r.values) {
      if (!std::isfinite(v)) throw_format("dvpw: non-finite value in '" + name + "'");
    }
    dst = r.values;
    ++used;
  };
  for (auto& l : owned_layers(w)) {
    take(l.name, conv_dims(*l.conv), l.conv->weight);
    take(l.name + ".bias", {static_cast<std::uint32_t>(l.conv->out_channels)}, l.conv->bias);
    if (l.act) take(l.name + ".prelu", {static_cast<std::uint32_t>(l.conv->out_channels)}, l.act->slope);
  }
  if (used != records.size()) {
    for (const auto& r : records) {
      bool known = false;
      for (const auto& c : canonical_records(topo)) known = known || c.first == r.name;
      if (!known) throw_shape("dvpw: unexpected record '" + r.name + "'");
    }
  }
  resolve_sharing(w);
  return w;
}

namespace {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw_format("dvpw: truncated file");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    auto s = take(4);
    return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
           (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
  }
  std::uint16_t u16() {
    auto s = take(2);
    return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

float decode_f32(const std::uint8_t* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace

std::vector<std::uint8_t> encode_dvpw(const std::vector<TensorRecord>& records, std::uint32_t version) {
  std::vector<std::uint8_t> out{'D', 'V', 'P', 'W'};
  put_u32(out, version);
  put_u32(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.name.size() > 0xffff) throw_invalid("dvpw: record name too long");
    out.push_back(static_cast<std::uint8_t>(r.name.size() & 0xff));
    out.push_back(static_cast<std::uint8_t>(r.name.size() >> 8));
    out.insert(out.end(), r.name.begin(), r.name.end());
    out.push_back(static_cast<std::uint8_t>(r.dims.size()));
    for (auto d : r.dims) put_u32(out, d);
    for (float v : r.values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u32(out, bits);
    }
  }
  put_u32(out, crc_of(out));
  return out;
}

std::vector<std::uint8_t> save_weights(const NetworkWeights& w) { return encode_dvpw(to_records(w)); }

void save_weights_file(const NetworkWeights& w, const std::string& path) {
  const auto bytes = save_weights(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path);
}

NetworkWeights load_weights(std::span<const std::uint8_t> bytes, const NetworkTopology& topo) {
  ByteReader rd(bytes);
  const auto magic = rd.take(4);
  if (std::memcmp(magic.data(), "DVPW", 4) != 0) throw_format("dvpw: bad magic");
  const std::uint32_t version = rd.u32();
  if (version != kDvpwVersion) throw_format("dvpw: unsupported version " + std::to_string(version));
  if (bytes.size() < 16) throw_format("dvpw: truncated file");
  const std::uint32_t stored_crc = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                   (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                                   (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                                   (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  const auto body = bytes.first(bytes.size() - 4);
  if (crc_of(body) != stored_crc) throw_format("dvpw: CRC32 mismatch (corrupt or truncated file)");

  ByteReader br(body);
  br.take(8);
  const std::uint32_t count = br.u32();
  std::vector<TensorRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord r;
    const auto len = br.u16();
    const auto name = br.take(len);
    r.name.assign(name.begin(), name.end());
    const auto rank = br.u8();
    std::size_t elems = 1;
    for (int d = 0; d < rank; ++d) {
      r.dims.push_back(br.u32());
      elems *= r.dims.back();
    }
    if (elems > (body.size() - br.pos()) / 4) throw_format("dvpw: record '" + r.name + "' overruns the file");
    const auto payload = br.take(elems * 4);
    r.values.resize(elems);
    for (std::size_t e = 0; e < elems; ++e) r.values[e] = decode_f32(payload.data() + 4 * e);
    records.push_back(std::move(r));
  }
  if (br.pos() != body.size()) throw_format("dvpw: trailing bytes after the last record");

  NetworkWeights w = from_records(records, topo);
  w.metadata.version = version;
  std::ostringstream id;
  id << std::hex << std::setw(8) << std::setfill('0') << stored_crc;
  w.metadata.run_id = id.str();
  return w;
}

NetworkWeights load_weights(std::istream& in, const NetworkTopology& topo) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_weights(std::span<const std::uint8_t>(bytes), topo);
}

NetworkWeights load_weights_file(const std::string& path, const NetworkTopology& topo) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return load_weights(in, topo);
}

}  // namespace dvp
