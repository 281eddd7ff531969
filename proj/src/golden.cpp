#include "dvp/golden.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dvp/error.hpp"
#include "dvp/json.hpp"

namespace dvp {

namespace {

static_assert(std::endian::native == std::endian::little, "golden tensors are little-endian");

std::vector<char> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw_format("golden pack: cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<int> shape_of(const json& t, std::size_t rank) {
  const auto shape = t.at("shape").get<std::vector<int>>();
  if (shape.size() != rank) throw_format("golden pack: expected rank " + std::to_string(rank) + " tensor");
  for (int d : shape) {
    if (d <= 0) throw_format("golden pack: non-positive tensor dimension");
  }
  return shape;
}

std::vector<float> load_f32(const std::filesystem::path& dir, const json& t, std::size_t count) {
  if (t.value("dtype", "float32") != "float32") throw_format("golden pack: expected float32 tensor");
  const auto bytes = read_all(dir / t.at("file").get<std::string>());
  if (bytes.size() != count * sizeof(float)) throw_format("golden pack: tensor size does not match its shape");
  std::vector<float> v(count);
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

FloatPlane load_plane(const std::filesystem::path& dir, const json& t) {
  const auto s = shape_of(t, 2);
  FloatPlane p(s[1], s[0]);
  p.data = load_f32(dir, t, p.data.size());
  return p;
}

json tensor_entry(const std::filesystem::path& dir, const std::string& file, const char* dtype, std::vector<int> shape,
                  const void* data, std::size_t bytes) {
  std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw Error("golden pack: cannot write " + (dir / file).string());
  return {{"file", file}, {"dtype", dtype}, {"shape", shape}};
}

}  // namespace

GoldenPack read_golden_pack(const std::filesystem::path& dir) {
  const auto text = read_all(dir / "index.json");
  GoldenPack pack;
  try {
    const json idx = json::parse(text.begin(), text.end());
    if (idx.value("format", "") != "dvp-golden") throw_format("golden pack: index format is not dvp-golden");
    if (idx.value("version", 0) != 1) throw_format("golden pack: unsupported version");
    pack.seed = idx.value("seed", std::uint64_t{0});
    pack.weights = dir / idx.at("weights").get<std::string>();
    pack.lambda = idx.value("lambda", 0.5);
    pack.range = idx.value("range", "limited") == "full" ? PixelRange::full : PixelRange::limited;
    for (const auto& v : idx.at("vectors")) {
      GoldenVector g;
      g.input = load_plane(dir, v.at("input"));
      if (v.contains("root")) {
        const auto s = shape_of(v.at("root"), 3);
        FeatureMap r(s[0], s[1], s[2]);
        r.data = load_f32(dir, v.at("root"), r.data.size());
        g.root = std::move(r);
      }
      for (const auto& [key, out] : v.at("outputs").items()) {
        GoldenOutput o;
        o.float_out = load_plane(dir, out.at("float"));
        const auto& q = out.at("quantized");
        if (q.value("dtype", "") != "uint8") throw_format("golden pack: quantized output must be uint8");
        const auto s = shape_of(q, 2);
        o.quantized = Plane(s[1], s[0]);
        const auto bytes = read_all(dir / q.at("file").get<std::string>());
        if (bytes.size() != o.quantized.data.size()) throw_format("golden pack: quantized size mismatch");
        std::memcpy(o.quantized.data.data(), bytes.data(), bytes.size());
        g.outputs.emplace(ScaleFactor::parse(key), std::move(o));
      }
      if (v.contains("loss")) g.loss = v.at("loss").get<double>();
      pack.vectors.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw_format(std::string("golden pack: bad index: ") + e.what());
  }
  return pack;
}

void write_golden_pack(const std::filesystem::path& dir, const GoldenPack& pack) {
  std::filesystem::create_directories(dir);
  json idx;
  idx["format"] = "dvp-golden";
  idx["version"] = 1;
  idx["seed"] = pack.seed;
  idx["weights"] = pack.weights.filename().string();
  idx["lambda"] = pack.lambda;
  idx["range"] = pack.range == PixelRange::full ? "full" : "limited";
  json vectors = json::array();
  for (std::size_t i = 0; i < pack.vectors.size(); ++i) {
    const auto& g = pack.vectors[i];
    const std::string stem = "v" + std::to_string(i) + "_";
    json v;
    v["input"] = tensor_entry(dir, stem + "input.f32", "float32", {g.input.height, g.input.width},
                              g.input.data.data(), g.input.data.size() * sizeof(float));
    if (g.root) {
      v["root"] = tensor_entry(dir, stem + "root.f32", "float32", {g.root->channels, g.root->height, g.root->width},
                               g.root->data.data(), g.root->data.size() * sizeof(float));
    }
    json outs = json::object();
    for (const auto& [s, o] : g.outputs) {
      const std::string tag = std::to_string(s.num()) + "_" + std::to_string(s.den());
      outs[s.to_string()] = {
          {"float", tensor_entry(dir, stem + "out_" + tag + ".f32", "float32", {o.float_out.height, o.float_out.width},
                                 o.float_out.data.data(), o.float_out.data.size() * sizeof(float))},
          {"quantized", tensor_entry(dir, stem + "out_" + tag + ".u8", "uint8", {o.quantized.height, o.quantized.width},
                                     o.quantized.data.data(), o.quantized.data.size())}};
    }
    v["outputs"] = std::move(outs);
    if (g.loss) v["loss"] = *g.loss;
    vectors.push_back(std::move(v));
  }
  idx["vectors"] = std::move(vectors);
  std::ofstream out(dir / "index.json", std::ios::trunc);
  out << idx.dump(2) << "\n";
  if (!out) throw Error("golden pack: cannot write index.json");
}

}  // namespace dvp
