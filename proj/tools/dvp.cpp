// dvp: precoding ladder tool.
//
//   dvp encode  --input clip.y4m --codec mock --bitrates 500k,1500k --out out/
//   dvp metrics --ref a.y4m --dis b.y4m          (PSNR, optional VMAF)
//   dvp metrics --anchor a.csv --test b.csv      (BD-rate / BD-PSNR)
//   dvp hull    --points rd.csv
//   dvp netinfo [--weights w.dvpw]
//   dvp weights --init xavier --seed 1 --out w.dvpw

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dvp/codec.hpp"
#include "dvp/error.hpp"
#include "dvp/json.hpp"
#include "dvp/metrics.hpp"
#include "dvp/mode_select.hpp"
#include "dvp/netinfo.hpp"
#include "dvp/pipeline.hpp"
#include "dvp/subprocess.hpp"
#include "dvp/weights.hpp"

namespace {

using namespace dvp;

struct EncodeArgs {
  std::string input;
  int width = 0;
  int height = 0;
  std::string fps = "25";
  bool full_range = false;
  std::string codec = "mock";
  std::string bitrates;
  int gop = 90;
  std::string scales = "all";
  int footprint = 5;
  std::string weights;
  std::string upscaler = "bilinear";
  std::string downscaler = "network";
  std::string chroma_downscaler = "bicubic";
  std::string out = "dvp_out";
  std::string manifest;
  std::string cache_dir;
  bool no_cache = false;
  int jobs = 1;
  std::string encoder_template;
  std::string decoder_template;
  bool full_remap = false;
};

FrameRate parse_fps(const std::string& s) {
  FrameRate f;
  const auto slash = s.find('/');
  try {
    f.num = std::stoll(s.substr(0, slash));
    f.den = slash == std::string::npos ? 1 : std::stoll(s.substr(slash + 1));
  } catch (const std::exception&) {
    throw_invalid("bad frame rate '" + s + "'");
  }
  if (f.num <= 0 || f.den <= 0) throw_invalid("bad frame rate '" + s + "'");
  return f;
}

Y4mVideo load_source(const EncodeArgs& a) {
  const bool raw = a.input.size() > 4 && a.input.substr(a.input.size() - 4) == ".yuv";
  if (!raw) return read_y4m_file(a.input);
  if (a.width <= 0 || a.height <= 0) throw_invalid("raw .yuv input needs --width and --height");
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw_format("cannot open " + a.input);
  Y4mVideo v;
  v.info = VideoInfo{a.width, a.height, parse_fps(a.fps), a.full_range ? PixelRange::full : PixelRange::limited};
  v.frames = read_raw_yuv420(in, a.width, a.height, v.info.range);
  return v;
}

int run_encode(const EncodeArgs& a) {
  LadderConfig cfg;
  cfg.bitrates = parse_bitrate_list(a.bitrates);
  cfg.codec = CodecProfile::by_name(a.codec);
  if (!a.encoder_template.empty()) {
    cfg.codec.encode_vbv_template = a.encoder_template;
    cfg.codec.encode_cbr_template = a.encoder_template;
  }
  if (!a.decoder_template.empty()) cfg.codec.decode_template = a.decoder_template;
  cfg.scales = parse_scale_list(a.scales);
  cfg.gop_len = a.gop;
  cfg.footprint_n = a.footprint;
  cfg.upscaler = FilterKind::parse(a.upscaler);
  cfg.downscaler = a.downscaler;
  cfg.chroma_downscaler = FilterKind::parse(a.chroma_downscaler);
  cfg.weights_path = a.weights;
  cfg.output_dir = a.out;
  cfg.cache_dir = a.cache_dir;
  cfg.use_cache = !a.no_cache;
  cfg.full_remap = a.full_remap;
  cfg.jobs = a.jobs;
  cfg.validate();

  if (!cfg.codec.is_mock() && !program_available(cfg.codec.encode_vbv_template)) {
    std::cerr << "dvp: encoder for " << cfg.codec.name << " not found on PATH (try --codec mock)\n";
    return 3;
  }

  const Y4mVideo source = load_source(a);
  const LadderResult r = run_ladder(source, cfg);
  const std::filesystem::path manifest = a.manifest.empty() ? cfg.output_dir / "manifest.json" : std::filesystem::path(a.manifest);
  write_json_file(manifest, r.manifest());
  write_json_file(cfg.output_dir / "quality.json", r.quality_report());

  for (const auto& c : r.cells) {
    std::printf("gop %3d  %9lld bps  s=%-4s %4dx%-4d  %8.0f bps  %.3f dB\n", c.entry.gop_index,
                static_cast<long long>(c.entry.bitrate), c.entry.scale.to_string().c_str(), c.entry.encoded_width,
                c.entry.encoded_height, c.measured_rate, c.quality.sequence_psnr);
  }
  for (const auto& e : r.errors) {
    std::fprintf(stderr, "gop %d @ %.0f bps failed: %s\n", e.gop_index, e.bitrate, e.message.c_str());
  }
  std::printf("manifest: %s (%zu entries, %zu errors); encodes %llu, cache hits %llu\n", manifest.string().c_str(),
              r.cells.size(), r.errors.size(), static_cast<unsigned long long>(r.encoder_invocations),
              static_cast<unsigned long long>(r.cache_hits));
  return r.errors.empty() ? 0 : 2;
}

struct MetricsArgs {
  std::string ref, dis;
  bool vmaf = false;
  std::string vmaf_template = kDefaultVmafTemplate;
  std::string anchor, test;
  bool pchip = false;
  bool per_frame = false;
};

int run_metrics(const MetricsArgs& a) {
  ordered_json out;
  if (!a.ref.empty() || !a.dis.empty()) {
    if (a.ref.empty() || a.dis.empty()) throw_invalid("--ref and --dis go together");
    const auto ref = read_y4m_file(a.ref);
    const auto dis = read_y4m_file(a.dis);
    const auto q = sequence_quality(ref.frames, dis.frames);
    out["frames"] = q.per_frame.size();
    out["sequence_psnr"] = q.sequence_psnr;
    if (a.per_frame) {
      ordered_json frames = ordered_json::array();
      for (const auto& f : q.per_frame) {
        frames.push_back({{"mse_y", f.mse_y}, {"mse_cb", f.mse_cb}, {"mse_cr", f.mse_cr}, {"psnr_avg", f.psnr_avg}});
      }
      out["per_frame"] = std::move(frames);
    }
    if (a.vmaf) {
      const auto v = vmaf_external(a.ref, a.dis, ref.info.width, ref.info.height, a.vmaf_template,
                                   codec_timeout_from_env());
      if (v.score) out["vmaf"] = *v.score;
      else out["vmaf"] = "unavailable: " + v.message;
    }
  }
  if (!a.anchor.empty() || !a.test.empty()) {
    if (a.anchor.empty() || a.test.empty()) throw_invalid("--anchor and --test go together");
    const auto bd = bd_metrics(read_rd_curve_csv_file(a.anchor), read_rd_curve_csv_file(a.test),
                               a.pchip ? BdMethod::pchip : BdMethod::cubic);
    out["bd_rate_percent"] = bd.bd_rate;
    out["bd_quality"] = bd.bd_quality;
  }
  if (out.empty()) throw_invalid("nothing to measure: give --ref/--dis or --anchor/--test");
  std::cout << out.dump(2) << "\n";
  return 0;
}

std::vector<RDPoint> read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_format("cannot open " + path);
  std::vector<RDPoint> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string r, d, s;
    std::getline(ss, r, ',');
    std::getline(ss, d, ',');
    std::getline(ss, s, ',');
    RDPoint p;
    try {
      p.rate = std::stod(r);
      p.distortion = std::stod(d);
    } catch (const std::exception&) {
      if (pts.empty() && lineno == 1) continue;  // header
      throw_format(path + ":" + std::to_string(lineno) + ": expected rate,distortion,scale");
    }
    p.scale = s.empty() ? ScaleFactor(1, 1) : ScaleFactor::parse(s);
    if (!(p.rate > 0.0) || p.distortion < 0.0) throw_format(path + ":" + std::to_string(lineno) + ": bad point");
    pts.push_back(p);
  }
  if (pts.empty()) throw_format(path + ": no points");
  return pts;
}

void print_stage(const char* title, const std::vector<RDPoint>& pts) {
  std::printf("%s (%zu)\n", title, pts.size());
  for (const auto& p : pts) std::printf("  s=%-4s  R=%-12g D=%g\n", p.scale.to_string().c_str(), p.rate, p.distortion);
}

int run_hull(const std::string& path) {
  const auto all = read_points(path);
  const auto monotone = prune_monotone(all);
  const auto hull = lower_convex_hull(monotone);
  double sum = 0.0;
  for (const auto& p : hull) sum += p.rate;
  print_stage("all points", all);
  print_stage("after monotone pruning", monotone);
  print_stage("after convex hull", hull);
  std::printf("cbr remap rate: %g\n", sum / static_cast<double>(hull.size()));
  return 0;
}

int run_netinfo(const std::string& weights, int w, int h, bool as_json) {
  const NetworkWeights net = weights.empty() ? make_zero_weights() : load_weights_file(weights);
  const NetInfo info = count_params_and_macs(net, w, h);
  if (as_json) {
    ordered_json j;
    j["input"] = {w, h};
    j["total_params"] = info.total_params;
    j["root_params"] = info.root_params;
    j["projection_params"] = info.projection_params;
    j["root_macs"] = info.root_macs;
    j["total_macs"] = info.total_macs;
    ordered_json blocks = ordered_json::array();
    for (const auto& b : info.blocks) {
      blocks.push_back({{"scale", b.scale.to_string()},
                        {"stream", b.stream},
                        {"block", b.block},
                        {"params", b.params},
                        {"macs", b.macs},
                        {"projection_macs", b.projection_macs},
                        {"out", {b.out_width, b.out_height}}});
    }
    j["blocks"] = std::move(blocks);
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("input %dx%d\n", w, h);
  std::printf("root        %6llu params  %8.3f GMACs\n", static_cast<unsigned long long>(info.root_params),
              info.root_macs / 1e9);
  for (const auto& b : info.blocks) {
    std::printf("s%d.b%d s=%-4s %6llu params  %8.3f GMACs  %4dx%-4d\n", b.stream + 1, b.block + 1,
                b.scale.to_string().c_str(), static_cast<unsigned long long>(b.params), (b.macs + b.projection_macs) / 1e9,
                b.out_width, b.out_height);
  }
  std::printf("projections %6llu params\n", static_cast<unsigned long long>(info.projection_params));
  std::printf("total       %6llu params  %8.3f GMACs\n", static_cast<unsigned long long>(info.total_params),
              info.total_macs / 1e9);
  return 0;
}

int run_weights(const std::string& init, std::uint64_t seed, const std::string& out) {
  NetworkWeights w;
  if (init == "xavier") w = init_xavier(seed);
  else if (init == "linear") w = init_linear_baseline();
  else if (init == "zero") w = make_zero_weights();
  else throw_invalid("unknown initializer '" + init + "' (xavier|linear|zero)");
  save_weights_file(w, out);
  const NetworkWeights back = load_weights_file(out);
  std::printf("wrote %s (run %s)\n", out.c_str(), back.metadata.run_id.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dvp: deep video precoding toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file mirroring the flags, under [encode] (flags win)");
  app.fallthrough();

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "Build a bitrate ladder with per-GOP mode selection");
  encode->add_option("--input", enc.input, "Source .y4m (or .yuv with --width/--height)")->required();
  encode->add_option("--width", enc.width, "Raw input width");
  encode->add_option("--height", enc.height, "Raw input height");
  encode->add_option("--fps", enc.fps, "Raw input frame rate, e.g. 30000/1001");
  encode->add_flag("--full-range", enc.full_range, "Raw input is full range");
  encode->add_option("--codec", enc.codec, "h264|hevc|vp9|mock");
  encode->add_option("--bitrates", enc.bitrates, "Ladder rungs, e.g. 500k,1500k,5000k")->required();
  encode->add_option("--gop", enc.gop, "GOP length in frames");
  encode->add_option("--scales", enc.scales, "'all' or a list such as 1,3/2,2");
  encode->add_option("--footprint", enc.footprint, "Use every n-th frame during mode selection");
  encode->add_option("--weights", enc.weights, "DVPW weight file");
  encode->add_option("--upscaler", enc.upscaler, "Client upscaler: bilinear|bicubic|lanczos");
  encode->add_option("--downscaler", enc.downscaler, "network|bilinear|bicubic|lanczos");
  encode->add_option("--chroma-downscaler", enc.chroma_downscaler, "Chroma filter");
  encode->add_option("--out", enc.out, "Output directory");
  encode->add_option("--manifest", enc.manifest, "Manifest path (default <out>/manifest.json)");
  encode->add_option("--cache-dir", enc.cache_dir, "Encode cache (default <out>/cache)");
  encode->add_flag("--no-cache", enc.no_cache, "Disable the encode cache");
  encode->add_option("--jobs", enc.jobs, "Concurrent cells");
  encode->add_option("--encoder-template", enc.encoder_template, "Encoder command template");
  encode->add_option("--decoder-template", enc.decoder_template, "Decoder command template");
  encode->add_flag("--full-remap", enc.full_remap, "CBR remap on the whole GOP instead of the footprint");

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "PSNR/VMAF of two clips or BD metrics of two RD curves");
  metrics->add_option("--ref", met.ref, "Reference .y4m");
  metrics->add_option("--dis", met.dis, "Distorted .y4m");
  metrics->add_flag("--per-frame", met.per_frame, "Print per-frame values");
  metrics->add_flag("--vmaf", met.vmaf, "Also run the external VMAF tool");
  metrics->add_option("--vmaf-template", met.vmaf_template, "VMAF command template ({REF} {DIS} {W} {H} {OUT})");
  metrics->add_option("--anchor", met.anchor, "Anchor RD curve CSV (rate,quality)");
  metrics->add_option("--test", met.test, "Test RD curve CSV");
  metrics->add_flag("--pchip", met.pchip, "Piecewise cubic Hermite fit instead of the cubic polynomial");

  std::string points;
  auto* hull = app.add_subcommand("hull", "Show the pruning stages for a set of RD points");
  hull->add_option("--points", points, "CSV of rate,distortion,scale")->required();

  std::string ni_weights;
  int ni_w = 1920, ni_h = 1080;
  bool ni_json = false;
  auto* netinfo = app.add_subcommand("netinfo", "Parameter and MAC counts");
  netinfo->add_option("--weights", ni_weights, "DVPW file (default: canonical topology)");
  netinfo->add_option("--width", ni_w, "Input width");
  netinfo->add_option("--height", ni_h, "Input height");
  netinfo->add_flag("--json", ni_json, "JSON output");

  std::string w_init = "xavier", w_out;
  std::uint64_t w_seed = 1;
  auto* weights = app.add_subcommand("weights", "Write an initialized DVPW file");
  weights->add_option("--init", w_init, "xavier|linear|zero");
  weights->add_option("--seed", w_seed, "Xavier seed");
  weights->add_option("--out", w_out, "Output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*encode) return run_encode(enc);
    if (*metrics) return run_metrics(met);
    if (*hull) return run_hull(points);
    if (*netinfo) return run_netinfo(ni_weights, ni_w, ni_h, ni_json);
    if (*weights) return run_weights(w_init, w_seed, w_out);
  } catch (const dvp::Error& e) {
    std::cerr << "dvp: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "dvp: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
