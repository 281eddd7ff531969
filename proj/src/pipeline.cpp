#include "dvp/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>

#include "dvp/cache.hpp"
#include "dvp/error.hpp"
#include "dvp/parallel.hpp"
#include "dvp/weights.hpp"

namespace dvp {

double parse_bitrate(std::string_view text) {
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s.empty()) throw_invalid("empty bitrate");
  double mult = 1.0;
  switch (std::tolower(static_cast<unsigned char>(s.back()))) {
    case 'k': mult = 1e3; s.pop_back(); break;
    case 'm': mult = 1e6; s.pop_back(); break;
    case 'g': mult = 1e9; s.pop_back(); break;
    default: break;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw_invalid("bad bitrate '" + std::string(text) + "'");
  }
  if (used != s.size() || !std::isfinite(v) || v <= 0.0) throw_invalid("bad bitrate '" + std::string(text) + "'");
  return v * mult;
}

std::vector<double> parse_bitrate_list(std::string_view text) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_bitrate(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i] > out[i - 1])) throw_invalid("bitrates must be strictly increasing");
  }
  return out;
}

void LadderConfig::validate() const {
  if (bitrates.empty()) throw_invalid("ladder needs at least one bitrate");
  for (std::size_t i = 0; i < bitrates.size(); ++i) {
    if (!(bitrates[i] > 0.0)) throw_invalid("bitrates must be positive");
    if (i > 0 && !(bitrates[i] > bitrates[i - 1])) throw_invalid("bitrates must be strictly increasing");
  }
  if (scales.empty()) throw_invalid("ladder needs at least one scale");
  for (const auto& s : scales) {
    if (!s.is_native() && !is_canonical(s)) throw_invalid("scale " + s.to_string() + " is not canonical");
    (void)codec.quality_for(s);
  }
  if (gop_len < 1) throw_invalid("gop length must be >= 1");
  if (footprint_n < 1) throw_invalid("footprint must be >= 1");
  if (jobs < 1) throw_invalid("jobs must be >= 1");
  if (downscaler != "network") (void)FilterKind::parse(downscaler);
}

std::unique_ptr<Downscaler> make_downscaler(const LadderConfig& cfg) {
  if (cfg.downscaler == "network") {
    auto w = std::make_shared<NetworkWeights>(cfg.weights_path.empty() ? init_linear_baseline()
                                                                       : load_weights_file(cfg.weights_path));
    PrecodeOptions opts;
    opts.chroma_filter = cfg.chroma_downscaler;
    return std::make_unique<NetworkDownscaler>(std::move(w), opts);
  }
  return std::make_unique<LinearDownscaler>(FilterKind::parse(cfg.downscaler), cfg.chroma_downscaler);
}

namespace {

std::int64_t rate_int(double r) { return static_cast<std::int64_t>(std::llround(r)); }

}  // namespace

ordered_json ManifestEntry::to_json() const {
  ordered_json j;
  j["gop_index"] = gop_index;
  j["start_frame"] = start_frame;
  j["frame_count"] = frame_count;
  j["bitrate"] = rate_int(bitrate);
  j["scale"] = std::to_string(scale.num()) + "/" + std::to_string(scale.den());
  j["encoded_width"] = encoded_width;
  j["encoded_height"] = encoded_height;
  j["segment_uri"] = segment_uri;
  j["codec"] = codec;
  return j;
}

ordered_json CellError::to_json() const {
  ordered_json j;
  j["gop_index"] = gop_index;
  j["start_frame"] = start_frame;
  j["frame_count"] = frame_count;
  j["bitrate"] = rate_int(bitrate);
  j["error"] = message;
  return j;
}

ordered_json LadderResult::manifest() const {
  std::vector<std::pair<std::pair<int, double>, ordered_json>> rows;
  for (const auto& c : cells) rows.push_back({{c.entry.gop_index, c.entry.bitrate}, c.entry.to_json()});
  for (const auto& e : errors) rows.push_back({{e.gop_index, e.bitrate}, e.to_json()});
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  ordered_json arr = ordered_json::array();
  for (auto& r : rows) arr.push_back(std::move(r.second));
  return arr;
}

ordered_json LadderResult::quality_report() const {
  ordered_json arr = ordered_json::array();
  for (const auto& c : cells) {
    ordered_json j;
    j["gop_index"] = c.entry.gop_index;
    j["bitrate"] = rate_int(c.entry.bitrate);
    j["scale"] = c.entry.scale.to_string();
    j["measured_rate"] = c.measured_rate;
    j["sequence_psnr"] = c.quality.sequence_psnr;
    ordered_json frames = ordered_json::array();
    for (const auto& f : c.quality.per_frame) {
      frames.push_back({{"mse_y", f.mse_y}, {"mse_cb", f.mse_cb}, {"mse_cr", f.mse_cr}, {"psnr_avg", f.psnr_avg}});
    }
    j["per_frame"] = std::move(frames);
    ordered_json log;
    auto pts = [](const std::vector<RDPoint>& v) {
      ordered_json a = ordered_json::array();
      for (const auto& p : v) a.push_back({{"scale", p.scale.to_string()}, {"rate", p.rate}, {"distortion", p.distortion}});
      return a;
    };
    log["all_points"] = pts(c.stage_log.all_points);
    log["after_monotone"] = pts(c.stage_log.after_monotone);
    log["after_hull"] = pts(c.stage_log.after_hull);
    log["cbr_rate"] = c.stage_log.cbr_rate;
    log["remapped_points"] = pts(c.stage_log.remapped_points);
    j["mode_selection"] = std::move(log);
    arr.push_back(std::move(j));
  }
  return arr;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp);
    os << j.dump(2) << "\n";
    if (!os) throw Error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

LadderResult run_ladder(const Y4mVideo& source, const LadderConfig& cfg, std::shared_ptr<const Codec> backend) {
  cfg.validate();
  if (source.frames.empty()) throw_invalid("source has no frames");
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir / "segments");

  const auto downscaler = make_downscaler(cfg);
  const auto gops = segment_gops(source.frames, cfg.gop_len, source.info.fps);
  const fs::path work = cfg.output_dir / "work";
  CodecDriver driver = backend ? CodecDriver(cfg.codec, std::move(backend), work, cfg.jobs)
                               : CodecDriver(cfg.codec, work, cfg.jobs);
  if (cfg.use_cache) driver.set_cache(std::make_shared<EncodeCache>(cfg.cache_dir.empty() ? cfg.output_dir / "cache"
                                                                                          : cfg.cache_dir));

  struct Cell {
    const GopSegment* gop;
    double bitrate;
  };
  std::vector<Cell> cells;
  for (const auto& g : gops) {
    for (double b : cfg.bitrates) cells.push_back({&g, b});
  }

  SelectOptions sel;
  sel.footprint_n = cfg.footprint_n;
  sel.upscaler = cfg.upscaler;
  sel.full_remap = cfg.full_remap;
  sel.jobs = cells.size() > 1 ? 1 : cfg.jobs;

  std::vector<std::optional<CellReport>> reports(cells.size());
  std::vector<std::optional<CellError>> failures(cells.size());
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    const GopSegment& gop = *cells[i].gop;
    const double rate = cells[i].bitrate;
    try {
      const ModeDecision d = select_mode(gop, cfg.scales, *downscaler, driver, rate, sel);
      std::shared_ptr<const GopSegment> full = d.selected_handle;
      if (!full || full->size() != gop.size()) {
        const ScaleFactor only[] = {d.selected};
        full = precode_gop(gop, only, *downscaler, sel.jobs).at(d.selected);
      }
      const EncodeResult enc = driver.encode_vbv(full->frames, gop.fps, d.selected, rate);
      const auto decoded = driver.decode(enc);
      std::vector<PlanarFrame> upscaled;
      upscaled.reserve(decoded.size());
      for (const auto& f : decoded) {
        upscaled.push_back(f.width == gop.width() && f.height == gop.height()
                               ? f
                               : upscale_frame(f, gop.width(), gop.height(), cfg.upscaler));
      }

      char name[96];
      std::snprintf(name, sizeof name, "gop%05d_%lld.%s", gop.index, static_cast<long long>(rate_int(rate)),
                    cfg.codec.extension.c_str());
      const fs::path seg = cfg.output_dir / "segments" / name;
      fs::copy_file(enc.bitstream, seg, fs::copy_options::overwrite_existing);

      CellReport r;
      r.entry.gop_index = gop.index;
      r.entry.start_frame = gop.start_frame;
      r.entry.frame_count = gop.size();
      r.entry.bitrate = rate;
      r.entry.scale = d.selected;
      r.entry.encoded_width = enc.width;
      r.entry.encoded_height = enc.height;
      r.entry.segment_uri = std::string("segments/") + name;
      r.entry.codec = cfg.codec.name;
      r.quality = sequence_quality(gop.frames, upscaled);
      r.measured_rate = enc.measured_rate;
      r.stage_log = d.stage_log;
      for (auto* v : {&r.stage_log.all_points, &r.stage_log.after_monotone, &r.stage_log.after_hull,
                      &r.stage_log.remapped_points}) {
        for (auto& p : *v) p.handle.reset();
      }
      reports[i] = std::move(r);
    } catch (const std::exception& e) {
      failures[i] = CellError{gop.index, gop.start_frame, gop.size(), rate, e.what()};
    }
  });

  LadderResult result;
  result.source = source.info;
  for (auto& r : reports) {
    if (r) result.cells.push_back(std::move(*r));
  }
  for (auto& f : failures) {
    if (f) result.errors.push_back(std::move(*f));
  }
  result.encoder_invocations = driver.encoder_invocations();
  result.decoder_invocations = driver.decoder_invocations();
  result.cache_hits = driver.cache_hits();
  return result;
}

LadderResult run_ladder_file(const std::filesystem::path& source, const LadderConfig& cfg) {
  return run_ladder(read_y4m_file(source.string()), cfg);
}

}  // namespace dvp
