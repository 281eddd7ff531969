#include "dvp/codec.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dvp/cache.hpp"
#include "dvp/error.hpp"
#include "dvp/subprocess.hpp"

namespace dvp {

void validate(const RateControl& rc) {
  if (const auto* v = std::get_if<Vbv>(&rc)) {
    if (v->crf < 0 || v->crf > 63) throw_invalid("crf/speed " + std::to_string(v->crf) + " out of range [0,63]");
    if (!(v->maxrate > 0.0) || !(v->bufsize > 0.0)) throw_invalid("VBV maxrate and bufsize must be positive");
    if (v->minrate < 0.0 || v->minrate > v->maxrate) throw_invalid("VBV minrate must lie in [0, maxrate]");
  } else {
    if (!(std::get<Cbr>(rc).bitrate > 0.0)) throw_invalid("CBR bitrate must be positive");
  }
}

std::string describe(const RateControl& rc) {
  std::ostringstream os;
  if (const auto* v = std::get_if<Vbv>(&rc)) {
    os << "vbv(crf=" << v->crf << ", maxrate=" << v->maxrate << ", bufsize=" << v->bufsize;
    if (v->minrate > 0.0) os << ", minrate=" << v->minrate;
    os << ")";
  } else {
    os << "cbr(" << std::get<Cbr>(rc).bitrate << ")";
  }
  return os.str();
}

namespace {

constexpr const char* kFfmpegIn = "ffmpeg -hide_banner -loglevel error -y -f yuv4mpegpipe -i {IN}";
constexpr const char* kFfmpegDecode = "ffmpeg -hide_banner -loglevel error -i {IN} -f yuv4mpegpipe -pix_fmt yuv420p {OUT}";

std::map<ScaleFactor, int> crf_table_x26x() {
  // libx264 column of the CRF table; libx265 shares it (its blank entries
  // for 1 and 5/4 take the anchor crf 23).
  std::map<ScaleFactor, int> t;
  for (const auto& s : all_modes()) t[s] = s < ScaleFactor(2, 1) ? 23 : 18;
  return t;
}

}  // namespace

CodecProfile CodecProfile::h264() {
  CodecProfile p;
  p.name = "h264";
  p.preset = "slower";
  p.crf_by_scale = crf_table_x26x();
  p.encode_vbv_template = std::string(kFfmpegIn) +
                          " -c:v libx264 -preset {PRESET} -crf {CRF} -maxrate {MAXRATE} -bufsize {BUFSIZE} -f h264 {OUT}";
  p.encode_cbr_template = std::string(kFfmpegIn) +
                          " -c:v libx264 -preset {PRESET} -b:v {BITRATE} -minrate {BITRATE} -maxrate {BITRATE}"
                          " -bufsize {BITRATE} -x264-params nal-hrd=cbr -f h264 {OUT}";
  p.decode_template = kFfmpegDecode;
  p.extension = "h264";
  return p;
}

CodecProfile CodecProfile::hevc() {
  CodecProfile p;
  p.name = "hevc";
  p.preset = "slower";
  p.crf_by_scale = crf_table_x26x();
  p.encode_vbv_template = std::string(kFfmpegIn) +
                          " -c:v libx265 -preset {PRESET} -crf {CRF} -maxrate {MAXRATE} -bufsize {BUFSIZE} -f hevc {OUT}";
  p.encode_cbr_template = std::string(kFfmpegIn) +
                          " -c:v libx265 -preset {PRESET} -b:v {BITRATE} -maxrate {BITRATE} -bufsize {BITRATE}"
                          " -x265-params strict-cbr=1 -f hevc {OUT}";
  p.decode_template = kFfmpegDecode;
  p.extension = "h265";
  return p;
}

CodecProfile CodecProfile::vp9() {
  CodecProfile p;
  p.name = "vp9";
  p.preset = "good";
  p.knob = QualityKnob::speed;
  for (const auto& s : all_modes()) p.crf_by_scale[s] = s.is_native() ? 2 : 1;
  p.encode_vbv_template = std::string(kFfmpegIn) +
                          " -c:v libvpx-vp9 -deadline {PRESET} -speed {SPEED} -b:v {MAXRATE} -minrate {MINRATE}"
                          " -maxrate {MAXRATE} -bufsize {BUFSIZE} -f ivf {OUT}";
  p.encode_cbr_template = std::string(kFfmpegIn) +
                          " -c:v libvpx-vp9 -deadline {PRESET} -speed {SPEED} -b:v {BITRATE} -minrate {BITRATE}"
                          " -maxrate {BITRATE} -f ivf {OUT}";
  p.decode_template = kFfmpegDecode;
  p.extension = "ivf";
  return p;
}

CodecProfile CodecProfile::mock_codec(MockModel model) {
  CodecProfile p;
  p.name = "mock";
  p.preset = "exponential";
  p.crf_by_scale = crf_table_x26x();
  p.extension = "mock";
  p.mock = model;
  return p;
}

CodecProfile CodecProfile::by_name(const std::string& name) {
  if (name == "h264") return h264();
  if (name == "hevc") return hevc();
  if (name == "vp9") return vp9();
  if (name == "mock") return mock_codec();
  throw_invalid("unknown codec '" + name + "' (h264|hevc|vp9|mock)");
}

int CodecProfile::quality_for(const ScaleFactor& s) const {
  const auto it = crf_by_scale.find(s);
  if (it == crf_by_scale.end()) throw_invalid("profile " + name + " has no crf entry for scale " + s.to_string());
  return it->second;
}

std::string CodecProfile::fingerprint() const {
  json j;
  j["name"] = name;
  j["preset"] = preset;
  j["knob"] = knob == QualityKnob::crf ? "crf" : "speed";
  json table = json::object();
  for (const auto& [s, q] : crf_by_scale) table[s.to_string()] = q;
  j["crf_by_scale"] = table;
  j["encode_vbv"] = encode_vbv_template;
  j["encode_cbr"] = encode_cbr_template;
  j["decode"] = decode_template;
  if (is_mock()) {
    j["mock"] = {{"variance", mock.variance}, {"bits_per_halving", mock.bits_per_halving}, {"seed", mock.seed}};
  }
  return j.dump();
}

double byte_accounted_rate(std::uint64_t bytes, FrameRate fps, int frame_count) {
  if (frame_count <= 0) throw_invalid("rate of an empty encode is undefined");
  return 8.0 * static_cast<double>(bytes) * fps.value() / static_cast<double>(frame_count);
}

RateControl vbv_for(const CodecProfile& profile, const ScaleFactor& s, double target_rate) {
  Vbv v;
  v.crf = profile.quality_for(s);
  v.maxrate = target_rate;
  v.bufsize = target_rate;
  if (profile.name == "vp9") v.minrate = target_rate / 1.45;
  return v;
}

std::string substitute_template(const std::string& tmpl, const std::map<std::string, std::string>& vars) {
  static const char* const kKnown[] = {"W",       "H",       "FPS",     "CRF", "SPEED", "PRESET", "MAXRATE",
                                       "BUFSIZE", "MINRATE", "BITRATE", "IN",  "OUT",   "REF",    "DIS"};
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out += tmpl[i++];
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string::npos) throw_invalid("template: unterminated placeholder in '" + tmpl + "'");
    const std::string key = tmpl.substr(i + 1, close - i - 1);
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw_invalid("template: unknown placeholder {" + key + "}");
    const auto it = vars.find(key);
    if (it == vars.end()) throw_invalid("template: missing substitution variable {" + key + "}");
    out += it->second;
    i = close + 1;
  }
  return out;
}

namespace {

std::string rate_string(double bps) {
  std::ostringstream os;
  os << static_cast<long long>(std::llround(bps));
  return os.str();
}

std::string fps_string(FrameRate f) { return std::to_string(f.num) + "/" + std::to_string(f.den); }

std::vector<std::uint8_t> y4m_bytes(std::span<const PlanarFrame> frames, FrameRate fps) {
  std::ostringstream os(std::ios::binary);
  VideoInfo info{frames.front().width, frames.front().height, fps, frames.front().range};
  write_y4m(os, info, frames);
  const std::string s = std::move(os).str();
  return {s.begin(), s.end()};
}

std::string tail(const std::string& s, std::size_t n = 400) { return s.size() <= n ? s : s.substr(s.size() - n); }

}  // namespace

TemplateCodec::TemplateCodec(CodecProfile profile, std::chrono::seconds timeout)
    : profile_(std::move(profile)), timeout_(timeout) {}

EncodeResult TemplateCodec::encode(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                                   const RateControl& rc, const std::filesystem::path& out) const {
  (void)scale;
  std::map<std::string, std::string> vars{{"W", std::to_string(frames.front().width)},
                                          {"H", std::to_string(frames.front().height)},
                                          {"FPS", fps_string(fps)},
                                          {"PRESET", profile_.preset},
                                          {"IN", "-"},
                                          {"OUT", shell_quote(out.string())}};
  std::string tmpl;
  if (const auto* v = std::get_if<Vbv>(&rc)) {
    vars[profile_.knob == QualityKnob::crf ? "CRF" : "SPEED"] = std::to_string(v->crf);
    vars["MAXRATE"] = rate_string(v->maxrate);
    vars["BUFSIZE"] = rate_string(v->bufsize);
    if (v->minrate > 0.0) vars["MINRATE"] = rate_string(v->minrate);
    tmpl = profile_.encode_vbv_template;
  } else {
    vars["BITRATE"] = rate_string(std::get<Cbr>(rc).bitrate);
    if (profile_.knob == QualityKnob::speed) vars["SPEED"] = std::to_string(profile_.quality_for(scale));
    tmpl = profile_.encode_cbr_template;
  }
  if (tmpl.empty()) throw CodecError("profile " + profile_.name + " has no encode template for " + describe(rc));
  const std::string cmd = substitute_template(tmpl, vars);
  const auto input = y4m_bytes(frames, fps);
  const ProcessResult pr = run_shell(cmd, input, false, timeout_);
  if (pr.timed_out) throw CodecError("encoder timed out: " + cmd);
  if (pr.exit_code != 0) {
    throw CodecError("encoder exited with " + std::to_string(pr.exit_code) + ": " + cmd + "\n" + tail(pr.stderr_text));
  }
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(out, ec);
  if (ec || bytes == 0) throw CodecError("encoder produced no bitstream at " + out.string());
  EncodeResult r;
  r.bitstream = out;
  r.bitstream_bytes = bytes;
  r.frame_count = static_cast<int>(frames.size());
  r.fps = fps;
  r.width = frames.front().width;
  r.height = frames.front().height;
  r.measured_rate = byte_accounted_rate(bytes, fps, r.frame_count);
  return r;
}

std::vector<PlanarFrame> TemplateCodec::decode(const EncodeResult& result) const {
  if (profile_.decode_template.empty()) throw CodecError("profile " + profile_.name + " has no decode template");
  const std::map<std::string, std::string> vars{{"W", std::to_string(result.width)},
                                                {"H", std::to_string(result.height)},
                                                {"FPS", fps_string(result.fps)},
                                                {"PRESET", profile_.preset},
                                                {"IN", shell_quote(result.bitstream.string())},
                                                {"OUT", "-"}};
  const std::string cmd = substitute_template(profile_.decode_template, vars);
  const ProcessResult pr = run_shell(cmd, {}, true, timeout_);
  if (pr.timed_out) throw CodecError("decoder timed out: " + cmd);
  if (pr.exit_code != 0) {
    throw CodecError("decoder exited with " + std::to_string(pr.exit_code) + ": " + cmd + "\n" + tail(pr.stderr_text));
  }
  std::istringstream is(std::string(pr.stdout_data.begin(), pr.stdout_data.end()), std::ios::binary);
  return read_y4m(is).frames;
}

CodecDriver::CodecDriver(CodecProfile profile, std::filesystem::path work_dir, int jobs)
    : profile_(std::move(profile)), work_dir_(std::move(work_dir)), jobs_(std::max(1, jobs)) {
  if (profile_.is_mock()) backend_ = std::make_shared<MockCodec>(profile_.mock);
  else backend_ = std::make_shared<TemplateCodec>(profile_, codec_timeout_from_env());
  std::filesystem::create_directories(work_dir_);
}

CodecDriver::CodecDriver(CodecProfile profile, std::shared_ptr<const Codec> backend, std::filesystem::path work_dir,
                         int jobs)
    : profile_(std::move(profile)), backend_(std::move(backend)), work_dir_(std::move(work_dir)),
      jobs_(std::max(1, jobs)) {
  std::filesystem::create_directories(work_dir_);
}

EncodeResult CodecDriver::encode(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                                 const RateControl& rc) {
  if (frames.empty()) throw_invalid("cannot encode zero frames");
  for (const auto& f : frames) {
    if (f.width != frames.front().width || f.height != frames.front().height) {
      throw_shape("frames of one encode must share geometry");
    }
  }
  validate(rc);
  std::string key;
  if (cache_) {
    key = cache_key(content_hash(frames), scale, profile_, rc);
    if (auto hit = cache_->lookup(key)) {
      ++cache_hits_;
      return *hit;
    }
  }
  const auto out = work_dir_ / ("enc_" + std::to_string(serial_++) + "." + profile_.extension);
  ++encodes_;
  EncodeResult r = backend_->encode(frames, fps, scale, rc, out);
  if (cache_) {
    r = cache_->store(key, r);
    std::error_code ec;
    std::filesystem::remove(out, ec);
  }
  return r;
}

EncodeResult CodecDriver::encode_vbv(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                                     double target_rate) {
  return encode(frames, fps, scale, vbv_for(profile_, scale, target_rate));
}

EncodeResult CodecDriver::encode_cbr(std::span<const PlanarFrame> frames, FrameRate fps, const ScaleFactor& scale,
                                     double bitrate) {
  return encode(frames, fps, scale, Cbr{bitrate});
}

std::vector<PlanarFrame> CodecDriver::decode(const EncodeResult& result) {
  ++decodes_;
  auto frames = backend_->decode(result);
  if (static_cast<int>(frames.size()) != result.frame_count) {
    throw CodecError("decoder returned " + std::to_string(frames.size()) + " frames, expected " +
                     std::to_string(result.frame_count));
  }
  for (const auto& f : frames) {
    if (f.width != result.width || f.height != result.height) throw CodecError("decoded geometry differs from encode");
  }
  return frames;
}

}  // namespace dvp
