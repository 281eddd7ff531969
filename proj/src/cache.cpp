#include "dvp/cache.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>

#include "dvp/error.hpp"

namespace dvp {

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

json rc_json(const RateControl& rc) {
  if (const auto* v = std::get_if<Vbv>(&rc)) {
    return {{"mode", "vbv"}, {"crf", v->crf}, {"maxrate", v->maxrate}, {"bufsize", v->bufsize}, {"minrate", v->minrate}};
  }
  return {{"mode", "cbr"}, {"bitrate", std::get<Cbr>(rc).bitrate}};
}

}  // namespace

std::string canonical_key(const json& fields) {
  // nlohmann::json objects are std::map backed, so dump() is key-sorted.
  return sha256_hex(fields.dump());
}

std::string cache_key(std::uint64_t content_hash, const ScaleFactor& scale, const CodecProfile& profile,
                      const RateControl& rc) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(content_hash));
  const json fields{{"content", hash},
                    {"scale", scale.to_string()},
                    {"codec", profile.fingerprint()},
                    {"rate_control", rc_json(rc)}};
  return canonical_key(fields);
}

EncodeCache::EncodeCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<EncodeResult> EncodeCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto meta = dir_ / (key + ".json");
  std::ifstream is(meta);
  if (!is) return std::nullopt;
  json j;
  try {
    is >> j;
    EncodeResult r;
    r.bitstream = dir_ / j.at("bitstream").get<std::string>();
    r.bitstream_bytes = j.at("bitstream_bytes").get<std::uint64_t>();
    r.measured_rate = j.at("measured_rate").get<double>();
    r.frame_count = j.at("frame_count").get<int>();
    r.fps = FrameRate{j.at("fps_num").get<std::int64_t>(), j.at("fps_den").get<std::int64_t>()};
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    if (!std::filesystem::exists(r.bitstream)) return std::nullopt;
    return r;
  } catch (const json::exception&) {
    // A damaged sidecar is a miss; the next store overwrites it.
    return std::nullopt;
  }
}

EncodeResult EncodeCache::store(const std::string& key, const EncodeResult& result) {
  std::lock_guard lock(mutex_);
  EncodeResult r = result;
  const std::string name = key + result.bitstream.extension().string();
  r.bitstream = dir_ / name;
  if (std::filesystem::absolute(result.bitstream) != std::filesystem::absolute(r.bitstream)) {
    std::filesystem::copy_file(result.bitstream, r.bitstream, std::filesystem::copy_options::overwrite_existing);
  }
  const json j{{"bitstream", name},          {"bitstream_bytes", r.bitstream_bytes},
               {"measured_rate", r.measured_rate}, {"frame_count", r.frame_count},
               {"fps_num", r.fps.num},       {"fps_den", r.fps.den},
               {"width", r.width},           {"height", r.height}};
  const auto tmp = dir_ / (key + ".json.tmp");
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error("cannot write cache entry " + tmp.string());
    os << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, dir_ / (key + ".json"));
  return r;
}

}  // namespace dvp
