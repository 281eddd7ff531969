#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "dvp/codec.hpp"
#include "dvp/json.hpp"

namespace dvp {

/// SHA-256 (hex) of the canonical (key-sorted, compact) JSON dump, so field
/// order never changes the key.
std::string canonical_key(const json& fields);

/// Stable identifier of one encode job: content hash of the frames handed to
/// the encoder, mode, codec profile and rate control.
std::string cache_key(std::uint64_t content_hash, const ScaleFactor& scale, const CodecProfile& profile,
                      const RateControl& rc);

/// On-disk store of finished encodes: <key>.<ext> plus a <key>.json sidecar.
class EncodeCache {
 public:
  explicit EncodeCache(std::filesystem::path dir);

  std::optional<EncodeResult> lookup(const std::string& key) const;
  /// Copies the bitstream into the cache and returns the cached result.
  EncodeResult store(const std::string& key, const EncodeResult& result);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

}  // namespace dvp
