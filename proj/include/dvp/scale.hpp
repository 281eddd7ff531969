#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dvp {

/// Exact rational downscale ratio num/den. s > 1 shrinks, s == 1 is native.
/// Always stored in lowest terms so equal ratios compare equal.
class ScaleFactor {
 public:
  constexpr ScaleFactor() = default;
  ScaleFactor(std::int64_t num, std::int64_t den);

  /// Parses "3/2", "2" or "1".
  static ScaleFactor parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_integer() const { return den_ == 1; }
  bool is_native() const { return num_ == 1 && den_ == 1; }

  /// round(in * den / num), half away from zero, never below 1.
  int output_dim(int in) const;

  /// this / other, e.g. (2) / (4/3) == 3/2.
  ScaleFactor ratio_to(const ScaleFactor& other) const;

  std::string to_string() const;

  friend bool operator==(const ScaleFactor& a, const ScaleFactor& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const ScaleFactor& a, const ScaleFactor& b) {
    // Cross-multiplication is exact for the small ratios we handle.
    return a.num_ * b.den_ <=> b.num_ * a.den_;
  }

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

/// The eight downscaling factors the multi-scale network produces, ascending.
const std::vector<ScaleFactor>& canonical_scales();

/// Canonical factors plus the native resolution 1, ascending.
const std::vector<ScaleFactor>& all_modes();

bool is_canonical(const ScaleFactor& s);

/// Parses "all", or a comma separated list of ratios.
std::vector<ScaleFactor> parse_scale_list(std::string_view text);

/// Frame rate as an exact fraction.
struct FrameRate {
  std::int64_t num = 25;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const FrameRate&, const FrameRate&) = default;
};

}  // namespace dvp
