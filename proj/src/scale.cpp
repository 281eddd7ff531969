#include "dvp/scale.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "dvp/error.hpp"

namespace dvp {

ScaleFactor::ScaleFactor(std::int64_t num, std::int64_t den) {
  if (num <= 0 || den <= 0) {
    throw_invalid("scale factor must be a positive ratio");
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

namespace {

std::int64_t parse_int(std::string_view text) {
  std::int64_t v = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw_invalid("bad scale factor component '" + std::string(text) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

ScaleFactor ScaleFactor::parse(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    return ScaleFactor(parse_int(text), 1);
  }
  return ScaleFactor(parse_int(trim(text.substr(0, slash))), parse_int(trim(text.substr(slash + 1))));
}

int ScaleFactor::output_dim(int in) const {
  // round(in*den/num) with halves rounded up (all operands positive).
  const std::int64_t n = 2 * static_cast<std::int64_t>(in) * den_ + num_;
  const std::int64_t q = n / (2 * num_);
  return static_cast<int>(std::max<std::int64_t>(1, q));
}

ScaleFactor ScaleFactor::ratio_to(const ScaleFactor& other) const {
  return ScaleFactor(num_ * other.den_, den_ * other.num_);
}

std::string ScaleFactor::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

const std::vector<ScaleFactor>& canonical_scales() {
  static const std::vector<ScaleFactor> k{{5, 4}, {4, 3}, {3, 2}, {2, 1},
                                          {5, 2}, {3, 1}, {4, 1}, {6, 1}};
  return k;
}

const std::vector<ScaleFactor>& all_modes() {
  static const std::vector<ScaleFactor> k = [] {
    std::vector<ScaleFactor> v{ScaleFactor(1, 1)};
    v.insert(v.end(), canonical_scales().begin(), canonical_scales().end());
    return v;
  }();
  return k;
}

bool is_canonical(const ScaleFactor& s) {
  const auto& c = canonical_scales();
  return std::find(c.begin(), c.end(), s) != c.end();
}

std::vector<ScaleFactor> parse_scale_list(std::string_view text) {
  text = trim(text);
  if (text == "all") return all_modes();
  std::vector<ScaleFactor> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (!item.empty()) {
      const ScaleFactor s = ScaleFactor::parse(item);
      if (!s.is_native() && !is_canonical(s)) {
        throw_invalid("scale " + s.to_string() + " is not in the canonical set");
      }
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw_invalid("empty scale list");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dvp
