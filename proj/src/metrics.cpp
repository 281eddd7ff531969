#include "dvp/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include "dvp/codec.hpp"
#include "dvp/error.hpp"
#include "dvp/json.hpp"
#include "dvp/subprocess.hpp"

namespace dvp {

double plane_mse(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height) throw_shape("plane_mse: geometry mismatch");
  if (a.data.empty()) return 0.0;
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const int d = static_cast<int>(a.data[i]) - static_cast<int>(b.data[i]);
    acc += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(acc) / static_cast<double>(a.data.size());
}

double psnr_from_mse(double mse, double cap) {
  if (mse <= 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

FrameQuality frame_psnr(const PlanarFrame& a, const PlanarFrame& b, double cap) {
  if (a.width != b.width || a.height != b.height) {
    throw_shape("frame_psnr: " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                std::to_string(b.width) + "x" + std::to_string(b.height));
  }
  FrameQuality q;
  q.mse_y = plane_mse(a.y, b.y);
  q.mse_cb = plane_mse(a.cb, b.cb);
  q.mse_cr = plane_mse(a.cr, b.cr);
  q.psnr_y = psnr_from_mse(q.mse_y, cap);
  q.psnr_cb = psnr_from_mse(q.mse_cb, cap);
  q.psnr_cr = psnr_from_mse(q.mse_cr, cap);
  q.psnr_avg = (q.psnr_y + q.psnr_cb + q.psnr_cr) / 3.0;
  return q;
}

QualityReport sequence_quality(std::span<const PlanarFrame> reference, std::span<const PlanarFrame> distorted,
                               double cap) {
  if (reference.size() != distorted.size()) {
    throw_shape("sequence_quality: " + std::to_string(reference.size()) + " reference frames vs " +
                std::to_string(distorted.size()) + " distorted");
  }
  QualityReport r;
  r.per_frame.reserve(reference.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    r.per_frame.push_back(frame_psnr(reference[i], distorted[i], cap));
    sum += r.per_frame.back().psnr_avg;
  }
  r.sequence_psnr = reference.empty() ? 0.0 : sum / static_cast<double>(reference.size());
  return r;
}

RDCurve read_rd_curve_csv(std::istream& in, std::string metric) {
  RDCurve curve;
  curve.metric = std::move(metric);
  std::string line;
  int lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    RDSample s;
    char comma = 0;
    if (!(ls >> s.rate >> comma >> s.quality) || comma != ',') {
      if (!seen_header && curve.points.empty()) {
        seen_header = true;
        continue;
      }
      throw_format("rd csv line " + std::to_string(lineno) + ": expected rate,quality");
    }
    if (!std::isfinite(s.rate) || !std::isfinite(s.quality) || s.rate <= 0.0) {
      throw_format("rd csv line " + std::to_string(lineno) + ": rate must be positive and values finite");
    }
    curve.points.push_back(s);
  }
  return curve;
}

RDCurve read_rd_curve_csv_file(const std::filesystem::path& path, std::string metric) {
  std::ifstream in(path);
  if (!in) throw_format("cannot open " + path.string());
  return read_rd_curve_csv(in, std::move(metric));
}

void write_rd_curve_csv(std::ostream& out, const RDCurve& curve) {
  out << "rate," << curve.metric << "\n";
  out.precision(17);
  for (const auto& p : curve.points) out << p.rate << "," << p.quality << "\n";
}

namespace {

/// y(x) over [xs.front(), xs.back()] with an exact integral.
class Interpolant {
 public:
  virtual ~Interpolant() = default;
  virtual double integral(double lo, double hi) const = 0;
};

class CubicFit final : public Interpolant {
 public:
  CubicFit(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    center_ = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double spread = 0.0;
    for (double v : x) spread = std::max(spread, std::abs(v - center_));
    scale_ = spread > 0.0 ? spread : 1.0;
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = (x[i] - center_) / scale_;
      a(i, 0) = 1.0;
      a(i, 1) = t;
      a(i, 2) = t * t;
      a(i, 3) = t * t * t;
      b(i) = y[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < 4) throw_invalid("bd_metrics: degenerate curve, cubic fit is rank deficient");
    coef_ = qr.solve(b);
  }

  double integral(double lo, double hi) const override { return antiderivative(hi) - antiderivative(lo); }

 private:
  double antiderivative(double x) const {
    const double t = (x - center_) / scale_;
    return scale_ * (coef_(0) * t + coef_(1) * t * t / 2.0 + coef_(2) * t * t * t / 3.0 +
                     coef_(3) * t * t * t * t / 4.0);
  }

  double center_ = 0.0;
  double scale_ = 1.0;
  Eigen::Vector4d coef_;
};

/// Shape-preserving piecewise cubic Hermite interpolation.
class Pchip final : public Interpolant {
 public:
  Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    d_.assign(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] > 0.0) {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double integral(double lo, double hi) const override {
    // Three-point Gauss-Legendre is exact for the cubic pieces.
    static constexpr double kNodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double kWeights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < x_.size(); ++k) {
      const double a = std::max(lo, x_[k]);
      const double b = std::min(hi, x_[k + 1]);
      if (b <= a) continue;
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      for (int q = 0; q < 3; ++q) total += kWeights[q] * half * eval(k, mid + half * kNodes[q]);
    }
    return total;
  }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) d = 0.0;
    else if (d0 * d1 < 0.0 && std::abs(d) > std::abs(3.0 * d0)) d = 3.0 * d0;
    return d;
  }

  double eval(std::size_t k, double x) const {
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
           (t3 - t2) * h * d_[k + 1];
  }

  std::vector<double> x_, y_, d_;
};

std::unique_ptr<Interpolant> make_fit(std::vector<double> x, std::vector<double> y, BdMethod method) {
  if (method == BdMethod::cubic) return std::make_unique<CubicFit>(x, y);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs, ys;
  for (auto i : order) {
    if (!xs.empty() && x[i] <= xs.back()) throw_invalid("bd_metrics: repeated abscissa in pchip fit");
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }
  return std::make_unique<Pchip>(std::move(xs), std::move(ys));
}

void check_curve(const RDCurve& c, const char* which) {
  if (c.points.size() < 4) throw_invalid(std::string("bd_metrics: ") + which + " curve needs at least 4 points");
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (!(c.points[i].rate > 0.0) || !std::isfinite(c.points[i].quality)) {
      throw_invalid(std::string("bd_metrics: ") + which + " curve has a non-positive rate or non-finite quality");
    }
    if (i > 0 && !(c.points[i].rate > c.points[i - 1].rate)) {
      throw_invalid(std::string("bd_metrics: ") + which + " curve rates must be strictly increasing");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (c.points[j].quality == c.points[i].quality) {
        throw_invalid(std::string("bd_metrics: ") + which + " curve repeats a quality value");
      }
    }
  }
}

}  // namespace

BdResult bd_metrics(const RDCurve& anchor, const RDCurve& test, BdMethod method) {
  check_curve(anchor, "anchor");
  check_curve(test, "test");
  auto columns = [](const RDCurve& c, std::vector<double>& lr, std::vector<double>& q) {
    for (const auto& p : c.points) {
      lr.push_back(std::log10(p.rate));
      q.push_back(p.quality);
    }
  };
  std::vector<double> lr_a, q_a, lr_b, q_b;
  columns(anchor, lr_a, q_a);
  columns(test, lr_b, q_b);

  BdResult r;
  // Quality as a function of log-rate, over the common rate range.
  {
    const double lo = std::max(lr_a.front(), lr_b.front());
    const double hi = std::min(lr_a.back(), lr_b.back());
    if (!(hi > lo)) throw_invalid("bd_metrics: rate ranges do not overlap");
    const auto fa = make_fit(lr_a, q_a, method);
    const auto fb = make_fit(lr_b, q_b, method);
    r.bd_quality = (fb->integral(lo, hi) - fa->integral(lo, hi)) / (hi - lo);
  }
  // Log-rate as a function of quality, over the common quality range.
  {
    const auto [amin, amax] = std::minmax_element(q_a.begin(), q_a.end());
    const auto [bmin, bmax] = std::minmax_element(q_b.begin(), q_b.end());
    const double lo = std::max(*amin, *bmin);
    const double hi = std::min(*amax, *bmax);
    if (!(hi > lo)) throw_invalid("bd_metrics: quality ranges do not overlap");
    const auto fa = make_fit(q_a, lr_a, method);
    const auto fb = make_fit(q_b, lr_b, method);
    const double avg = (fb->integral(lo, hi) - fa->integral(lo, hi)) / (hi - lo);
    r.bd_rate = 100.0 * (std::pow(10.0, avg) - 1.0);
  }
  return r;
}

double parse_vmaf_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw_format(std::string("vmaf report is not valid JSON: ") + e.what());
  }
  const json* node = &j;
  for (const char* key : {"pooled_metrics", "vmaf", "mean"}) {
    if (!node->is_object() || !node->contains(key)) {
      throw_format(std::string("vmaf report lacks pooled_metrics.vmaf.mean (missing '") + key + "')");
    }
    node = &(*node)[key];
  }
  if (!node->is_number()) throw_format("vmaf report: pooled mean is not a number");
  const double v = node->get<double>();
  if (!std::isfinite(v) || v < 0.0 || v > 100.0) throw_format("vmaf report: score outside [0,100]");
  return v;
}

VmafResult vmaf_external(const std::filesystem::path& reference, const std::filesystem::path& distorted, int width,
                         int height, const std::string& tool_template, std::chrono::seconds timeout) {
  VmafResult r;
  if (!program_available(tool_template)) {
    r.message = "vmaf tool not found on PATH";
    return r;
  }
  const auto out = std::filesystem::temp_directory_path() /
                   ("dvp_vmaf_" + std::to_string(::getpid()) + "_" + distorted.filename().string() + ".json");
  std::error_code ec;
  std::filesystem::remove(out, ec);
  const std::string cmd = substitute_template(
      tool_template, {{"REF", shell_quote(reference.string())},
                      {"DIS", shell_quote(distorted.string())},
                      {"W", std::to_string(width)},
                      {"H", std::to_string(height)},
                      {"OUT", shell_quote(out.string())}});
  const ProcessResult pr = run_shell(cmd, {}, false, timeout);
  if (pr.timed_out) throw CodecError("vmaf tool timed out: " + cmd);
  if (pr.exit_code != 0) throw CodecError("vmaf tool exited with " + std::to_string(pr.exit_code) + ": " + pr.stderr_text);
  std::ifstream in(out);
  if (!in) throw_format("vmaf tool wrote no report at " + out.string());
  std::stringstream ss;
  ss << in.rdbuf();
  in.close();
  std::filesystem::remove(out, ec);
  r.score = parse_vmaf_json(ss.str());
  r.status = VmafResult::Status::ok;
  return r;
}

}  // namespace dvp
