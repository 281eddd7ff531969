#include "dvp/mode_select.hpp"

#include <algorithm>

#include "dvp/error.hpp"
#include "dvp/metrics.hpp"
#include "dvp/parallel.hpp"

namespace dvp {

double upscaled_distortion(std::span<const PlanarFrame> reference, std::span<const PlanarFrame> decoded,
                           const FilterKind& upscaler) {
  if (reference.size() != decoded.size() || reference.empty()) {
    throw_shape("distortion: " + std::to_string(reference.size()) + " reference vs " +
                std::to_string(decoded.size()) + " decoded frames");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto& ref = reference[i];
    const PlanarFrame up = decoded[i].width == ref.width && decoded[i].height == ref.height
                               ? decoded[i]
                               : upscale_frame(decoded[i], ref.width, ref.height, upscaler);
    sum += (plane_mse(ref.y, up.y) + plane_mse(ref.cb, up.cb) + plane_mse(ref.cr, up.cr)) / 3.0;
  }
  return sum / static_cast<double>(reference.size());
}

std::map<ScaleFactor, std::shared_ptr<const GopSegment>> precode_gop(const GopSegment& gop,
                                                                      std::span<const ScaleFactor> scales,
                                                                      const Downscaler& downscaler, int jobs) {
  std::vector<ScaleFactor> reduced;
  for (const auto& s : scales) {
    if (!s.is_native()) reduced.push_back(s);
  }
  std::vector<std::map<ScaleFactor, PlanarFrame>> per_frame(gop.frames.size());
  if (!reduced.empty()) {
    parallel_for(gop.frames.size(), jobs,
                 [&](std::size_t i) { per_frame[i] = downscaler.precode(gop.frames[i], reduced); });
  }
  std::map<ScaleFactor, std::shared_ptr<const GopSegment>> out;
  for (const auto& s : scales) {
    auto seg = std::make_shared<GopSegment>();
    seg->index = gop.index;
    seg->start_frame = gop.start_frame;
    seg->fps = gop.fps;
    if (s.is_native()) {
      seg->frames = gop.frames;
    } else {
      seg->frames.reserve(gop.frames.size());
      for (auto& m : per_frame) seg->frames.push_back(std::move(m.at(s)));
    }
    out[s] = std::move(seg);
  }
  return out;
}

namespace {

std::vector<ScaleFactor> checked_scales(std::span<const ScaleFactor> scales) {
  if (scales.empty()) throw_invalid("mode selection needs at least one scale");
  std::vector<ScaleFactor> v(scales.begin(), scales.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <class Fn>
auto with_scale(const ScaleFactor& s, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const CodecError& e) {
    throw CodecError("mode " + s.to_string() + ": " + e.what());
  }
}

std::vector<RDPoint> measure(const std::map<ScaleFactor, std::shared_ptr<const GopSegment>>& handles,
                             const GopSegment& reference, CodecDriver& driver, double target_rate,
                             const FilterKind& upscaler, int jobs) {
  std::vector<RDPoint> points;
  for (const auto& [s, h] : handles) points.push_back(RDPoint{0.0, 0.0, s, h});
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    auto& p = points[i];
    with_scale(p.scale, [&] {
      const auto enc = driver.encode_vbv(p.handle->frames, reference.fps, p.scale, target_rate);
      const auto dec = driver.decode(enc);
      p.rate = enc.measured_rate;
      p.distortion = upscaled_distortion(reference.frames, dec, upscaler);
    });
  });
  return points;
}

}  // namespace

std::vector<RDPoint> extract_rd_points(const GopSegment& gop, std::span<const ScaleFactor> scales,
                                       const Downscaler& downscaler, CodecDriver& driver, double target_rate,
                                       const SelectOptions& opts) {
  if (opts.footprint_n < 1) throw_invalid("footprint_n must be >= 1");
  if (!(target_rate > 0.0)) throw_invalid("target rate must be positive");
  const auto modes = checked_scales(scales);
  const GopSegment fp = footprint(gop, opts.footprint_n).materialize();
  const auto handles = precode_gop(fp, modes, downscaler, opts.jobs);
  return measure(handles, fp, driver, target_rate, opts.upscaler, opts.jobs);
}

std::vector<RDPoint> prune_monotone(std::vector<RDPoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const RDPoint& a, const RDPoint& b) {
    if (a.rate != b.rate) return a.rate < b.rate;
    if (a.distortion != b.distortion) return a.distortion < b.distortion;
    return b.scale < a.scale;
  });
  std::vector<RDPoint> kept;
  for (auto& p : points) {
    if (kept.empty() || p.distortion < kept.back().distortion) kept.push_back(std::move(p));
  }
  return kept;
}

std::vector<RDPoint> lower_convex_hull(std::vector<RDPoint> points) {
  if (points.size() <= 2) return points;
  std::vector<RDPoint> hull;
  for (auto& p : points) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      // b stays only if it is strictly below the chord a -> p.
      const double cross = (b.rate - a.rate) * (p.distortion - a.distortion) -
                           (b.distortion - a.distortion) * (p.rate - a.rate);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(std::move(p));
  }
  return hull;
}

ModeDecision cbr_remap_and_select(const std::vector<RDPoint>& survivors, std::span<const PlanarFrame> reference,
                                  CodecDriver& driver, const FilterKind& upscaler, int jobs) {
  if (survivors.empty()) throw_invalid("cbr remap needs at least one survivor");
  ModeDecision d;
  double sum = 0.0;
  for (const auto& p : survivors) sum += p.rate;
  d.stage_log.cbr_rate = sum / static_cast<double>(survivors.size());
  const FrameRate fps = survivors.front().handle->fps;

  std::vector<RDPoint> remapped = survivors;
  parallel_for(remapped.size(), jobs, [&](std::size_t i) {
    auto& p = remapped[i];
    with_scale(p.scale, [&] {
      const auto enc = driver.encode_cbr(p.handle->frames, fps, p.scale, d.stage_log.cbr_rate);
      const auto dec = driver.decode(enc);
      p.rate = enc.measured_rate;
      p.distortion = upscaled_distortion(reference, dec, upscaler);
    });
  });
  const RDPoint* best = &remapped.front();
  for (const auto& p : remapped) {
    if (p.distortion < best->distortion || (p.distortion == best->distortion && best->scale < p.scale)) best = &p;
  }
  d.selected = best->scale;
  d.selected_handle = best->handle;
  d.stage_log.remapped_points = std::move(remapped);
  return d;
}

ModeDecision select_mode(const GopSegment& gop, std::span<const ScaleFactor> scales, const Downscaler& downscaler,
                         CodecDriver& driver, double target_rate, const SelectOptions& opts) {
  auto all = extract_rd_points(gop, scales, downscaler, driver, target_rate, opts);
  auto monotone = prune_monotone(all);
  auto hull = lower_convex_hull(monotone);

  ModeDecision d;
  if (opts.full_remap && opts.footprint_n > 1) {
    std::vector<ScaleFactor> modes;
    for (const auto& p : hull) modes.push_back(p.scale);
    const auto handles = precode_gop(gop, modes, downscaler, opts.jobs);
    std::vector<RDPoint> full = hull;
    for (auto& p : full) p.handle = handles.at(p.scale);
    d = cbr_remap_and_select(full, gop.frames, driver, opts.upscaler, opts.jobs);
  } else {
    const GopSegment fp = footprint(gop, opts.footprint_n).materialize();
    d = cbr_remap_and_select(hull, fp.frames, driver, opts.upscaler, opts.jobs);
  }
  d.stage_log.all_points = std::move(all);
  d.stage_log.after_monotone = std::move(monotone);
  d.stage_log.after_hull = std::move(hull);
  return d;
}

}  // namespace dvp
