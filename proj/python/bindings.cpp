#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "dvp/codec.hpp"
#include "dvp/error.hpp"
#include "dvp/metrics.hpp"
#include "dvp/mode_select.hpp"
#include "dvp/netinfo.hpp"
#include "dvp/pipeline.hpp"
#include "dvp/precoder.hpp"
#include "dvp/resample.hpp"
#include "dvp/weights.hpp"

namespace py = pybind11;
using namespace dvp;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

U8Array to_array(const Plane& p) {
  U8Array a({static_cast<py::ssize_t>(p.height), static_cast<py::ssize_t>(p.width)});
  std::memcpy(a.mutable_data(), p.data.data(), p.data.size());
  return a;
}

Plane to_plane(const U8Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D uint8 array");
  Plane p(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(p.data.data(), a.data(), p.data.size());
  return p;
}

ScaleFactor as_scale(const py::handle& h) {
  if (py::isinstance<ScaleFactor>(h)) return h.cast<ScaleFactor>();
  if (py::isinstance<py::int_>(h)) return ScaleFactor(h.cast<std::int64_t>(), 1);
  return ScaleFactor::parse(py::str(h).cast<std::string>());
}

std::vector<ScaleFactor> as_scales(const py::object& o) {
  if (py::isinstance<py::str>(o)) return parse_scale_list(o.cast<std::string>());
  std::vector<ScaleFactor> v;
  for (const auto& h : o) v.push_back(as_scale(h));
  return v;
}

std::vector<RDPoint> as_points(const py::iterable& pts) {
  std::vector<RDPoint> v;
  for (const auto& h : pts) {
    const auto t = h.cast<py::tuple>();
    RDPoint p;
    p.rate = t[0].cast<double>();
    p.distortion = t[1].cast<double>();
    p.scale = t.size() > 2 ? as_scale(t[2]) : ScaleFactor(1, 1);
    v.push_back(p);
  }
  return v;
}

py::list from_points(const std::vector<RDPoint>& v) {
  py::list out;
  for (const auto& p : v) out.append(py::make_tuple(p.rate, p.distortion, p.scale.to_string()));
  return out;
}

RDCurve as_curve(const py::iterable& pts) {
  RDCurve c;
  for (const auto& h : pts) {
    const auto t = h.cast<py::tuple>();
    c.points.push_back({t[0].cast<double>(), t[1].cast<double>()});
  }
  return c;
}

py::dict quality_dict(const FrameQuality& q) {
  py::dict d;
  d["mse_y"] = q.mse_y;
  d["mse_cb"] = q.mse_cb;
  d["mse_cr"] = q.mse_cr;
  d["psnr_y"] = q.psnr_y;
  d["psnr_cb"] = q.psnr_cb;
  d["psnr_cr"] = q.psnr_cr;
  d["psnr_avg"] = q.psnr_avg;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dvp, m) {
  m.doc() = "Multi-scale video precoding: resampling, network, mode selection, metrics";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<CodecError>(m, "CodecError", PyExc_RuntimeError);

  py::enum_<PixelRange>(m, "PixelRange").value("limited", PixelRange::limited).value("full", PixelRange::full);

  py::class_<ScaleFactor>(m, "ScaleFactor")
      .def(py::init<std::int64_t, std::int64_t>(), py::arg("num"), py::arg("den") = 1)
      .def_static("parse", &ScaleFactor::parse)
      .def_property_readonly("num", &ScaleFactor::num)
      .def_property_readonly("den", &ScaleFactor::den)
      .def_property_readonly("value", &ScaleFactor::value)
      .def("output_dim", &ScaleFactor::output_dim)
      .def("__str__", &ScaleFactor::to_string)
      .def("__repr__", [](const ScaleFactor& s) { return "ScaleFactor('" + s.to_string() + "')"; })
      .def("__eq__", [](const ScaleFactor& a, const ScaleFactor& b) { return a == b; })
      .def("__lt__", [](const ScaleFactor& a, const ScaleFactor& b) { return a < b; })
      .def("__hash__", [](const ScaleFactor& s) { return py::hash(py::make_tuple(s.num(), s.den())); });
  m.def("canonical_scales", &canonical_scales);
  m.def("all_modes", &all_modes);

  py::class_<PlanarFrame>(m, "Frame")
      .def(py::init<int, int, PixelRange>(), py::arg("width"), py::arg("height"),
           py::arg("range") = PixelRange::limited)
      .def(py::init([](const U8Array& y, const U8Array& cb, const U8Array& cr, PixelRange range) {
             PlanarFrame f;
             f.y = to_plane(y);
             f.cb = to_plane(cb);
             f.cr = to_plane(cr);
             f.width = f.y.width;
             f.height = f.y.height;
             f.range = range;
             f.validate();
             return f;
           }),
           py::arg("y"), py::arg("cb"), py::arg("cr"), py::arg("range") = PixelRange::limited)
      .def_readonly("width", &PlanarFrame::width)
      .def_readonly("height", &PlanarFrame::height)
      .def_readonly("range", &PlanarFrame::range)
      .def_property_readonly("y", [](const PlanarFrame& f) { return to_array(f.y); })
      .def_property_readonly("cb", [](const PlanarFrame& f) { return to_array(f.cb); })
      .def_property_readonly("cr", [](const PlanarFrame& f) { return to_array(f.cr); })
      .def("__eq__", [](const PlanarFrame& a, const PlanarFrame& b) { return a == b; });

  m.def(
      "read_y4m",
      [](const std::string& path) {
        Y4mVideo v = read_y4m_file(path);
        py::dict info;
        info["width"] = v.info.width;
        info["height"] = v.info.height;
        info["fps"] = py::make_tuple(v.info.fps.num, v.info.fps.den);
        info["range"] = v.info.range;
        return py::make_tuple(info, v.frames);
      },
      py::arg("path"), "Returns (info, frames).");
  m.def(
      "write_y4m",
      [](const std::string& path, const std::vector<PlanarFrame>& frames, std::pair<std::int64_t, std::int64_t> fps) {
        if (frames.empty()) throw InvalidArgument("no frames to write");
        VideoInfo info{frames[0].width, frames[0].height, FrameRate{fps.first, fps.second}, frames[0].range};
        write_y4m_file(path, info, frames);
      },
      py::arg("path"), py::arg("frames"), py::arg("fps") = std::pair<std::int64_t, std::int64_t>{25, 1});

  m.def(
      "resize",
      [](const U8Array& plane, int width, int height, const std::string& filter) {
        return to_array(resize_plane(to_plane(plane), width, height, FilterKind::parse(filter)));
      },
      py::arg("plane"), py::arg("width"), py::arg("height"), py::arg("filter") = "bicubic");

  py::class_<NetworkWeights, std::shared_ptr<NetworkWeights>>(m, "Weights")
      .def_static("xavier", [](std::uint64_t seed) { return std::make_shared<NetworkWeights>(init_xavier(seed)); },
                  py::arg("seed") = 1)
      .def_static("linear_baseline", [] { return std::make_shared<NetworkWeights>(init_linear_baseline()); })
      .def_static("zero", [] { return std::make_shared<NetworkWeights>(make_zero_weights()); })
      .def_static("load", [](const std::string& p) { return std::make_shared<NetworkWeights>(load_weights_file(p)); })
      .def("save", [](const NetworkWeights& w, const std::string& p) { save_weights_file(w, p); })
      .def("to_bytes", [](const NetworkWeights& w) {
        const auto b = save_weights(w);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      });

  m.def(
      "precode",
      [](const PlanarFrame& frame, const NetworkWeights& w, const py::object& scales) {
        const auto s = as_scales(scales);
        py::gil_scoped_release release;
        return precode_frame(frame, w, s);
      },
      py::arg("frame"), py::arg("weights"), py::arg("scales") = "all",
      "Precoded frames keyed by ScaleFactor.");

  m.def(
      "netinfo",
      [](const NetworkWeights* w, int width, int height) {
        const NetInfo info = count_params_and_macs(w ? *w : make_zero_weights(), width, height);
        py::dict d;
        d["total_params"] = info.total_params;
        d["root_params"] = info.root_params;
        d["projection_params"] = info.projection_params;
        d["total_macs"] = info.total_macs;
        py::list blocks;
        for (const auto& b : info.blocks) {
          py::dict e;
          e["scale"] = b.scale.to_string();
          e["params"] = b.params;
          e["macs"] = b.macs;
          blocks.append(e);
        }
        d["blocks"] = blocks;
        return d;
      },
      py::arg("weights") = nullptr, py::arg("width") = 1920, py::arg("height") = 1080);

  m.def(
      "prune_monotone", [](const py::iterable& pts) { return from_points(prune_monotone(as_points(pts))); },
      py::arg("points"), "points: iterable of (rate, distortion[, scale])");
  m.def(
      "lower_convex_hull", [](const py::iterable& pts) { return from_points(lower_convex_hull(as_points(pts))); },
      py::arg("points"));

  m.def(
      "frame_psnr", [](const PlanarFrame& a, const PlanarFrame& b) { return quality_dict(frame_psnr(a, b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "bd_metrics",
      [](const py::iterable& anchor, const py::iterable& test, const std::string& method) {
        if (method != "cubic" && method != "pchip") throw InvalidArgument("method must be cubic or pchip");
        const BdResult r =
            bd_metrics(as_curve(anchor), as_curve(test), method == "pchip" ? BdMethod::pchip : BdMethod::cubic);
        py::dict d;
        d["bd_rate"] = r.bd_rate;
        d["bd_quality"] = r.bd_quality;
        return d;
      },
      py::arg("anchor"), py::arg("test"), py::arg("method") = "cubic");

  m.def(
      "run_ladder",
      [](const std::string& input, const py::object& bitrates, const std::string& output_dir,
         const std::string& codec, int gop, int footprint, const py::object& scales, const std::string& weights,
         bool use_cache, int jobs) {
        LadderConfig cfg;
        if (py::isinstance<py::str>(bitrates)) {
          cfg.bitrates = parse_bitrate_list(bitrates.cast<std::string>());
        } else {
          cfg.bitrates = bitrates.cast<std::vector<double>>();
        }
        cfg.codec = CodecProfile::by_name(codec);
        cfg.gop_len = gop;
        cfg.footprint_n = footprint;
        cfg.scales = as_scales(scales);
        cfg.weights_path = weights;
        cfg.output_dir = output_dir;
        cfg.use_cache = use_cache;
        cfg.jobs = jobs;
        LadderResult r;
        {
          py::gil_scoped_release release;
          r = run_ladder_file(input, cfg);
          write_json_file(cfg.output_dir / "manifest.json", r.manifest());
          write_json_file(cfg.output_dir / "quality.json", r.quality_report());
        }
        py::dict d;
        d["manifest"] = r.manifest().dump();
        d["encoder_invocations"] = r.encoder_invocations;
        d["cache_hits"] = r.cache_hits;
        d["errors"] = r.errors.size();
        return d;
      },
      py::arg("input"), py::arg("bitrates"), py::arg("output_dir"), py::arg("codec") = "mock", py::arg("gop") = 90,
      py::arg("footprint") = 5, py::arg("scales") = "all", py::arg("weights") = "", py::arg("use_cache") = true,
      py::arg("jobs") = 1);
}
