#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "sim2real/denoiser.hpp"
#include "sim2real/detector.hpp"
#include "sim2real/fbp.hpp"
#include "sim2real/harness.hpp"
#include "sim2real/metrics.hpp"
#include "sim2real/phantom.hpp"
#include "sim2real/preprocess.hpp"
#include "sim2real/projector.hpp"

namespace py = pybind11;
using namespace sim2real;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

Array to_array(std::span<const double> v, std::size_t rows, std::size_t cols) {
  Array out({rows, cols});
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

Array to_array(std::span<const double> v) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

void require_2d(const Array& a, const char* what) {
  if (a.ndim() != 2) throw ValidationError(std::string(what) + " must be a 2D array");
}

Sinogram sinogram_from(const Array& a, double det_pixel_mm, SinogramStage stage) {
  require_2d(a, "sinogram");
  return Sinogram(half_turn_angles(static_cast<std::size_t>(a.shape(0))),
                  static_cast<std::size_t>(a.shape(1)), det_pixel_mm, stage, to_vector(a));
}

Image2D image_from(const Array& a, double pixel_mm) {
  require_2d(a, "image");
  return Image2D(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)),
                 pixel_mm, to_vector(a));
}

Array sinogram_array(const Sinogram& s) { return to_array(s.data(), s.n_angles(), s.n_pixels()); }
Array image_array(const Image2D& i) { return to_array(i.data(), i.height(), i.width()); }

FbpConfig fbp_config(std::size_t width, std::size_t height, double pixel_mm,
                     const std::string& filter) {
  FbpConfig c;
  c.width = width;
  c.height = height;
  c.pixel_size_mm = pixel_mm;
  c.filter = fbp_filter_from_string(filter);
  return c;
}

MetricConfig metric_config(const std::string& range, double fixed_range) {
  MetricConfig c;
  c.range = range_policy_from_string(range);
  c.fixed_range = fixed_range;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sim-to-real CT denoising study core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("set_num_threads", &set_num_threads, py::arg("n"));

  m.def(
      "sample_phantom",
      [](std::uint64_t seed, const std::string& complexity, double fov_mm) {
        return phantom_to_text(sample_phantom(seed, complexity_from_string(complexity), fov_mm));
      },
      py::arg("seed"), py::arg("complexity"), py::arg("fov_radius_mm") = 60.0,
      "Random phantom in its text form.");

  m.def(
      "rasterize",
      [](const std::string& phantom, std::size_t width, std::size_t height, double pixel_mm,
         double energy_keV) {
        return image_array(rasterize(phantom_from_text(phantom), width, height, pixel_mm, energy_keV));
      },
      py::arg("phantom"), py::arg("width") = 256, py::arg("height") = 256,
      py::arg("pixel_mm") = 0.5, py::arg("energy_keV") = kReferenceEnergyKeV);

  m.def(
      "forward_project",
      [](const std::string& phantom, std::size_t n_angles, std::size_t n_pixels,
         double det_pixel_mm, double energy_keV) {
        ScanGeometry g;
        g.n_angles = n_angles;
        g.n_pixels = n_pixels;
        g.det_pixel_size_mm = det_pixel_mm;
        const Phantom p = phantom_from_text(phantom);
        g.fov_radius_mm = p.fov_radius_mm();
        return sinogram_array(forward_project_mono(p, g, energy_keV));
      },
      py::arg("phantom"), py::arg("n_angles") = 360, py::arg("n_pixels") = 363,
      py::arg("det_pixel_mm") = 0.5, py::arg("energy_keV") = kReferenceEnergyKeV,
      "Monochromatic intensity-loss sinogram, shape (angles, pixels).");

  m.def(
      "poisson",
      [](double lambda, std::size_t n, std::uint64_t seed) {
        auto s = SeededRng(seed).stream(RngPurpose::Generic, 0, 0);
        std::vector<double> v(n);
        for (auto& x : v) x = poisson_sample(lambda, s);
        return to_array(v);
      },
      py::arg("lam"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "cross_talk",
      [](const Array& row, double sigma) { return to_array(cross_talk_apply(to_vector(row), sigma)); },
      py::arg("row"), py::arg("sigma"));

  m.def(
      "synthesize_noisy_pair",
      [](const Array& clean_ili, double i0, double cross_talk, std::uint64_t seed,
         double sigma_electronic, double det_pixel_mm) {
        SynthesisOptions o;
        o.sigma_electronic = sigma_electronic;
        const Sinogram s = sinogram_from(clean_ili, det_pixel_mm, SinogramStage::IntensityLoss);
        return sinogram_array(synthesize_noisy_pair(s, i0, cross_talk, SeededRng(seed), o));
      },
      py::arg("clean_ili"), py::arg("i0"), py::arg("cross_talk") = 0.05, py::arg("seed") = 0,
      py::arg("sigma_electronic") = 0.0, py::arg("det_pixel_mm") = 0.5);

  m.def(
      "to_intensity_loss",
      [](const Array& raw, const Array& flat, const Array& dark, double det_pixel_mm) {
        const Sinogram s = sinogram_from(raw, det_pixel_mm, SinogramStage::RawCounts);
        DetectorConfig c;
        c.flat = to_vector(flat);
        c.dark = to_vector(dark);
        return sinogram_array(to_intensity_loss(s, c));
      },
      py::arg("raw"), py::arg("flat"), py::arg("dark"), py::arg("det_pixel_mm") = 0.5);

  m.def(
      "negative_log",
      [](const Array& ili, double det_pixel_mm) {
        return sinogram_array(negative_log(sinogram_from(ili, det_pixel_mm, SinogramStage::IntensityLoss)));
      },
      py::arg("ili"), py::arg("det_pixel_mm") = 0.5);

  m.def(
      "fbp",
      [](const Array& absorption, double det_pixel_mm, std::size_t width, std::size_t height,
         double pixel_mm, const std::string& filter) {
        const Sinogram s = sinogram_from(absorption, det_pixel_mm, SinogramStage::Absorption);
        return image_array(fbp_reconstruct(s, fbp_config(width, height, pixel_mm, filter)));
      },
      py::arg("absorption"), py::arg("det_pixel_mm") = 0.5, py::arg("width") = 256,
      py::arg("height") = 256, py::arg("pixel_mm") = 0.5, py::arg("filter") = "ramlak");

  m.def(
      "psnr",
      [](const Array& test, const Array& ref, const std::string& range, double fixed_range) {
        return psnr(image_from(test, 1.0), image_from(ref, 1.0), metric_config(range, fixed_range));
      },
      py::arg("test"), py::arg("reference"), py::arg("range") = "reference-minmax",
      py::arg("fixed_range") = 1.0);

  m.def(
      "ssim",
      [](const Array& test, const Array& ref, const std::string& range, double fixed_range) {
        return ssim(image_from(test, 1.0), image_from(ref, 1.0), metric_config(range, fixed_range));
      },
      py::arg("test"), py::arg("reference"), py::arg("range") = "reference-minmax",
      py::arg("fixed_range") = 1.0);

  m.def(
      "denoise",
      [](const std::string& model_path, const Array& plane) {
        const DenoiserModel model = load_model(model_path);
        if (model.metadata.mode == DenoiseMode::Sinogram) {
          return sinogram_array(denoise(model, sinogram_from(plane, 1.0, SinogramStage::IntensityLoss)));
        }
        return image_array(denoise(model, image_from(plane, 1.0)));
      },
      py::arg("model_path"), py::arg("plane"),
      "Applies a saved model to an intensity-loss sinogram or a reconstruction.");

  m.def(
      "canonical_config",
      [](const std::string& text) { return config_to_text(parse_config(text)); },
      py::arg("text") = "", "Every config key with its value after applying `text`.");

  m.def(
      "calibrate",
      [](const std::string& text) {
        const CalibrationResult r = calibrate_noise_level(parse_config(text));
        py::list rows;
        for (const auto& row : r.table) {
          py::dict d;
          d["noise_arm"] = row.noise_arm;
          d["i0"] = row.i0;
          d["domain"] = row.domain;
          d["metric"] = row.metric;
          d["mean"] = row.value.mean;
          d["std"] = row.value.std;
          rows.append(d);
        }
        return py::make_tuple(r.chosen_i0, rows);
      },
      py::arg("config_text"), "(chosen I0, calibration rows)");

  m.def(
      "run_study",
      [](const std::string& text) {
        const StudyConfig config = parse_config(text);
        StudyReport report;
        {
          py::gil_scoped_release release;
          report = run_study(config);
          emit_report(report, config.output_dir);
        }
        py::list checks;
        for (const auto& c : check_orderings(report)) checks.append(py::make_tuple(c.description, c.held));
        return py::make_tuple(report_summary(report), checks);
      },
      py::arg("config_text"), "Runs a full study, writes the report, returns (summary, orderings).");
}
