#include "sim2real/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "sim2real/preprocess.hpp"

namespace sim2real {

const char* to_string(RangePolicy policy) {
  return policy == RangePolicy::Fixed ? "fixed" : "reference-minmax";
}

RangePolicy range_policy_from_string(const std::string& s) {
  if (s == "fixed") return RangePolicy::Fixed;
  if (s == "reference-minmax" || s == "minmax") return RangePolicy::ReferenceMinMax;
  throw ValidationError("unknown range policy '" + s + "'");
}

void MetricConfig::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw ValidationError("SSIM constants must be positive");
  if (window < 1 || window % 2 == 0) throw ValidationError("SSIM window must be odd");
  if (!(gaussian_sigma > 0.0)) throw ValidationError("SSIM sigma must be positive");
  if (range == RangePolicy::Fixed && !(fixed_range > 0.0)) {
    throw ValidationError("fixed dynamic range must be positive");
  }
}

double MetricConfig::dynamic_range(std::span<const double> reference) const {
  if (range == RangePolicy::Fixed) return fixed_range;
  const auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
  const double r = *hi - *lo;
  if (!(r > 0.0)) throw ValidationError("reference has zero dynamic range");
  return r;
}

namespace {

void check_same_shape(const PlaneView& a, const PlaneView& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.data.size() != b.data.size()) {
    throw ValidationError("metric inputs differ in dimensions");
  }
}

std::vector<double> gaussian_taps(std::size_t window, double sigma) {
  std::vector<double> taps(window);
  const double half = 0.5 * static_cast<double>(window - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double d = static_cast<double>(i) - half;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// Valid-mode separable filtering: output is (rows - w + 1) x (cols - w + 1).
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t rows,
                                 std::size_t cols, const std::vector<double>& taps) {
  const std::size_t w = taps.size();
  const std::size_t out_rows = rows - w + 1;
  const std::size_t out_cols = cols - w + 1;
  std::vector<double> horiz(rows * out_cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < w; ++k) s += taps[k] * in[r * cols + c + k];
      horiz[r * out_cols + c] = s;
    }
  }
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t k = 0; k < w; ++k) {
      const double t = taps[k];
      const double* src = &horiz[(r + k) * out_cols];
      double* dst = &out[r * out_cols];
      for (std::size_t c = 0; c < out_cols; ++c) dst[c] += t * src[c];
    }
  }
  return out;
}

}  // namespace

double psnr(PlaneView test, PlaneView reference, const MetricConfig& config) {
  check_same_shape(test, reference);
  config.validate();
  const double peak = config.dynamic_range(reference.data);
  double sse = 0.0;
  for (std::size_t i = 0; i < test.data.size(); ++i) {
    const double d = test.data[i] - reference.data[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(test.data.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(PlaneView test, PlaneView reference, const MetricConfig& config) {
  check_same_shape(test, reference);
  config.validate();
  const std::size_t w = config.window;
  if (test.rows < w || test.cols < w) {
    throw ValidationError("SSIM inputs are smaller than the window");
  }
  const double range = config.dynamic_range(reference.data);
  const double c1 = (config.k1 * range) * (config.k1 * range);
  const double c2 = (config.k2 * range) * (config.k2 * range);
  const auto taps = gaussian_taps(w, config.gaussian_sigma);

  const std::size_t n = test.data.size();
  std::vector<double> x(test.data.begin(), test.data.end());
  std::vector<double> y(reference.data.begin(), reference.data.end());
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, test.rows, test.cols, taps);
  const auto my = filter_valid(y, test.rows, test.cols, taps);
  const auto mxx = filter_valid(xx, test.rows, test.cols, taps);
  const auto myy = filter_valid(yy, test.rows, test.cols, taps);
  const auto mxy = filter_valid(xy, test.rows, test.cols, taps);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cov = mxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

Aggregate aggregate(std::span<const double> values) {
  Aggregate out;
  double sum = 0.0;
  for (double v : values) {
    if (std::isinf(v)) {
      ++out.excluded;
      continue;
    }
    sum += v;
    ++out.n;
  }
  if (out.n == 0) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.std = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = sum / static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) {
      if (!std::isinf(v)) ss += (v - out.mean) * (v - out.mean);
    }
    out.std = std::sqrt(ss / static_cast<double>(out.n - 1));
  }
  return out;
}

Image2D reconstruct_intensity_loss(const Sinogram& ili, const FbpConfig& fbp_config) {
  return fbp_reconstruct(negative_log(clamp_intensity_loss(ili)), fbp_config);
}

PairEvaluation evaluate_pair_in_both_domains(const Sinogram& test_ili,
                                             const Sinogram& clean_ili,
                                             const FbpConfig& fbp_config,
                                             const MetricConfig& metric_config) {
  if (test_ili.stage() != SinogramStage::IntensityLoss ||
      clean_ili.stage() != SinogramStage::IntensityLoss) {
    throw ValidationError("evaluation expects intensity-loss sinograms");
  }
  if (test_ili.n_angles() != clean_ili.n_angles() ||
      test_ili.n_pixels() != clean_ili.n_pixels() ||
      test_ili.det_pixel_size_mm() != clean_ili.det_pixel_size_mm()) {
    throw ValidationError("evaluated sinograms have different geometry");
  }
  PairEvaluation out;
  out.sinogram.psnr = psnr(test_ili, clean_ili, metric_config);
  out.sinogram.ssim = ssim(test_ili, clean_ili, metric_config);
  const Image2D test_recon = reconstruct_intensity_loss(test_ili, fbp_config);
  const Image2D clean_recon = reconstruct_intensity_loss(clean_ili, fbp_config);
  out.recon.psnr = psnr(test_recon, clean_recon, metric_config);
  out.recon.ssim = ssim(test_recon, clean_recon, metric_config);
  return out;
}

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_value(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

std::string metric_records_to_csv(const std::vector<MetricRecord>& records) {
  std::string out = "slice_id,domain,metric,value\n";
  for (const auto& r : records) {
    out += r.slice_id + "," + r.domain + "," + r.metric + "," + format_value(r.value) + "\n";
  }
  return out;
}

std::vector<MetricRecord> metric_records_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "slice_id,domain,metric,value") {
    throw ValidationError("metric CSV is missing its header row");
  }
  std::vector<MetricRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    MetricRecord r;
    std::string value;
    if (!std::getline(ls, r.slice_id, ',') || !std::getline(ls, r.domain, ',') ||
        !std::getline(ls, r.metric, ',') || !std::getline(ls, value)) {
      throw ValidationError("malformed metric CSV line: " + line);
    }
    r.value = parse_value(value);
    out.push_back(std::move(r));
  }
  return out;
}

void write_metric_csv(const std::filesystem::path& path,
                      const std::vector<MetricRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << metric_records_to_csv(records);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sim2real
