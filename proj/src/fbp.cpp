#include "sim2real/fbp.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

namespace sim2real {

namespace {

// FFTW plans for one transform length. Planning is not thread-safe in FFTW
// and is serialized here; executing a plan on fresh arrays is.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    auto* in = fftw_alloc_real(n);
    auto* out = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, in, out, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(len, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
  ~RealFft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
  void inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inverse_, in, out); }

 private:
  std::size_t n_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

const RealFft& fft_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

struct FftwBuffers {
  explicit FftwBuffers(std::size_t n)
      : real(fftw_alloc_real(n)), spectrum(fftw_alloc_complex(n / 2 + 1)) {}
  ~FftwBuffers() {
    fftw_free(real);
    fftw_free(spectrum);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;
  double* real;
  fftw_complex* spectrum;
};

double window(FbpFilter filter, double f) {  // f in cycles/sample, [0, 0.5]
  switch (filter) {
    case FbpFilter::RamLak:
      return 1.0;
    case FbpFilter::SheppLogan:
      return f == 0.0 ? 1.0 : std::sin(kPi * f) / (kPi * f);
    case FbpFilter::Hann:
      return 0.5 * (1.0 + std::cos(2.0 * kPi * f));
  }
  return 1.0;
}

}  // namespace

const char* to_string(FbpFilter filter) {
  switch (filter) {
    case FbpFilter::RamLak:
      return "ramlak";
    case FbpFilter::SheppLogan:
      return "shepp-logan";
    case FbpFilter::Hann:
      return "hann";
  }
  return "unknown";
}

FbpFilter fbp_filter_from_string(const std::string& s) {
  if (s == "ramlak" || s == "ram-lak") return FbpFilter::RamLak;
  if (s == "shepp-logan" || s == "shepplogan") return FbpFilter::SheppLogan;
  if (s == "hann") return FbpFilter::Hann;
  throw ValidationError("unknown FBP filter '" + s + "'");
}

std::size_t FbpConfig::padded_length_for(std::size_t n_pixels) const {
  if (padded_length != 0) {
    if (padded_length < n_pixels || padded_length % 2 != 0) {
      throw ValidationError("FBP padding must be even and at least the row length");
    }
    return padded_length;
  }
  std::size_t n = 1;
  while (n < 2 * n_pixels) n <<= 1;
  return n;
}

RampFilter::RampFilter(std::size_t n_pixels, double det_pixel_size_mm, const FbpConfig& config)
    : n_pixels_(n_pixels),
      padded_(config.padded_length_for(n_pixels)),
      tau_(det_pixel_size_mm) {
  if (n_pixels_ < 1 || !(tau_ > 0.0)) {
    throw ValidationError("ramp filter needs a non-empty row and positive pixel size");
  }
  const std::size_t n = padded_;
  const std::size_t half = n / 2;
  std::vector<double> kernel(n, 0.0);
  kernel[0] = 0.25 / (tau_ * tau_);
  double sum = kernel[0];
  for (std::size_t k = 1; k < half; ++k) {
    if (k % 2 == 1) {
      const double v = -1.0 / (kPi * kPi * static_cast<double>(k * k) * tau_ * tau_);
      kernel[k] = v;
      kernel[n - k] = v;
      sum += 2.0 * v;
    }
  }
  kernel[half] = -sum;

  const RealFft& fft = fft_for(n);
  FftwBuffers buf(n);
  std::copy(kernel.begin(), kernel.end(), buf.real);
  fft.forward(buf.real, buf.spectrum);
  response_.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(n);
    response_[k] = buf.spectrum[k][0] * window(config.filter, f);
  }
  response_[0] = 0.0;
}

std::vector<double> RampFilter::apply(std::span<const double> row) const {
  if (row.size() != n_pixels_) throw ValidationError("ramp filter row length mismatch");
  const std::size_t n = padded_;
  const RealFft& fft = fft_for(n);
  FftwBuffers buf(n);
  std::copy(row.begin(), row.end(), buf.real);
  // Repeat the end values: the tail continues the last sample up to the
  // midpoint of the padding, then the first sample wraps around.
  const std::size_t pad = n - n_pixels_;
  for (std::size_t i = 0; i < pad; ++i) {
    buf.real[n_pixels_ + i] = i < pad / 2 ? row.back() : row.front();
  }
  fft.forward(buf.real, buf.spectrum);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    buf.spectrum[k][0] *= response_[k];
    buf.spectrum[k][1] *= response_[k];
  }
  fft.inverse(buf.spectrum, buf.real);
  // c2r is unnormalized; the tau factor is the convolution's sample spacing.
  const double scale = tau_ / static_cast<double>(n);
  std::vector<double> out(n_pixels_);
  for (std::size_t i = 0; i < n_pixels_; ++i) out[i] = buf.real[i] * scale;
  return out;
}

std::vector<double> ramp_filter_row(std::span<const double> row, double det_pixel_size_mm,
                                    const FbpConfig& config) {
  return RampFilter(row.size(), det_pixel_size_mm, config).apply(row);
}

Image2D fbp_reconstruct(const Sinogram& sino, const FbpConfig& config) {
  if (sino.stage() != SinogramStage::Absorption) {
    throw ValidationError("FBP expects an absorption sinogram");
  }
  const std::size_t na = sino.n_angles();
  const std::size_t np = sino.n_pixels();
  const RampFilter filter(np, sino.det_pixel_size_mm(), config);
  std::vector<double> filtered(na * np);
  parallel_for(na, [&](std::size_t a) {
    const auto q = filter.apply(sino.row(a));
    std::copy(q.begin(), q.end(), filtered.begin() + static_cast<std::ptrdiff_t>(a * np));
  });

  const Image2D grid(config.width, config.height, config.pixel_size_mm);
  std::vector<double> cos_t(na), sin_t(na);
  for (std::size_t a = 0; a < na; ++a) {
    cos_t[a] = std::cos(sino.angles_rad()[a]);
    sin_t[a] = std::sin(sino.angles_rad()[a]);
  }
  const double inv_tau = 1.0 / sino.det_pixel_size_mm();
  const double centre = 0.5 * static_cast<double>(np - 1);
  const double scale = kPi / static_cast<double>(na);
  std::vector<double> image(config.width * config.height, 0.0);
  parallel_for(config.height, [&](std::size_t r) {
    const double y = grid.y_mm(r);
    double* out = &image[r * config.width];
    for (std::size_t a = 0; a < na; ++a) {
      const double* q = &filtered[a * np];
      const double base = y * sin_t[a] * inv_tau + centre;
      const double slope = cos_t[a] * inv_tau;
      for (std::size_t c = 0; c < config.width; ++c) {
        const double u = base + grid.x_mm(c) * slope;
        const double fl = std::floor(u);
        const auto i = static_cast<std::ptrdiff_t>(fl);
        if (i < -1 || i >= static_cast<std::ptrdiff_t>(np)) continue;
        const double w = u - fl;
        const double left = i >= 0 ? q[i] : 0.0;
        const double right = i + 1 < static_cast<std::ptrdiff_t>(np) ? q[i + 1] : 0.0;
        out[c] += (1.0 - w) * left + w * right;
      }
    }
    for (std::size_t c = 0; c < config.width; ++c) out[c] *= scale;
  });
  return Image2D(config.width, config.height, config.pixel_size_mm, std::move(image));
}

}  // namespace sim2real
