#include "sim2real/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace sim2real {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw ValidationError(std::string(what) + " contains a non-finite value");
    }
  }
}

Image2D::Image2D(std::size_t width, std::size_t height, double pixel_size_mm)
    : Image2D(width, height, pixel_size_mm,
              std::vector<double>(width * height, 0.0)) {}

Image2D::Image2D(std::size_t width, std::size_t height, double pixel_size_mm,
                 std::vector<double> data)
    : width_(width),
      height_(height),
      pixel_size_mm_(pixel_size_mm),
      data_(std::move(data)) {
  if (width_ < 1 || height_ < 1) {
    throw ValidationError("image dimensions must be at least 1x1");
  }
  if (!(pixel_size_mm_ > 0.0) || !std::isfinite(pixel_size_mm_)) {
    throw ValidationError("image pixel size must be positive");
  }
  if (data_.size() != width_ * height_) {
    throw ValidationError("image data length does not match width*height");
  }
  require_finite(data_, "image");
}

double Image2D::x_mm(std::size_t col) const {
  return (static_cast<double>(col) - 0.5 * static_cast<double>(width_ - 1)) *
         pixel_size_mm_;
}

double Image2D::y_mm(std::size_t row) const {
  return (0.5 * static_cast<double>(height_ - 1) - static_cast<double>(row)) *
         pixel_size_mm_;
}

const char* to_string(SinogramStage stage) {
  switch (stage) {
    case SinogramStage::RawCounts:
      return "raw-counts";
    case SinogramStage::IntensityLoss:
      return "intensity-loss";
    case SinogramStage::Absorption:
      return "absorption";
  }
  return "unknown";
}

std::vector<double> half_turn_angles(std::size_t n_angles) {
  std::vector<double> angles(n_angles);
  for (std::size_t i = 0; i < n_angles; ++i) {
    angles[i] = kPi * static_cast<double>(i) / static_cast<double>(n_angles);
  }
  return angles;
}

Sinogram::Sinogram(std::vector<double> angles_rad, std::size_t n_pixels,
                   double det_pixel_size_mm, SinogramStage stage,
                   std::vector<double> data)
    : angles_(std::move(angles_rad)),
      n_pixels_(n_pixels),
      det_pixel_size_mm_(det_pixel_size_mm),
      stage_(stage),
      data_(std::move(data)) {
  if (angles_.empty() || n_pixels_ < 1) {
    throw ValidationError("sinogram needs at least one angle and one pixel");
  }
  if (!(det_pixel_size_mm_ > 0.0) || !std::isfinite(det_pixel_size_mm_)) {
    throw ValidationError("detector pixel size must be positive");
  }
  for (std::size_t i = 0; i < angles_.size(); ++i) {
    const double a = angles_[i];
    if (!(a >= 0.0 && a < kPi)) {
      throw ValidationError("sinogram angles must lie in [0, pi)");
    }
    if (i > 0 && !(a > angles_[i - 1])) {
      throw ValidationError("sinogram angles must be strictly increasing");
    }
  }
  if (data_.size() != angles_.size() * n_pixels_) {
    throw ValidationError("sinogram data length does not match angles*pixels");
  }
  require_finite(data_, "sinogram");
  // Raw counts may dip below zero where electronic noise dominates; the
  // clamp happens in preprocessing.
  if (stage_ == SinogramStage::IntensityLoss) {
    for (double v : data_) {
      if (v < 0.0) {
        throw ValidationError("intensity-loss sinogram values must be non-negative");
      }
    }
  }
}

Sinogram Sinogram::with_layout_of(const Sinogram& like, SinogramStage stage,
                                  std::vector<double> data) {
  return Sinogram(like.angles_, like.n_pixels_, like.det_pixel_size_mm_, stage,
                  std::move(data));
}

double Sinogram::offset_mm(std::size_t pixel) const {
  return (static_cast<double>(pixel) - 0.5 * static_cast<double>(n_pixels_ - 1)) *
         det_pixel_size_mm_;
}

namespace {

std::size_t initial_threads() {
  if (const char* env = std::getenv("SIM2REAL_CT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> n{initial_threads()};
  return n;
}

}  // namespace

void set_num_threads(std::size_t n) { thread_setting() = n == 0 ? 1 : n; }

std::size_t num_threads() { return thread_setting(); }

namespace {
thread_local bool inside_worker = false;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  // Nested loops run serially on the calling worker.
  const std::size_t workers = inside_worker ? 1 : std::min(num_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      inside_worker = true;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sim2real
