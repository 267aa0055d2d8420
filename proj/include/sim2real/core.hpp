#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sim2real {

// Error hierarchy. The CLI maps ValidationError to exit code 1 and IoError
// (including every FormatError) to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class SizeMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

inline constexpr double kPi = 3.14159265358979323846;

/// Throws ValidationError if any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

/// Dense scalar field on a square pixel grid, row-major, row 0 at the top.
///
/// Pixel (row, col) has its center at
///   x = (col - (width - 1) / 2) * pixel_size_mm
///   y = ((height - 1) / 2 - row) * pixel_size_mm
/// which is the convention shared by rasterization and backprojection.
class Image2D {
 public:
  Image2D(std::size_t width, std::size_t height, double pixel_size_mm);
  Image2D(std::size_t width, std::size_t height, double pixel_size_mm,
          std::vector<double> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double pixel_size_mm() const { return pixel_size_mm_; }
  std::span<const double> data() const { return data_; }
  double at(std::size_t row, std::size_t col) const {
    return data_[row * width_ + col];
  }
  double x_mm(std::size_t col) const;
  double y_mm(std::size_t row) const;

 private:
  std::size_t width_;
  std::size_t height_;
  double pixel_size_mm_;
  std::vector<double> data_;
};

enum class SinogramStage : std::uint8_t {
  RawCounts = 0,
  IntensityLoss = 1,
  Absorption = 2,
};

const char* to_string(SinogramStage stage);

/// Angles uniformly covering [0, pi) without the endpoint.
std::vector<double> half_turn_angles(std::size_t n_angles);

/// Angles x detector-pixels array with an explicit processing stage.
///
/// There is no way to change the stage of an existing sinogram. New stages
/// are produced by constructing a fresh object, which re-validates the
/// stage invariants (IntensityLoss values are non-negative).
class Sinogram {
 public:
  Sinogram(std::vector<double> angles_rad, std::size_t n_pixels,
           double det_pixel_size_mm, SinogramStage stage,
           std::vector<double> data);

  /// Same geometry as `like`, new stage and payload.
  static Sinogram with_layout_of(const Sinogram& like, SinogramStage stage,
                                 std::vector<double> data);

  std::size_t n_angles() const { return angles_.size(); }
  std::size_t n_pixels() const { return n_pixels_; }
  double det_pixel_size_mm() const { return det_pixel_size_mm_; }
  SinogramStage stage() const { return stage_; }
  std::span<const double> angles_rad() const { return angles_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t angle) const {
    return std::span<const double>(data_).subspan(angle * n_pixels_, n_pixels_);
  }
  double at(std::size_t angle, std::size_t pixel) const {
    return data_[angle * n_pixels_ + pixel];
  }
  /// Detector coordinate (mm) of the center of pixel `pixel`.
  double offset_mm(std::size_t pixel) const;

 private:
  std::vector<double> angles_;
  std::size_t n_pixels_;
  double det_pixel_size_mm_;
  SinogramStage stage_;
  std::vector<double> data_;
};

// Worker-thread control. Every parallel loop in the library partitions work
// statically and writes results by index, so output never depends on the
// thread count.
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Runs body(i) for i in [0, n). Exceptions from workers are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sim2real
