#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sim2real/core.hpp"

namespace sim2real {

enum class FbpFilter { RamLak, SheppLogan, Hann };

const char* to_string(FbpFilter filter);
FbpFilter fbp_filter_from_string(const std::string& s);

struct FbpConfig {
  FbpFilter filter = FbpFilter::RamLak;
  /// FFT length; 0 picks the next power of two at or above 2 * n_pixels.
  std::size_t padded_length = 0;
  std::size_t width = 256;
  std::size_t height = 256;
  double pixel_size_mm = 0.5;

  std::size_t padded_length_for(std::size_t n_pixels) const;
};

/// Frequency-domain ramp filter for rows of a fixed length.
///
/// The response is the DFT of the closed-form band-limited spatial kernel
///   h(0) = 1 / (4 tau^2),  h(odd n) = -1 / (pi n tau)^2,  h(even n) = 0
/// over |n| < N/2, with the single lag n = N/2 set so that the kernel sums to
/// zero. Lags that can reach another sample of the row are untouched, so the
/// filter equals direct convolution with h while its DC response is exactly
/// zero. Rows are extended by repeating their end values.
class RampFilter {
 public:
  RampFilter(std::size_t n_pixels, double det_pixel_size_mm, const FbpConfig& config);

  std::size_t n_pixels() const { return n_pixels_; }
  std::size_t padded_length() const { return padded_; }
  /// Real frequency response for bins 0..N/2.
  std::span<const double> response() const { return response_; }

  /// Filtered row, scaled by tau (the convolution's sample spacing).
  std::vector<double> apply(std::span<const double> row) const;

 private:
  std::size_t n_pixels_;
  std::size_t padded_;
  double tau_;
  std::vector<double> response_;
};

/// Convenience wrapper around RampFilter for a single row.
std::vector<double> ramp_filter_row(std::span<const double> row, double det_pixel_size_mm,
                                    const FbpConfig& config);

/// Parallel-beam filtered backprojection of an absorption sinogram:
/// ramp-filter each row, backproject with linear interpolation and scale by
/// pi / n_angles.
Image2D fbp_reconstruct(const Sinogram& absorption, const FbpConfig& config);

}  // namespace sim2real
