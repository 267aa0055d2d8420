#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sim2real/core.hpp"
#include "sim2real/fbp.hpp"

namespace sim2real {

enum class RangePolicy { ReferenceMinMax, Fixed };

const char* to_string(RangePolicy policy);
RangePolicy range_policy_from_string(const std::string& s);

struct MetricConfig {
  std::size_t window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  RangePolicy range = RangePolicy::ReferenceMinMax;
  double fixed_range = 1.0;

  void validate() const;
  /// Peak value L used by PSNR and the SSIM stability constants.
  double dynamic_range(std::span<const double> reference) const;
};

/// Read-only row-major 2D view; both Image2D and Sinogram convert to it.
struct PlaneView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  PlaneView(std::span<const double> d, std::size_t r, std::size_t c)
      : data(d), rows(r), cols(c) {}
  PlaneView(const Image2D& img)  // NOLINT(google-explicit-constructor)
      : data(img.data()), rows(img.height()), cols(img.width()) {}
  PlaneView(const Sinogram& s)  // NOLINT(google-explicit-constructor)
      : data(s.data()), rows(s.n_angles()), cols(s.n_pixels()) {}
};

/// 10 log10(L^2 / MSE) in dB; +infinity when the inputs are identical.
double psnr(PlaneView test, PlaneView reference, const MetricConfig& config = {});

/// Mean of the local SSIM map over all fully-contained Gaussian windows.
double ssim(PlaneView test, PlaneView reference, const MetricConfig& config = {});

/// Mean and sample standard deviation over finite values. Infinite PSNR
/// sentinels are counted in `excluded` and left out of the statistics.
struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  std::size_t excluded = 0;
};

Aggregate aggregate(std::span<const double> values);

struct DomainScores {
  double psnr = 0.0;
  double ssim = 0.0;
};

struct PairEvaluation {
  DomainScores sinogram;
  DomainScores recon;
};

/// Scores an intensity-loss sinogram against a clean one, directly and
/// after FBP of both negative-log transforms.
PairEvaluation evaluate_pair_in_both_domains(const Sinogram& test_ili,
                                             const Sinogram& clean_ili,
                                             const FbpConfig& fbp_config,
                                             const MetricConfig& metric_config);

/// FBP of -log of an intensity-loss sinogram (floored before the log).
Image2D reconstruct_intensity_loss(const Sinogram& ili, const FbpConfig& fbp_config);

struct MetricRecord {
  std::string slice_id;
  std::string domain;
  std::string metric;
  double value = 0.0;
};

/// CSV with header "slice_id,domain,metric,value"; values in %.17g.
std::string metric_records_to_csv(const std::vector<MetricRecord>& records);
std::vector<MetricRecord> metric_records_from_csv(const std::string& csv);
void write_metric_csv(const std::filesystem::path& path,
                      const std::vector<MetricRecord>& records);

/// Formats a double for CSV output; infinities print as "inf" / "-inf".
std::string format_value(double v);
double parse_value(const std::string& s);

}  // namespace sim2real
