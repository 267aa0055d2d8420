#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sim2real/core.hpp"
#include "sim2real/projector.hpp"
#include "sim2real/rng.hpp"

namespace sim2real {

/// Detector noise and calibration parameters.
///
/// `flat` and `dark` are per-detector-pixel maps in the detector's signal
/// units; the same maps apply to every projection angle.
struct DetectorConfig {
  double i0 = 1000.0;
  double sigma_electronic = 0.0;
  double sigma_cross_talk = 0.0;
  std::vector<double> flat;
  std::vector<double> dark;

  /// Flat = dark + gain * vacuum_signal for every pixel.
  static DetectorConfig uniform(std::size_t n_pixels, double i0, double vacuum_signal,
                                double dark_level, double sigma_electronic,
                                double sigma_cross_talk);
  void validate(std::size_t n_pixels) const;
};

/// Tube and protocol settings that set the quantum noise level.
struct AcquisitionParams {
  double tube_voltage_kV = 1.0;
  double tube_current_uA = 1.0;
  double exposure_time_ms = 1.0;
  double n_proj = 1.0;
  double n_avim = 1.0;
};

/// Relative noise level V^1.3 / sqrt(I * t * n_proj * n_avim).
double dose_noise_factor(const AcquisitionParams& params);

/// Poisson variate with mean lambda. Exact inversion below
/// kPoissonExactLimit, rounded moment-matched Gaussian (clamped at zero)
/// at and above it.
inline constexpr double kPoissonExactLimit = 60.0;
double poisson_sample(double lambda, RandomStream& stream);

/// Tridiagonal cross-talk: kernel [s/2, 1 - s, s/2]; an edge pixel keeps
/// the share that would leak past the detector end, so the operator is
/// doubly stochastic (constants and sums are both preserved).
std::vector<double> cross_talk_apply(std::span<const double> row, double sigma_cross_talk);

struct MeasureOptions {
  double sigma_electronic = 0.0;
  double sigma_cross_talk = 0.0;
  std::uint32_t purpose = static_cast<std::uint32_t>(RngPurpose::SurrogateMeasurement);
};

/// Energy-integrating measurement of expected per-bin photon counts:
///   I_i = f_conv * sum_k E_k * Poisson(dqe_k * A_ik) + N(0, sigma_electronic)
/// followed by cross-talk along each detector row. The output may contain
/// negative values where electronic noise dominates.
Sinogram measure(const ExpectedCounts& expected, const SpectrumConfig& spectrum,
                 const MeasureOptions& options, const SeededRng& rng);

struct SynthesisOptions {
  /// Additive electronic term on the synthesized noise, in counts.
  double sigma_electronic = 0.0;
  /// Also pass the clean signal through the cross-talk operator.
  bool cross_talk_on_clean = false;
  std::uint32_t purpose = static_cast<std::uint32_t>(RngPurpose::SimulatedNoise);
};

/// Noisy counterpart of a clean intensity-loss sinogram:
///   P_i = I0 * ILI_i - Poisson(I0 * ILI_i)
///   ILI_noisy = ILI_clean + Gamma[P] / I0
/// Results below zero are clamped to zero.
Sinogram synthesize_noisy_pair(const Sinogram& clean_ili, double i0,
                               double sigma_cross_talk, const SeededRng& rng,
                               const SynthesisOptions& options = {});

/// Raw detector frames from an ideal intensity-loss sinogram:
/// S = D + (F - D) * ILI, optionally measured with Poisson, electronic and
/// cross-talk noise (monochromatic photon counting).
Sinogram apply_flat_dark(const Sinogram& ideal_ili, const DetectorConfig& config,
                         const SeededRng& rng, bool noisy);

/// Raw frames of a polychromatic acquisition: S = D + g * measure(A), with
/// per-pixel gain g chosen so that vacuum maps to the flat field.
Sinogram acquire_polychromatic(const ExpectedCounts& expected,
                               const SpectrumConfig& spectrum,
                               const DetectorConfig& config, const SeededRng& rng,
                               std::uint32_t purpose);

/// Flat and dark maps as a scanner calibration records them: the per-pixel
/// mean of `n_frames` noisy vacuum frames and of `n_frames` source-off
/// frames acquired with `truth`. The estimation error is a fixed per-pixel
/// bias shared by every projection corrected with the result.
DetectorConfig measured_calibration(const DetectorConfig& truth, const SpectrumConfig& spectrum,
                                    std::size_t n_frames, const SeededRng& rng);

}  // namespace sim2real
