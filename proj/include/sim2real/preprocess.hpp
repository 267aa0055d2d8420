#pragma once

#include "sim2real/core.hpp"
#include "sim2real/detector.hpp"

namespace sim2real {

/// Floor applied to intensity-loss values before the logarithm.
inline constexpr double kIntensityLossFloor = 1e-6;

/// ILI = (S - D) / (F - D), with values below kIntensityLossFloor raised to
/// the floor. Values above one (noise over the flat-field level) are kept.
Sinogram to_intensity_loss(const Sinogram& raw, const DetectorConfig& config);

/// Raises intensity-loss values below kIntensityLossFloor to the floor.
/// Used on sinograms that did not come through to_intensity_loss, such as
/// synthesized or denoised ones, before taking the logarithm.
Sinogram clamp_intensity_loss(const Sinogram& ili);

/// y = -ln(ILI).
Sinogram negative_log(const Sinogram& ili);

}  // namespace sim2real
