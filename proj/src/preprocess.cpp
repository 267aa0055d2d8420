#include "sim2real/preprocess.hpp"

#include <cmath>

namespace sim2real {

Sinogram to_intensity_loss(const Sinogram& raw, const DetectorConfig& config) {
  if (raw.stage() != SinogramStage::RawCounts) {
    throw ValidationError("to_intensity_loss expects a raw-counts sinogram");
  }
  const std::size_t np = raw.n_pixels();
  config.validate(np);
  std::vector<double> out(raw.data().size());
  for (std::size_t a = 0; a < raw.n_angles(); ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      const double v = (raw.at(a, p) - config.dark[p]) / (config.flat[p] - config.dark[p]);
      out[a * np + p] = v < kIntensityLossFloor ? kIntensityLossFloor : v;
    }
  }
  return Sinogram::with_layout_of(raw, SinogramStage::IntensityLoss, std::move(out));
}

Sinogram clamp_intensity_loss(const Sinogram& ili) {
  if (ili.stage() != SinogramStage::IntensityLoss) {
    throw ValidationError("clamp_intensity_loss expects an intensity-loss sinogram");
  }
  std::vector<double> out(ili.data().begin(), ili.data().end());
  for (auto& v : out) {
    if (v < kIntensityLossFloor) v = kIntensityLossFloor;
  }
  return Sinogram::with_layout_of(ili, SinogramStage::IntensityLoss, std::move(out));
}

Sinogram negative_log(const Sinogram& ili) {
  if (ili.stage() != SinogramStage::IntensityLoss) {
    throw ValidationError("negative_log expects an intensity-loss sinogram");
  }
  std::vector<double> out(ili.data().size());
  const auto in = ili.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!(in[i] > 0.0)) {
      throw ValidationError("negative_log of a non-positive intensity-loss value");
    }
    out[i] = -std::log(in[i]);
  }
  return Sinogram::with_layout_of(ili, SinogramStage::Absorption, std::move(out));
}

}  // namespace sim2real
