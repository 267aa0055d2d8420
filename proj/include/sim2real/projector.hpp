#pragma once

#include <cstddef>
#include <vector>

#include "sim2real/core.hpp"
#include "sim2real/phantom.hpp"

namespace sim2real {

/// Parallel-beam scan over a half turn.
struct ScanGeometry {
  std::size_t n_angles = 360;
  std::size_t n_pixels = 363;
  double det_pixel_size_mm = 0.5;
  double fov_radius_mm = 64.0;

  /// Throws ValidationError unless the detector covers the field of view.
  void validate() const;
  std::vector<double> angles() const { return half_turn_angles(n_angles); }
  double offset_mm(std::size_t pixel) const;
};

/// Energy bins of a polychromatic source and the detector's response to
/// them. A single bin with dqe = 1, f_conv = 1, scatter = 0 is the
/// monochromatic photon-counting model.
struct SpectrumConfig {
  std::vector<double> energies_keV{kReferenceEnergyKeV};
  std::vector<double> weights{1.0};
  std::vector<double> dqe{1.0};
  double f_conv = 1.0;
  double scatter_fraction = 0.0;

  static SpectrumConfig monochromatic(double energy_keV);
  std::size_t bins() const { return energies_keV.size(); }
  bool is_monochromatic() const { return bins() == 1; }
  void validate() const;
  /// Expected detector signal in vacuum per incident photon:
  /// f_conv * sum_k E_k * dqe_k * w_k.
  double vacuum_signal_per_photon() const;
};

/// Per-bin expected photon counts, laid out [angle][pixel][bin].
struct ExpectedCounts {
  std::size_t n_angles = 0;
  std::size_t n_pixels = 0;
  std::size_t bins = 0;
  std::vector<double> values;
  double det_pixel_size_mm = 1.0;

  double at(std::size_t angle, std::size_t pixel, std::size_t bin) const {
    return values[(angle * n_pixels + pixel) * bins + bin];
  }
};

/// Per-ellipse chord lengths for every detector ray of a geometry. These do
/// not depend on energy, so one table serves every bin of a spectrum.
class ChordTable {
 public:
  ChordTable(const Phantom& phantom, const ScanGeometry& geometry, double step_mm);

  /// Line integral of ray (angle, pixel) at the given energy.
  double line_integral(std::size_t angle, std::size_t pixel, double energy_keV) const;
  const ScanGeometry& geometry() const { return geometry_; }

 private:
  Phantom phantom_;
  ScanGeometry geometry_;
  // For each ray, (ellipse index, chord length) pairs for the ellipses it hits.
  std::vector<std::size_t> ray_begin_;
  std::vector<std::pair<std::size_t, double>> hits_;
};

/// Numerical chord length of one ellipse along a ray: the ray is marched in
/// steps of `step_mm` across the ellipse's bounding circle, and each
/// inside/outside transition is refined by bisection on the ellipse's
/// implicit equation.
double marched_chord_length(const Ellipse& ellipse, const Ray& ray, double step_mm);

/// Ray-marched line integral of attenuation through the phantom.
double ray_driven_integral(const Phantom& phantom, const Ray& ray, double energy_keV,
                           double step_mm);

/// Default marching step: a quarter detector pixel.
double default_step_mm(const ScanGeometry& geometry);

/// exp(-line integral) per detector ray; IntensityLoss stage, values in (0, 1].
Sinogram forward_project_mono(const Phantom& phantom, const ScanGeometry& geometry,
                              double energy_keV);
Sinogram forward_project_mono(const ChordTable& chords, double energy_keV);

/// A_ik = I0 * w_k * (exp(-line integral at E_k) * (1 - s) + s).
ExpectedCounts expected_counts_poly(const Phantom& phantom, const ScanGeometry& geometry,
                                    const SpectrumConfig& spectrum, double i0_total);
ExpectedCounts expected_counts_poly(const ChordTable& chords,
                                    const SpectrumConfig& spectrum, double i0_total);

/// Effective attenuation -log(sum_k w_k exp(-mu(E_k) L)) / L of a path of
/// length L through one material.
double effective_attenuation(const Material& material, const SpectrumConfig& spectrum,
                             double path_mm);

}  // namespace sim2real
