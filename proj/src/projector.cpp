#include "sim2real/projector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sim2real {

void ScanGeometry::validate() const {
  if (n_angles < 1 || n_pixels < 1) {
    throw ValidationError("scan geometry needs at least one angle and one pixel");
  }
  if (!(det_pixel_size_mm > 0.0) || !(fov_radius_mm > 0.0)) {
    throw ValidationError("detector pixel size and field of view must be positive");
  }
  if (static_cast<double>(n_pixels) * det_pixel_size_mm < 2.0 * fov_radius_mm) {
    throw ValidationError("detector span is smaller than the field of view");
  }
}

double ScanGeometry::offset_mm(std::size_t pixel) const {
  return (static_cast<double>(pixel) - 0.5 * static_cast<double>(n_pixels - 1)) *
         det_pixel_size_mm;
}

SpectrumConfig SpectrumConfig::monochromatic(double energy_keV) {
  SpectrumConfig s;
  s.energies_keV = {energy_keV};
  return s;
}

void SpectrumConfig::validate() const {
  const std::size_t k = energies_keV.size();
  if (k < 1 || weights.size() != k || dqe.size() != k) {
    throw ValidationError("spectrum needs matching energies, weights and DQE per bin");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(energies_keV[i] > 0.0)) throw ValidationError("spectrum energies must be positive");
    if (!(weights[i] >= 0.0)) throw ValidationError("spectrum weights must be non-negative");
    if (!(dqe[i] >= 0.0 && dqe[i] <= 1.0)) throw ValidationError("DQE must lie in [0, 1]");
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("spectrum weights must sum to 1");
  if (!(f_conv > 0.0)) throw ValidationError("f_conv must be positive");
  if (!(scatter_fraction >= 0.0 && scatter_fraction <= 0.2)) {
    throw ValidationError("scatter fraction must lie in [0, 0.2]");
  }
}

double SpectrumConfig::vacuum_signal_per_photon() const {
  double s = 0.0;
  for (std::size_t k = 0; k < bins(); ++k) s += energies_keV[k] * dqe[k] * weights[k];
  return f_conv * s;
}

double marched_chord_length(const Ellipse& e, const Ray& ray, double step_mm) {
  const double nx = std::cos(ray.angle_rad);
  const double ny = std::sin(ray.angle_rad);
  const double bound = std::max(e.semi_a_mm, e.semi_b_mm);
  const double dist = e.cx_mm * nx + e.cy_mm * ny - ray.offset_mm;
  if (std::abs(dist) >= bound) return 0.0;

  // Ray point at parameter t: offset * n + t * d, d = (-ny, nx).
  const double tc = -e.cx_mm * ny + e.cy_mm * nx;
  const double c = std::cos(e.theta_rad);
  const double s = std::sin(e.theta_rad);
  auto level = [&](double t) {
    const double x = ray.offset_mm * nx - t * ny - e.cx_mm;
    const double y = ray.offset_mm * ny + t * nx - e.cy_mm;
    const double u = (c * x + s * y) / e.semi_a_mm;
    const double v = (-s * x + c * y) / e.semi_b_mm;
    return u * u + v * v - 1.0;
  };
  auto crossing = [&](double lo, double hi) {
    const bool lo_inside = level(lo) <= 0.0;
    for (int i = 0; i < 60 && hi - lo > 1e-13; ++i) {
      const double mid = 0.5 * (lo + hi);
      if ((level(mid) <= 0.0) == lo_inside) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  const double t0 = tc - bound;
  const std::size_t n = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(2.0 * bound / step_mm)));
  const double h = 2.0 * bound / static_cast<double>(n);
  double length = 0.0;
  double entered = 0.0;
  bool inside = level(t0) <= 0.0;
  if (inside) entered = t0;
  double prev = t0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    const bool now = level(t) <= 0.0;
    if (now != inside) {
      const double x = crossing(prev, t);
      if (now) {
        entered = x;
      } else {
        length += x - entered;
      }
      inside = now;
    }
    prev = t;
  }
  if (inside) length += prev - entered;
  return length;
}

double ray_driven_integral(const Phantom& phantom, const Ray& ray, double energy_keV,
                           double step_mm) {
  double total = 0.0;
  for (std::size_t i = 0; i < phantom.ellipses().size(); ++i) {
    const double len = marched_chord_length(phantom.ellipses()[i], ray, step_mm);
    if (len > 0.0) total += len * phantom.ellipse_mu(i, energy_keV);
  }
  return std::max(total, 0.0);
}

double default_step_mm(const ScanGeometry& geometry) {
  return geometry.det_pixel_size_mm / 4.0;
}

ChordTable::ChordTable(const Phantom& phantom, const ScanGeometry& geometry,
                       double step_mm)
    : phantom_(phantom), geometry_(geometry) {
  geometry_.validate();
  const std::size_t rays = geometry_.n_angles * geometry_.n_pixels;
  const auto angles = geometry_.angles();
  std::vector<std::vector<std::pair<std::size_t, double>>> per_angle(geometry_.n_angles);
  std::vector<std::vector<std::size_t>> counts(geometry_.n_angles);
  parallel_for(geometry_.n_angles, [&](std::size_t a) {
    auto& hits = per_angle[a];
    auto& cnt = counts[a];
    cnt.assign(geometry_.n_pixels, 0);
    for (std::size_t p = 0; p < geometry_.n_pixels; ++p) {
      const Ray ray{angles[a], geometry_.offset_mm(p)};
      for (std::size_t e = 0; e < phantom_.ellipses().size(); ++e) {
        const double len = marched_chord_length(phantom_.ellipses()[e], ray, step_mm);
        if (len > 0.0) {
          hits.emplace_back(e, len);
          ++cnt[p];
        }
      }
    }
  });
  ray_begin_.resize(rays + 1);
  ray_begin_[0] = 0;
  for (std::size_t a = 0; a < geometry_.n_angles; ++a) {
    for (std::size_t p = 0; p < geometry_.n_pixels; ++p) {
      const std::size_t r = a * geometry_.n_pixels + p;
      ray_begin_[r + 1] = ray_begin_[r] + counts[a][p];
    }
    hits_.insert(hits_.end(), per_angle[a].begin(), per_angle[a].end());
  }
}

double ChordTable::line_integral(std::size_t angle, std::size_t pixel,
                                 double energy_keV) const {
  const std::size_t r = angle * geometry_.n_pixels + pixel;
  double total = 0.0;
  for (std::size_t h = ray_begin_[r]; h < ray_begin_[r + 1]; ++h) {
    total += hits_[h].second * phantom_.ellipse_mu(hits_[h].first, energy_keV);
  }
  return std::max(total, 0.0);
}

Sinogram forward_project_mono(const ChordTable& chords, double energy_keV) {
  if (!(energy_keV > 0.0)) throw ValidationError("energy must be positive");
  const auto& g = chords.geometry();
  std::vector<double> data(g.n_angles * g.n_pixels);
  parallel_for(g.n_angles, [&](std::size_t a) {
    for (std::size_t p = 0; p < g.n_pixels; ++p) {
      data[a * g.n_pixels + p] = std::exp(-chords.line_integral(a, p, energy_keV));
    }
  });
  return Sinogram(g.angles(), g.n_pixels, g.det_pixel_size_mm,
                  SinogramStage::IntensityLoss, std::move(data));
}

Sinogram forward_project_mono(const Phantom& phantom, const ScanGeometry& geometry,
                              double energy_keV) {
  return forward_project_mono(ChordTable(phantom, geometry, default_step_mm(geometry)),
                              energy_keV);
}

ExpectedCounts expected_counts_poly(const ChordTable& chords,
                                    const SpectrumConfig& spectrum, double i0_total) {
  spectrum.validate();
  if (!(i0_total > 0.0) || !std::isfinite(i0_total)) {
    throw ValidationError("I0 must be positive");
  }
  const auto& g = chords.geometry();
  const std::size_t k_bins = spectrum.bins();
  ExpectedCounts out{g.n_angles, g.n_pixels, k_bins,
                     std::vector<double>(g.n_angles * g.n_pixels * k_bins),
                     g.det_pixel_size_mm};
  const double s = spectrum.scatter_fraction;
  parallel_for(g.n_angles, [&](std::size_t a) {
    for (std::size_t p = 0; p < g.n_pixels; ++p) {
      for (std::size_t k = 0; k < k_bins; ++k) {
        const double flux = i0_total * spectrum.weights[k];
        const double transmitted =
            std::exp(-chords.line_integral(a, p, spectrum.energies_keV[k]));
        // Written so that s == 0 reproduces I0 * exp(-L) exactly.
        double value = flux * transmitted;
        if (s > 0.0) value = flux * transmitted * (1.0 - s) + flux * s;
        out.values[(a * g.n_pixels + p) * k_bins + k] = value;
      }
    }
  });
  return out;
}

ExpectedCounts expected_counts_poly(const Phantom& phantom, const ScanGeometry& geometry,
                                    const SpectrumConfig& spectrum, double i0_total) {
  return expected_counts_poly(ChordTable(phantom, geometry, default_step_mm(geometry)),
                              spectrum, i0_total);
}

double effective_attenuation(const Material& material, const SpectrumConfig& spectrum,
                             double path_mm) {
  double transmitted = 0.0;
  for (std::size_t k = 0; k < spectrum.bins(); ++k) {
    transmitted += spectrum.weights[k] *
                   std::exp(-material.mu(spectrum.energies_keV[k]) * path_mm);
  }
  return -std::log(transmitted) / path_mm;
}

}  // namespace sim2real
