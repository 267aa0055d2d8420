#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sim2real/core.hpp"

namespace sim2real {

inline constexpr double kReferenceEnergyKeV = 60.0;

/// Materials with mu_ref at or above this value (1/mm) count as "high
/// attenuation" when classifying phantom complexity.
inline constexpr double kHighAttenuationMuRef = 0.04;

/// Power-law attenuation: mu(E) = mu_ref * (E_ref / E)^energy_exponent.
struct Material {
  std::string name;
  double mu_ref = 0.0;
  double energy_exponent = 0.0;

  double mu(double energy_keV) const;
};

/// An ellipse of one material. Additive ellipses add their attenuation;
/// cavities (additive == false) subtract it and must sit inside an additive
/// ellipse of the same material, which keeps the composite non-negative.
struct Ellipse {
  double cx_mm = 0.0;
  double cy_mm = 0.0;
  double semi_a_mm = 1.0;
  double semi_b_mm = 1.0;
  double theta_rad = 0.0;
  std::size_t material = 0;
  bool additive = true;

  bool contains(double x_mm, double y_mm) const;
};

/// Parallel-beam ray: the line x cos(angle) + y sin(angle) = offset.
struct Ray {
  double angle_rad = 0.0;
  double offset_mm = 0.0;
};

/// Exact length of the intersection of a ray with an ellipse (mm).
double ellipse_chord_length(const Ellipse& ellipse, const Ray& ray);

class Phantom {
 public:
  Phantom(std::vector<Material> materials, std::vector<Ellipse> ellipses,
          double fov_radius_mm);

  const std::vector<Material>& materials() const { return materials_; }
  const std::vector<Ellipse>& ellipses() const { return ellipses_; }
  double fov_radius_mm() const { return fov_radius_mm_; }

  /// Signed attenuation contributed by ellipse i at the given energy.
  double ellipse_mu(std::size_t i, double energy_keV) const;
  double attenuation(double x_mm, double y_mm, double energy_keV) const;
  std::size_t high_attenuation_count() const;

 private:
  std::vector<Material> materials_;
  std::vector<Ellipse> ellipses_;
  double fov_radius_mm_;
};

enum class Complexity { Sparse, Mixed, Dense };

const char* to_string(Complexity c);
Complexity complexity_from_string(const std::string& s);

/// Random ellipse phantom: a soft-matrix body with low-contrast inclusions,
/// air cavities and high-attenuation "stones". Sparse phantoms carry at most
/// two small stones; dense phantoms carry a tight cluster of three to five
/// large ones.
Phantom sample_phantom(std::uint64_t seed, Complexity complexity,
                       double fov_radius_mm = 60.0);

/// Point-samples the phantom at pixel centers.
Image2D rasterize(const Phantom& phantom, std::size_t width, std::size_t height,
                  double pixel_size_mm, double energy_keV);

/// Closed-form line integral of attenuation (dimensionless).
double analytic_line_integral(const Phantom& phantom, const Ray& ray,
                              double energy_keV);

/// Text form:
///   fov_radius_mm <r>
///   material <id> <name> <mu_ref> <energy_exponent>
///   <cx> <cy> <a> <b> <theta> <material-id> [cavity]
/// Blank lines and lines starting with '#' are ignored.
std::string phantom_to_text(const Phantom& phantom);
Phantom phantom_from_text(const std::string& text);

}  // namespace sim2real
