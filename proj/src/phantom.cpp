#include "sim2real/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sim2real/rng.hpp"

namespace sim2real {

double Material::mu(double energy_keV) const {
  if (energy_exponent == 0.0) return mu_ref;
  return mu_ref * std::pow(kReferenceEnergyKeV / energy_keV, energy_exponent);
}

bool Ellipse::contains(double x_mm, double y_mm) const {
  const double dx = x_mm - cx_mm;
  const double dy = y_mm - cy_mm;
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  const double u = (c * dx + s * dy) / semi_a_mm;
  const double v = (-s * dx + c * dy) / semi_b_mm;
  return u * u + v * v <= 1.0;
}

double ellipse_chord_length(const Ellipse& e, const Ray& ray) {
  const double nx = std::cos(ray.angle_rad);
  const double ny = std::sin(ray.angle_rad);
  // Ray origin relative to the ellipse center, and its direction, both
  // expressed in the ellipse's principal frame and scaled to the unit circle.
  const double px = ray.offset_mm * nx - e.cx_mm;
  const double py = ray.offset_mm * ny - e.cy_mm;
  const double c = std::cos(e.theta_rad);
  const double s = std::sin(e.theta_rad);
  const double qx = (c * px + s * py) / e.semi_a_mm;
  const double qy = (-s * px + c * py) / e.semi_b_mm;
  const double dx = (c * -ny + s * nx) / e.semi_a_mm;
  const double dy = (-s * -ny + c * nx) / e.semi_b_mm;
  const double a = dx * dx + dy * dy;
  const double b = qx * dx + qy * dy;
  const double cc = qx * qx + qy * qy - 1.0;
  const double disc = b * b - a * cc;
  if (disc <= 0.0) return 0.0;
  return 2.0 * std::sqrt(disc) / a;
}

Phantom::Phantom(std::vector<Material> materials, std::vector<Ellipse> ellipses,
                 double fov_radius_mm)
    : materials_(std::move(materials)),
      ellipses_(std::move(ellipses)),
      fov_radius_mm_(fov_radius_mm) {
  if (!(fov_radius_mm_ > 0.0) || !std::isfinite(fov_radius_mm_)) {
    throw ValidationError("phantom field of view must be positive");
  }
  for (const auto& m : materials_) {
    if (!(m.mu_ref >= 0.0) || !(m.energy_exponent >= 0.0) ||
        !std::isfinite(m.mu_ref) || !std::isfinite(m.energy_exponent)) {
      throw ValidationError("material " + m.name +
                            " needs mu_ref >= 0 and energy exponent >= 0");
    }
  }
  for (const auto& e : ellipses_) {
    if (e.material >= materials_.size()) {
      throw ValidationError("ellipse references unknown material");
    }
    if (!(e.semi_a_mm > 0.0) || !(e.semi_b_mm > 0.0)) {
      throw ValidationError("ellipse semi-axes must be positive");
    }
    const double reach = std::hypot(e.cx_mm, e.cy_mm) + std::max(e.semi_a_mm, e.semi_b_mm);
    if (reach > fov_radius_mm_ + 1e-9) {
      throw ValidationError("ellipse extends outside the field of view");
    }
  }
  // Each cavity must be covered by an additive ellipse of its own material;
  // checked on boundary samples.
  for (const auto& cav : ellipses_) {
    if (cav.additive) continue;
    const bool covered = std::any_of(ellipses_.begin(), ellipses_.end(), [&](const Ellipse& host) {
      if (!host.additive || host.material != cav.material) return false;
      for (int k = 0; k < 72; ++k) {
        const double t = 2.0 * kPi * k / 72.0;
        const double lx = cav.semi_a_mm * std::cos(t);
        const double ly = cav.semi_b_mm * std::sin(t);
        const double x = cav.cx_mm + std::cos(cav.theta_rad) * lx - std::sin(cav.theta_rad) * ly;
        const double y = cav.cy_mm + std::sin(cav.theta_rad) * lx + std::cos(cav.theta_rad) * ly;
        if (!host.contains(x, y)) return false;
      }
      return true;
    });
    if (!covered) {
      throw ValidationError("cavity is not contained in an ellipse of its material");
    }
  }
}

double Phantom::ellipse_mu(std::size_t i, double energy_keV) const {
  const auto& e = ellipses_[i];
  const double mu = materials_[e.material].mu(energy_keV);
  return e.additive ? mu : -mu;
}

double Phantom::attenuation(double x_mm, double y_mm, double energy_keV) const {
  double total = 0.0;
  for (std::size_t i = 0; i < ellipses_.size(); ++i) {
    if (ellipses_[i].contains(x_mm, y_mm)) total += ellipse_mu(i, energy_keV);
  }
  return std::max(total, 0.0);
}

std::size_t Phantom::high_attenuation_count() const {
  return static_cast<std::size_t>(std::count_if(
      ellipses_.begin(), ellipses_.end(), [&](const Ellipse& e) {
        return e.additive && materials_[e.material].mu_ref >= kHighAttenuationMuRef;
      }));
}

const char* to_string(Complexity c) {
  switch (c) {
    case Complexity::Sparse:
      return "sparse";
    case Complexity::Mixed:
      return "mixed";
    case Complexity::Dense:
      return "dense";
  }
  return "unknown";
}

Complexity complexity_from_string(const std::string& s) {
  if (s == "sparse") return Complexity::Sparse;
  if (s == "mixed") return Complexity::Mixed;
  if (s == "dense") return Complexity::Dense;
  throw ValidationError("unknown phantom complexity '" + s + "'");
}

namespace {

enum MaterialId : std::size_t { kMatrix = 0, kOrganic = 1, kStone = 2 };

std::vector<Material> standard_materials() {
  return {
      {"matrix", 0.020, 0.6},
      {"organic", 0.006, 0.3},
      {"stone", 0.070, 2.2},
  };
}

class Draw {
 public:
  explicit Draw(RandomStream s) : s_(s) {}
  double operator()(double lo, double hi) { return lo + (hi - lo) * s_.uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(s_.uniform() * (hi - lo + 1));
  }

 private:
  RandomStream s_;
};

// Point at fraction `r` of the body's extent along a random direction.
void point_in_body(Draw& draw, const Ellipse& body, double r, double& x, double& y) {
  const double t = draw(0.0, 2.0 * kPi);
  const double rho = r * std::sqrt(draw(0.0, 1.0));
  const double lx = rho * body.semi_a_mm * std::cos(t);
  const double ly = rho * body.semi_b_mm * std::sin(t);
  x = body.cx_mm + std::cos(body.theta_rad) * lx - std::sin(body.theta_rad) * ly;
  y = body.cy_mm + std::sin(body.theta_rad) * lx + std::cos(body.theta_rad) * ly;
}

}  // namespace

Phantom sample_phantom(std::uint64_t seed, Complexity complexity, double fov_radius_mm) {
  const SeededRng rng(seed);
  Draw draw(rng.stream(RngPurpose::PhantomLayout, 0, 0));
  const double R = fov_radius_mm;

  std::vector<Ellipse> ellipses;
  Ellipse body;
  body.cx_mm = draw(-0.04, 0.04) * R;
  body.cy_mm = draw(-0.04, 0.04) * R;
  const double reach = R - std::hypot(body.cx_mm, body.cy_mm);
  body.semi_a_mm = draw(0.78, 0.92) * reach;
  body.semi_b_mm = draw(0.60, 0.85) * reach;
  body.theta_rad = draw(0.0, kPi);
  body.material = kMatrix;
  ellipses.push_back(body);

  // Low-contrast inclusions, kept well inside the body.
  const int n_inclusions = draw.integer(2, 5);
  for (int i = 0; i < n_inclusions; ++i) {
    Ellipse e;
    point_in_body(draw, body, 0.55, e.cx_mm, e.cy_mm);
    e.semi_a_mm = draw(0.05, 0.16) * R;
    e.semi_b_mm = draw(0.04, 0.12) * R;
    e.theta_rad = draw(0.0, kPi);
    e.material = kOrganic;
    ellipses.push_back(e);
  }

  // Air cavities carved out of the matrix; rejected if not contained.
  const int n_cavities = draw.integer(0, 2);
  for (int i = 0; i < n_cavities; ++i) {
    Ellipse e;
    point_in_body(draw, body, 0.5, e.cx_mm, e.cy_mm);
    e.semi_a_mm = draw(0.03, 0.08) * R;
    e.semi_b_mm = draw(0.02, 0.06) * R;
    e.theta_rad = draw(0.0, kPi);
    e.material = kMatrix;
    e.additive = false;
    const bool inside = [&] {
      for (int k = 0; k < 72; ++k) {
        const double t = 2.0 * kPi * k / 72.0;
        const double lx = e.semi_a_mm * std::cos(t);
        const double ly = e.semi_b_mm * std::sin(t);
        const double x = e.cx_mm + std::cos(e.theta_rad) * lx - std::sin(e.theta_rad) * ly;
        const double y = e.cy_mm + std::sin(e.theta_rad) * lx + std::cos(e.theta_rad) * ly;
        if (!body.contains(x, y)) return false;
      }
      return true;
    }();
    if (inside) ellipses.push_back(e);
  }

  // High-attenuation stones.
  auto add_stone = [&](double cx, double cy, double a, double b) {
    Ellipse e;
    e.cx_mm = cx;
    e.cy_mm = cy;
    e.semi_a_mm = a;
    e.semi_b_mm = b;
    e.theta_rad = draw(0.0, kPi);
    e.material = kStone;
    ellipses.push_back(e);
  };
  switch (complexity) {
    case Complexity::Sparse: {
      const int n = draw.integer(0, 2);
      for (int i = 0; i < n; ++i) {
        double x, y;
        point_in_body(draw, body, 0.7, x, y);
        add_stone(x, y, draw(0.025, 0.05) * R, draw(0.02, 0.04) * R);
      }
      break;
    }
    case Complexity::Mixed: {
      const int n = draw.integer(2, 3);
      for (int i = 0; i < n; ++i) {
        double x, y;
        point_in_body(draw, body, 0.7, x, y);
        add_stone(x, y, draw(0.05, 0.09) * R, draw(0.04, 0.07) * R);
      }
      break;
    }
    case Complexity::Dense: {
      // Cluster: every center within 0.7 x (mean semi-axis) of the cluster
      // center, so pairwise distances stay below 1.4 x mean semi-axis.
      const int n = draw.integer(3, 5);
      std::vector<std::pair<double, double>> axes(n);
      double mean_axis = 0.0;
      for (auto& [a, b] : axes) {
        a = draw(0.09, 0.15) * R;
        b = draw(0.07, 0.12) * R;
        mean_axis += a + b;
      }
      mean_axis /= 2.0 * n;
      double gx, gy;
      point_in_body(draw, body, 0.3, gx, gy);
      for (const auto& [a, b] : axes) {
        const double t = draw(0.0, 2.0 * kPi);
        const double rho = 0.7 * mean_axis * std::sqrt(draw(0.0, 1.0));
        add_stone(gx + rho * std::cos(t), gy + rho * std::sin(t), a, b);
      }
      break;
    }
  }

  // Anything that would poke out of the field of view is shrunk to fit.
  for (auto& e : ellipses) {
    const double room = R - std::hypot(e.cx_mm, e.cy_mm);
    const double big = std::max(e.semi_a_mm, e.semi_b_mm);
    if (big > room) {
      const double k = std::max(room, 1e-3) / big;
      e.semi_a_mm *= k;
      e.semi_b_mm *= k;
    }
  }
  return Phantom(standard_materials(), std::move(ellipses), R);
}

Image2D rasterize(const Phantom& phantom, std::size_t width, std::size_t height,
                  double pixel_size_mm, double energy_keV) {
  if (!(energy_keV > 0.0)) throw ValidationError("energy must be positive");
  Image2D grid(width, height, pixel_size_mm);
  std::vector<double> data(width * height, 0.0);
  parallel_for(height, [&](std::size_t r) {
    const double y = grid.y_mm(r);
    for (std::size_t c = 0; c < width; ++c) {
      data[r * width + c] = phantom.attenuation(grid.x_mm(c), y, energy_keV);
    }
  });
  return Image2D(width, height, pixel_size_mm, std::move(data));
}

double analytic_line_integral(const Phantom& phantom, const Ray& ray, double energy_keV) {
  double total = 0.0;
  for (std::size_t i = 0; i < phantom.ellipses().size(); ++i) {
    const double len = ellipse_chord_length(phantom.ellipses()[i], ray);
    if (len > 0.0) total += len * phantom.ellipse_mu(i, energy_keV);
  }
  return std::max(total, 0.0);
}

std::string phantom_to_text(const Phantom& phantom) {
  std::ostringstream out;
  char buf[256];
  out << "# sim2real phantom: cx cy a b theta(rad) material-id [cavity]\n";
  std::snprintf(buf, sizeof buf, "fov_radius_mm %.17g\n", phantom.fov_radius_mm());
  out << buf;
  for (std::size_t i = 0; i < phantom.materials().size(); ++i) {
    const auto& m = phantom.materials()[i];
    std::snprintf(buf, sizeof buf, "material %zu %s %.17g %.17g\n", i, m.name.c_str(),
                  m.mu_ref, m.energy_exponent);
    out << buf;
  }
  for (const auto& e : phantom.ellipses()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %zu%s\n", e.cx_mm,
                  e.cy_mm, e.semi_a_mm, e.semi_b_mm, e.theta_rad, e.material,
                  e.additive ? "" : " cavity");
    out << buf;
  }
  return out.str();
}

Phantom phantom_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  double fov = 0.0;
  std::vector<Material> materials;
  std::vector<Ellipse> ellipses;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    auto fail = [&] {
      throw ValidationError("phantom text: malformed line " + std::to_string(line_no));
    };
    if (head == "fov_radius_mm") {
      if (!(ls >> fov)) fail();
    } else if (head == "material") {
      std::size_t id;
      Material m;
      if (!(ls >> id >> m.name >> m.mu_ref >> m.energy_exponent)) fail();
      if (id != materials.size()) fail();
      materials.push_back(m);
    } else {
      Ellipse e;
      std::istringstream es(line);
      if (!(es >> e.cx_mm >> e.cy_mm >> e.semi_a_mm >> e.semi_b_mm >> e.theta_rad >>
            e.material)) {
        fail();
      }
      std::string flag;
      if (es >> flag) {
        if (flag != "cavity") fail();
        e.additive = false;
      }
      ellipses.push_back(e);
    }
  }
  return Phantom(std::move(materials), std::move(ellipses), fov);
}

}  // namespace sim2real
