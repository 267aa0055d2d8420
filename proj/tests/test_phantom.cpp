#include <gtest/gtest.h>

#include <cmath>

#include "sim2real/phantom.hpp"

using namespace sim2real;

namespace {

// Chord by dense sampling along the ray: count inside points, times step.
double sampled_chord(const Ellipse& e, const Ray& r, double half_len, std::size_t n) {
  const double dx = -std::sin(r.angle_rad);
  const double dy = std::cos(r.angle_rad);
  const double px = r.offset_mm * std::cos(r.angle_rad);
  const double py = r.offset_mm * std::sin(r.angle_rad);
  const double step = 2.0 * half_len / static_cast<double>(n);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = -half_len + (static_cast<double>(i) + 0.5) * step;
    if (e.contains(px + t * dx, py + t * dy)) ++inside;
  }
  return static_cast<double>(inside) * step;
}

Phantom disc(double radius, double mu) {
  return Phantom({{"disc", mu, 0.0}}, {{0.0, 0.0, radius, radius, 0.0, 0, true}}, radius + 1.0);
}

}  // namespace

TEST(Phantom, ChordOfCircleIsClosedForm) {
  const Ellipse c{1.0, -2.0, 5.0, 5.0, 0.3, 0, true};
  for (double angle : {0.0, 0.7, 2.1}) {
    for (double off : {-3.0, 0.0, 1.5, 4.9}) {
      const Ray r{angle, off};
      const double d = off - (1.0 * std::cos(angle) + -2.0 * std::sin(angle));
      const double expected = std::abs(d) < 5.0 ? 2.0 * std::sqrt(25.0 - d * d) : 0.0;
      EXPECT_NEAR(ellipse_chord_length(c, r), expected, 1e-12);
    }
  }
}

TEST(Phantom, ChordOfRotatedEllipseMatchesSampling) {
  const Ellipse e{3.0, 1.0, 8.0, 3.0, 0.6, 0, true};
  for (double angle : {0.1, 1.2, 2.9}) {
    for (double off : {-2.0, 0.5, 3.0}) {
      const Ray r{angle, off};
      EXPECT_NEAR(ellipse_chord_length(e, r), sampled_chord(e, r, 30.0, 600000), 2e-3);
    }
  }
}

TEST(Phantom, MissingRayHasZeroChord) {
  const Ellipse e{0.0, 0.0, 2.0, 1.0, 0.0, 0, true};
  EXPECT_EQ(ellipse_chord_length(e, {0.0, 5.0}), 0.0);
}

TEST(Phantom, PowerLawAttenuation) {
  const Material m{"x", 0.02, 3.0};
  EXPECT_DOUBLE_EQ(m.mu(kReferenceEnergyKeV), 0.02);
  EXPECT_NEAR(m.mu(30.0), 0.02 * 8.0, 1e-15);
}

TEST(Phantom, AnalyticIntegralOfDisc) {
  const Phantom p = disc(10.0, 0.05);
  EXPECT_NEAR(analytic_line_integral(p, {0.4, 6.0}, 60.0), 0.05 * 2.0 * std::sqrt(100.0 - 36.0), 1e-12);
}

TEST(Phantom, CavitySubtracts) {
  const Phantom p({{"m", 0.02, 0.0}},
                  {{0, 0, 10, 10, 0, 0, true}, {0, 0, 4, 4, 0, 0, false}}, 12.0);
  EXPECT_NEAR(p.attenuation(0, 0, 60.0), 0.0, 1e-15);
  EXPECT_NEAR(p.attenuation(6, 0, 60.0), 0.02, 1e-15);
  EXPECT_NEAR(analytic_line_integral(p, {0.0, 0.0}, 60.0), 0.02 * (20.0 - 8.0), 1e-12);
}

TEST(Phantom, TextRoundTrip) {
  const Phantom p = sample_phantom(11, Complexity::Mixed);
  const Phantom q = phantom_from_text(phantom_to_text(p));
  ASSERT_EQ(p.ellipses().size(), q.ellipses().size());
  ASSERT_EQ(p.materials().size(), q.materials().size());
  EXPECT_EQ(p.fov_radius_mm(), q.fov_radius_mm());
  for (std::size_t i = 0; i < p.ellipses().size(); ++i) {
    EXPECT_EQ(p.ellipses()[i].cx_mm, q.ellipses()[i].cx_mm);
    EXPECT_EQ(p.ellipses()[i].semi_b_mm, q.ellipses()[i].semi_b_mm);
    EXPECT_EQ(p.ellipses()[i].theta_rad, q.ellipses()[i].theta_rad);
    EXPECT_EQ(p.ellipses()[i].additive, q.ellipses()[i].additive);
  }
  EXPECT_THROW(phantom_from_text("nonsense line\n"), ValidationError);
}

TEST(Phantom, SamplingIsSeededAndFitsTheFieldOfView) {
  for (auto c : {Complexity::Sparse, Complexity::Mixed, Complexity::Dense}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Phantom p = sample_phantom(seed, c, 60.0);
      EXPECT_EQ(phantom_to_text(p), phantom_to_text(sample_phantom(seed, c, 60.0)));
      for (const auto& e : p.ellipses()) {
        EXPECT_LE(std::hypot(e.cx_mm, e.cy_mm) + std::max(e.semi_a_mm, e.semi_b_mm), 60.0 + 1e-9);
      }
      const auto stones = p.high_attenuation_count();
      const std::size_t lo = c == Complexity::Sparse ? 0 : c == Complexity::Mixed ? 2 : 3;
      const std::size_t hi = c == Complexity::Sparse ? 2 : c == Complexity::Mixed ? 3 : 5;
      EXPECT_GE(stones, lo);
      EXPECT_LE(stones, hi);
    }
  }
  EXPECT_NE(phantom_to_text(sample_phantom(1, Complexity::Dense)),
            phantom_to_text(sample_phantom(2, Complexity::Dense)));
}

TEST(Phantom, ComplexityNames) {
  for (auto c : {Complexity::Sparse, Complexity::Mixed, Complexity::Dense}) {
    EXPECT_EQ(complexity_from_string(to_string(c)), c);
  }
  EXPECT_THROW(complexity_from_string("busy"), ValidationError);
}

TEST(Phantom, RasterizeSamplesPixelCenters) {
  const Phantom p = disc(5.0, 0.03);
  const Image2D img = rasterize(p, 11, 11, 1.0, 60.0);
  EXPECT_DOUBLE_EQ(img.at(5, 5), 0.03);
  EXPECT_DOUBLE_EQ(img.at(5, 0), 0.03);
  EXPECT_DOUBLE_EQ(img.at(0, 0), 0.0);
}
