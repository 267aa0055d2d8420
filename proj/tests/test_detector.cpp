#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sim2real/detector.hpp"
#include "sim2real/preprocess.hpp"

using namespace sim2real;

namespace {

Sinogram flat_ili(std::size_t n_angles, std::size_t n_pixels, double value) {
  std::vector<double> angles(n_angles);
  for (std::size_t a = 0; a < n_angles; ++a) angles[a] = kPi * static_cast<double>(a) / static_cast<double>(n_angles);
  return Sinogram(angles, n_pixels, 1.0, SinogramStage::IntensityLoss,
                  std::vector<double>(n_angles * n_pixels, value));
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(std::span<const double> v, double shift) {
  Moments m;
  for (double x : v) m.mean += x - shift;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - shift - m.mean) * (x - shift - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

}  // namespace

TEST(Detector, PoissonSmallMeanMoments) {
  auto s = SeededRng(1).stream(RngPurpose::Generic, 0, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = poisson_sample(3.5, s);
    ASSERT_EQ(k, std::floor(k));
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 3.5, 4.0 * std::sqrt(3.5 / n));
  EXPECT_NEAR(sum2 / n - mean * mean, 3.5, 0.05);
  EXPECT_EQ(poisson_sample(0.0, s), 0.0);
  EXPECT_THROW(poisson_sample(-1.0, s), ValidationError);
}

TEST(Detector, PoissonLargeMeanIsNonNegativeInteger) {
  auto s = SeededRng(2).stream(RngPurpose::Generic, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    const double k = poisson_sample(60.0, s);
    EXPECT_GE(k, 0.0);
    EXPECT_EQ(k, std::round(k));
  }
}

TEST(Detector, CrossTalkImpulseAndConservation) {
  std::vector<double> impulse(7, 0.0);
  impulse[3] = 1.0;
  const auto out = cross_talk_apply(impulse, 0.1);
  EXPECT_NEAR(out[2], 0.05, 1e-15);
  EXPECT_NEAR(out[3], 0.9, 1e-15);
  EXPECT_NEAR(out[4], 0.05, 1e-15);
  const std::vector<double> edge = {1.0, 0.0, 0.0};
  const auto e = cross_talk_apply(edge, 0.1);
  EXPECT_NEAR(e[0], 0.95, 1e-15);
  EXPECT_NEAR(e[1], 0.05, 1e-15);
  const std::vector<double> constant(5, 2.5);
  for (double v : cross_talk_apply(constant, 0.3)) EXPECT_NEAR(v, 2.5, 1e-15);
  const std::vector<double> row = {1, 7, 2, 9, 4, 4};
  const auto r = cross_talk_apply(row, 0.2);
  EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 27.0, 1e-12);
  EXPECT_THROW(cross_talk_apply(row, 0.6), ValidationError);
}

TEST(Detector, SynthesisNoiseVarianceWithoutCrossTalk) {
  const double ili = 0.4;
  const double i0 = 500.0;
  const Sinogram clean = flat_ili(100, 500, ili);
  const Sinogram noisy = synthesize_noisy_pair(clean, i0, 0.0, SeededRng(3));
  const auto m = moments(noisy.data(), ili);
  EXPECT_NEAR(m.var, ili / i0, 0.03 * ili / i0);
  EXPECT_NEAR(m.mean, 0.0, 4.0 * std::sqrt(ili / i0 / 50000.0));
}

TEST(Detector, SynthesisCrossTalkScalesVariance) {
  // Independent noise through kernel [s/2, 1 - s, s/2]: variance times the
  // sum of squared taps away from the edges.
  const double ili = 0.5;
  const double i0 = 400.0;
  const double s = 0.05;
  const Sinogram clean = flat_ili(200, 300, ili);
  const Sinogram noisy = synthesize_noisy_pair(clean, i0, s, SeededRng(4));
  std::vector<double> interior;
  for (std::size_t a = 0; a < noisy.n_angles(); ++a) {
    for (std::size_t p = 1; p + 1 < noisy.n_pixels(); ++p) interior.push_back(noisy.at(a, p));
  }
  const double factor = (1 - s) * (1 - s) + 2 * (s / 2) * (s / 2);
  const auto m = moments(interior, ili);
  EXPECT_NEAR(m.var, factor * ili / i0, 0.03 * factor * ili / i0);
}

TEST(Detector, SynthesisIsReproducibleAndClamped) {
  const Sinogram clean = flat_ili(4, 8, 0.001);
  const Sinogram a = synthesize_noisy_pair(clean, 50.0, 0.05, SeededRng(9));
  const Sinogram b = synthesize_noisy_pair(clean, 50.0, 0.05, SeededRng(9));
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  for (double v : a.data()) EXPECT_GE(v, 0.0);
}

TEST(Detector, SynthesisNoiseFreeLimit) {
  const Sinogram clean = flat_ili(8, 16, 0.3);
  const Sinogram noisy = synthesize_noisy_pair(clean, 1e12, 0.05, SeededRng(1));
  for (double v : noisy.data()) EXPECT_NEAR(v, 0.3, 1e-5);
}

TEST(Detector, UniformConfigAndValidation) {
  const auto c = DetectorConfig::uniform(4, 100.0, 200.0, 10.0, 1.0, 0.05);
  EXPECT_EQ(c.flat, std::vector<double>(4, 210.0));
  EXPECT_EQ(c.dark, std::vector<double>(4, 10.0));
  EXPECT_NO_THROW(c.validate(4));
  EXPECT_THROW(c.validate(5), ValidationError);
  auto bad = c;
  bad.flat[1] = 5.0;
  EXPECT_THROW(bad.validate(4), ValidationError);
}

TEST(Detector, DoseNoiseFactor) {
  AcquisitionParams p;
  p.tube_voltage_kV = 90.0;
  p.tube_current_uA = 4.0;
  p.exposure_time_ms = 25.0;
  EXPECT_NEAR(dose_noise_factor(p), std::pow(90.0, 1.3) / 10.0, 1e-12);
  p.n_proj = 0.0;
  EXPECT_THROW(dose_noise_factor(p), ValidationError);
}

TEST(Detector, NoiseFreeFlatDarkIsAffine) {
  const Sinogram ideal = flat_ili(3, 5, 0.25);
  const auto cfg = DetectorConfig::uniform(5, 1000.0, 900.0, 100.0, 0.0, 0.0);
  const Sinogram raw = apply_flat_dark(ideal, cfg, SeededRng(0), false);
  EXPECT_EQ(raw.stage(), SinogramStage::RawCounts);
  for (double v : raw.data()) EXPECT_NEAR(v, 100.0 + 900.0 * 0.25, 1e-12);
}

TEST(Detector, PolychromaticVacuumMatchesFlatOnAverage) {
  SpectrumConfig sp;
  sp.energies_keV = {40.0, 70.0};
  sp.weights = {0.5, 0.5};
  sp.dqe = {0.9, 0.7};
  sp.f_conv = 0.02;
  const double i0 = 800.0;
  const auto truth = DetectorConfig::uniform(50, i0, i0 * sp.vacuum_signal_per_photon(), 30.0, 0.0, 0.0);
  ExpectedCounts vac;
  vac.n_angles = 400;
  vac.n_pixels = 50;
  vac.bins = 2;
  vac.values.assign(400 * 50 * 2, i0 * 0.5);
  const Sinogram raw = acquire_polychromatic(vac, sp, truth, SeededRng(5), 3);
  const auto m = moments(raw.data(), 0.0);
  EXPECT_NEAR(m.mean, truth.flat[0], 0.01 * (truth.flat[0] - 30.0));
  // Energy-integrating variance: gain^2 f^2 sum_k E_k^2 dqe_k A_k.
  const double gain = (truth.flat[0] - truth.dark[0]) / (i0 * sp.vacuum_signal_per_photon());
  const double var = gain * gain * sp.f_conv * sp.f_conv *
                     (40.0 * 40.0 * 0.9 * 400.0 + 70.0 * 70.0 * 0.7 * 400.0);
  EXPECT_NEAR(m.var, var, 0.03 * var);
}

TEST(Detector, MeasuredCalibrationConvergesToTruth) {
  SpectrumConfig sp;
  const auto truth = DetectorConfig::uniform(20, 500.0, 500.0 * 60.0, 50.0, 2.0, 0.05);
  const auto est = measured_calibration(truth, sp, 4000, SeededRng(8));
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(est.flat[i], truth.flat[i], 0.003 * truth.flat[i]);
    EXPECT_NEAR(est.dark[i], truth.dark[i], 0.2);
  }
  const auto few = measured_calibration(truth, sp, 2, SeededRng(8));
  EXPECT_NE(few.flat, truth.flat);
  EXPECT_THROW(measured_calibration(truth, sp, 0, SeededRng(8)), ValidationError);
}
