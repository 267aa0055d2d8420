#include "sim2real/detector.hpp"

#include <cmath>

namespace sim2real {

DetectorConfig DetectorConfig::uniform(std::size_t n_pixels, double i0,
                                       double vacuum_signal, double dark_level,
                                       double sigma_electronic, double sigma_cross_talk) {
  DetectorConfig c;
  c.i0 = i0;
  c.sigma_electronic = sigma_electronic;
  c.sigma_cross_talk = sigma_cross_talk;
  c.dark.assign(n_pixels, dark_level);
  c.flat.assign(n_pixels, dark_level + vacuum_signal);
  return c;
}

void DetectorConfig::validate(std::size_t n_pixels) const {
  if (!(i0 > 0.0) || !std::isfinite(i0)) throw ValidationError("I0 must be positive");
  if (!(sigma_electronic >= 0.0)) throw ValidationError("sigma_electronic must be >= 0");
  if (!(sigma_cross_talk >= 0.0 && sigma_cross_talk < 0.5)) {
    throw ValidationError("cross-talk fraction must lie in [0, 0.5)");
  }
  if (flat.size() != n_pixels || dark.size() != n_pixels) {
    throw ValidationError("flat/dark maps must have one entry per detector pixel");
  }
  for (std::size_t i = 0; i < n_pixels; ++i) {
    if (!std::isfinite(flat[i]) || !std::isfinite(dark[i]) || !(flat[i] - dark[i] > 0.0)) {
      throw ValidationError("flat field must exceed dark field at every pixel");
    }
  }
}

double dose_noise_factor(const AcquisitionParams& p) {
  if (!(p.tube_voltage_kV > 0.0 && p.tube_current_uA > 0.0 && p.exposure_time_ms > 0.0 &&
        p.n_proj > 0.0 && p.n_avim > 0.0)) {
    throw ValidationError("acquisition parameters must be strictly positive");
  }
  return std::pow(p.tube_voltage_kV, 1.3) /
         std::sqrt(p.tube_current_uA * p.exposure_time_ms * p.n_proj * p.n_avim);
}

double poisson_sample(double lambda, RandomStream& stream) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ValidationError("Poisson mean must be finite and non-negative");
  }
  if (lambda == 0.0) return 0.0;
  if (lambda < kPoissonExactLimit) {
    const double u = stream.uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    double k = 0.0;
    // The tail beyond 10 * limit carries no representable mass.
    while (u >= cdf && k < 10.0 * kPoissonExactLimit) {
      k += 1.0;
      p *= lambda / k;
      cdf += p;
    }
    return k;
  }
  const double x = std::round(lambda + std::sqrt(lambda) * stream.normal());
  return x < 0.0 ? 0.0 : x;
}

std::vector<double> cross_talk_apply(std::span<const double> row, double sigma) {
  if (!(sigma >= 0.0 && sigma < 0.5)) {
    throw ValidationError("cross-talk fraction must lie in [0, 0.5)");
  }
  const std::size_t n = row.size();
  std::vector<double> out(row.begin(), row.end());
  if (sigma == 0.0 || n < 2) return out;
  const double side = 0.5 * sigma;
  const double centre = 1.0 - sigma;
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? row[i - 1] : row[i];
    const double right = i + 1 < n ? row[i + 1] : row[i];
    out[i] = centre * row[i] + side * left + side * right;
  }
  return out;
}

Sinogram measure(const ExpectedCounts& expected, const SpectrumConfig& spectrum,
                 const MeasureOptions& options, const SeededRng& rng) {
  spectrum.validate();
  if (expected.bins != spectrum.bins()) {
    throw ValidationError("expected counts and spectrum disagree on bin count");
  }
  if (!(options.sigma_electronic >= 0.0)) {
    throw ValidationError("sigma_electronic must be >= 0");
  }
  for (double a : expected.values) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw ValidationError("expected counts must be finite and non-negative");
    }
  }
  const std::size_t na = expected.n_angles;
  const std::size_t np = expected.n_pixels;
  const std::size_t kb = expected.bins;
  std::vector<double> data(na * np);
  parallel_for(na, [&](std::size_t a) {
    std::vector<double> row(np);
    for (std::size_t p = 0; p < np; ++p) {
      RandomStream stream = rng.stream(options.purpose, static_cast<std::uint32_t>(a),
                                       static_cast<std::uint32_t>(p));
      double signal = 0.0;
      for (std::size_t k = 0; k < kb; ++k) {
        const double mean = spectrum.dqe[k] * expected.values[(a * np + p) * kb + k];
        signal += spectrum.energies_keV[k] * poisson_sample(mean, stream);
      }
      signal *= spectrum.f_conv;
      if (options.sigma_electronic > 0.0) {
        signal += options.sigma_electronic * stream.normal();
      }
      row[p] = signal;
    }
    const auto mixed = cross_talk_apply(row, options.sigma_cross_talk);
    std::copy(mixed.begin(), mixed.end(), data.begin() + static_cast<std::ptrdiff_t>(a * np));
  });
  return Sinogram(half_turn_angles(na), np, expected.det_pixel_size_mm,
                  SinogramStage::RawCounts, std::move(data));
}

Sinogram synthesize_noisy_pair(const Sinogram& clean_ili, double i0, double sigma_cross_talk,
                               const SeededRng& rng, const SynthesisOptions& options) {
  if (clean_ili.stage() != SinogramStage::IntensityLoss) {
    throw ValidationError("noise synthesis expects an intensity-loss sinogram");
  }
  if (!(i0 > 0.0) || !std::isfinite(i0)) throw ValidationError("I0 must be positive");
  const std::size_t na = clean_ili.n_angles();
  const std::size_t np = clean_ili.n_pixels();
  std::vector<double> data(na * np);
  parallel_for(na, [&](std::size_t a) {
    const auto clean = clean_ili.row(a);
    std::vector<double> noise(np);
    for (std::size_t p = 0; p < np; ++p) {
      RandomStream stream = rng.stream(options.purpose, static_cast<std::uint32_t>(a),
                                       static_cast<std::uint32_t>(p));
      const double lambda = i0 * clean[p];
      noise[p] = lambda - poisson_sample(lambda, stream);
      if (options.sigma_electronic > 0.0) {
        noise[p] += options.sigma_electronic * stream.normal();
      }
    }
    const auto mixed = cross_talk_apply(noise, sigma_cross_talk);
    const auto base = options.cross_talk_on_clean
                          ? cross_talk_apply(clean, sigma_cross_talk)
                          : std::vector<double>(clean.begin(), clean.end());
    for (std::size_t p = 0; p < np; ++p) {
      const double v = base[p] + mixed[p] / i0;
      data[a * np + p] = v > 0.0 ? v : 0.0;
    }
  });
  return Sinogram::with_layout_of(clean_ili, SinogramStage::IntensityLoss, std::move(data));
}

Sinogram apply_flat_dark(const Sinogram& ideal_ili, const DetectorConfig& config,
                         const SeededRng& rng, bool noisy) {
  if (ideal_ili.stage() != SinogramStage::IntensityLoss) {
    throw ValidationError("flat/dark application expects an intensity-loss sinogram");
  }
  const std::size_t na = ideal_ili.n_angles();
  const std::size_t np = ideal_ili.n_pixels();
  config.validate(np);
  std::vector<double> data(na * np);
  if (!noisy) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t p = 0; p < np; ++p) {
        data[a * np + p] =
            config.dark[p] + (config.flat[p] - config.dark[p]) * ideal_ili.at(a, p);
      }
    }
    return Sinogram::with_layout_of(ideal_ili, SinogramStage::RawCounts, std::move(data));
  }
  ExpectedCounts expected{na, np, 1, std::vector<double>(na * np),
                          ideal_ili.det_pixel_size_mm()};
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      expected.values[a * np + p] = (config.flat[p] - config.dark[p]) * ideal_ili.at(a, p);
    }
  }
  const SpectrumConfig counting = SpectrumConfig::monochromatic(1.0);
  MeasureOptions options;
  options.sigma_electronic = config.sigma_electronic;
  options.sigma_cross_talk = config.sigma_cross_talk;
  options.purpose = static_cast<std::uint32_t>(RngPurpose::CleanMeasurement);
  const Sinogram measured = measure(expected, counting, options, rng);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      data[a * np + p] = config.dark[p] + measured.at(a, p);
    }
  }
  return Sinogram::with_layout_of(ideal_ili, SinogramStage::RawCounts, std::move(data));
}

Sinogram acquire_polychromatic(const ExpectedCounts& expected, const SpectrumConfig& spectrum,
                               const DetectorConfig& config, const SeededRng& rng,
                               std::uint32_t purpose) {
  const std::size_t np = expected.n_pixels;
  config.validate(np);
  MeasureOptions options;
  options.sigma_electronic = config.sigma_electronic;
  options.sigma_cross_talk = config.sigma_cross_talk;
  options.purpose = purpose;
  const Sinogram measured = measure(expected, spectrum, options, rng);
  const double vacuum = config.i0 * spectrum.vacuum_signal_per_photon();
  std::vector<double> data(measured.data().begin(), measured.data().end());
  for (std::size_t a = 0; a < expected.n_angles; ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      const double gain = (config.flat[p] - config.dark[p]) / vacuum;
      data[a * np + p] = config.dark[p] + gain * data[a * np + p];
    }
  }
  return Sinogram::with_layout_of(measured, SinogramStage::RawCounts, std::move(data));
}

DetectorConfig measured_calibration(const DetectorConfig& truth, const SpectrumConfig& spectrum,
                                    std::size_t n_frames, const SeededRng& rng) {
  if (n_frames < 1) throw ValidationError("calibration needs at least one frame");
  spectrum.validate();
  const std::size_t np = truth.flat.size();
  truth.validate(np);
  const std::size_t kb = spectrum.bins();
  const auto purpose = static_cast<std::uint32_t>(RngPurpose::DetectorMaps);

  ExpectedCounts vacuum{n_frames, np, kb, std::vector<double>(n_frames * np * kb), 1.0};
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t k = 0; k < kb; ++k) {
        vacuum.values[(f * np + p) * kb + k] = truth.i0 * spectrum.weights[k];
      }
    }
  }
  ExpectedCounts dark = vacuum;
  std::fill(dark.values.begin(), dark.values.end(), 0.0);
  const Sinogram flat_frames = acquire_polychromatic(vacuum, spectrum, truth, rng.derive(1), purpose);
  const Sinogram dark_frames = acquire_polychromatic(dark, spectrum, truth, rng.derive(2), purpose);

  DetectorConfig measured = truth;
  for (std::size_t p = 0; p < np; ++p) {
    double f_sum = 0.0;
    double d_sum = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) {
      f_sum += flat_frames.at(f, p);
      d_sum += dark_frames.at(f, p);
    }
    measured.flat[p] = f_sum / static_cast<double>(n_frames);
    measured.dark[p] = d_sum / static_cast<double>(n_frames);
  }
  measured.validate(np);
  return measured;
}

}  // namespace sim2real
