// Suite-level properties of the default desk study. Each test builds full
// default-size data, so these run for minutes.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>
#include <vector>

#include "sim2real/harness.hpp"

using namespace sim2real;

namespace {

const std::vector<SliceData>& default_suite() {
  static const std::vector<SliceData> suite = [] {
    set_num_threads(std::max(1u, std::thread::hardware_concurrency()));
    return build_suite(StudyConfig{});
  }();
  return suite;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double mse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST(Properties, DenseSlicesHaveLowerSurrogateFidelity) {
  const StudyConfig config;
  const auto& suite = default_suite();
  ASSERT_GE(suite.size(), 30u);
  // One peak value for every slice, so SSIM compares artifact content rather
  // than each slice's own dynamic range.
  double peak = 0.0;
  for (const auto& s : suite) {
    const auto [lo, hi] = std::minmax_element(s.clean_recon.data().begin(), s.clean_recon.data().end());
    peak = std::max(peak, *hi - *lo);
  }
  MetricConfig fixed = config.metric;
  fixed.range = RangePolicy::Fixed;
  fixed.fixed_range = peak;
  std::vector<double> sparse_fixed, dense_fixed, sparse_minmax, dense_minmax;
  for (const auto& s : suite) {
    const double f = ssim(s.surrogate_recon, s.clean_recon, fixed);
    const double m = ssim(s.surrogate_recon, s.clean_recon, config.metric);
    if (s.complexity == Complexity::Sparse) {
      sparse_fixed.push_back(f);
      sparse_minmax.push_back(m);
    } else if (s.complexity == Complexity::Dense) {
      dense_fixed.push_back(f);
      dense_minmax.push_back(m);
    }
  }
  std::printf("surrogate recon SSIM, fixed range %.4f: sparse %.4f dense %.4f (n=%zu/%zu)\n", peak,
              mean_of(sparse_fixed), mean_of(dense_fixed), sparse_fixed.size(), dense_fixed.size());
  std::printf("surrogate recon SSIM, per-slice range: sparse %.4f dense %.4f\n", mean_of(sparse_minmax),
              mean_of(dense_minmax));
  EXPECT_LT(mean_of(dense_fixed), mean_of(sparse_fixed));
}

TEST(Properties, CalibratedI0IsStableAcrossDisjointSuites) {
  StudyConfig a;
  a.suite_count = 30;
  const auto& full = default_suite();
  const std::vector<SliceData> first(full.begin(), full.begin() + 30);
  StudyConfig b = a;
  b.seed = a.seed + 1000;
  const double chosen_a = calibrate_noise_level(a, first).chosen_i0;
  const double chosen_b = calibrate_noise_level(b).chosen_i0;
  std::printf("chosen I0: seed %llu -> %g, seed %llu -> %g\n", static_cast<unsigned long long>(a.seed), chosen_a,
              static_cast<unsigned long long>(b.seed), chosen_b);
  EXPECT_EQ(chosen_a, chosen_b);
}

TEST(Properties, TrainingHalvesSinogramError) {
  StudyConfig config;
  config.i0 = 200.0;
  const auto& suite = default_suite();
  std::vector<Sinogram> noisy;
  for (const auto& s : suite) noisy.push_back(simulated_arm(config, s, config.i0));
  const DataSplit split = split_indices(suite.size(), config.train, 99);
  auto pairs_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<TrainingPair> out;
    for (std::size_t i : idx) {
      const auto& c = suite[i].clean_ili;
      out.push_back({c.n_angles(), c.n_pixels(), {noisy[i].data().begin(), noisy[i].data().end()},
                     {c.data().begin(), c.data().end()}});
    }
    return out;
  };
  const TrainResult r = train(pairs_of(split.train), pairs_of(split.validation), config.train,
                              config.methods.front().architecture, TrainCondition::Simulated,
                              DenoiseMode::Sinogram, 5);
  double before = 0.0, after = 0.0;
  for (std::size_t i : split.validation) {
    before += mse(noisy[i].data(), suite[i].clean_ili.data());
    after += mse(denoise(r.model, noisy[i]).data(), suite[i].clean_ili.data());
  }
  std::printf("validation MSE: input %.4e, denoised %.4e (ratio %.3f, best epoch %zu)\n", before, after,
              after / before, r.best_epoch);
  EXPECT_LT(after, 0.5 * before);
}
