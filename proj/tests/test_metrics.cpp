#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sim2real/metrics.hpp"
#include "sim2real/rng.hpp"

using namespace sim2real;

namespace {

// Direct windowed SSIM: 2D Gaussian weights at every valid window position.
double brute_ssim(const std::vector<double>& x, const std::vector<double>& y, std::size_t rows,
                  std::size_t cols, std::size_t w, double sigma, double range) {
  std::vector<double> g(w * w);
  double total_w = 0.0;
  const double half = 0.5 * static_cast<double>(w - 1);
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double di = static_cast<double>(i) - half;
      const double dj = static_cast<double>(j) - half;
      g[i * w + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      total_w += g[i * w + j];
    }
  }
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + w <= rows; ++r) {
    for (std::size_t c = 0; c + w <= cols; ++c) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < w; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          const double k = g[i * w + j] / total_w;
          mx += k * x[(r + i) * cols + c + j];
          my += k * y[(r + i) * cols + c + j];
        }
      }
      double vx = 0, vy = 0, cv = 0;
      for (std::size_t i = 0; i < w; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          const double k = g[i * w + j] / total_w;
          const double a = x[(r + i) * cols + c + j] - mx;
          const double b = y[(r + i) * cols + c + j] - my;
          vx += k * a * a;
          vy += k * b * b;
          cv += k * a * b;
        }
      }
      acc += (2 * mx * my + c1) * (2 * cv + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

std::vector<double> random_plane(std::size_t n, std::uint64_t seed, double scale) {
  auto s = SeededRng(seed).stream(RngPurpose::Generic, 0, 0);
  std::vector<double> v(n);
  for (auto& x : v) x = scale * s.uniform();
  return v;
}

}  // namespace

TEST(Metrics, SsimMatchesBruteForce) {
  const std::size_t n = 16;
  const auto y = random_plane(n * n, 1, 2.0);
  auto x = y;
  const auto noise = random_plane(n * n, 2, 0.6);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i] - 0.3;
  const Image2D a(n, n, 1.0, x);
  const Image2D b(n, n, 1.0, y);
  MetricConfig cfg;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  EXPECT_NEAR(ssim(a, b, cfg), brute_ssim(x, y, n, n, 11, 1.5, *hi - *lo), 1e-9);
  cfg.window = 7;
  cfg.gaussian_sigma = 1.0;
  cfg.range = RangePolicy::Fixed;
  cfg.fixed_range = 3.0;
  EXPECT_NEAR(ssim(a, b, cfg), brute_ssim(x, y, n, n, 7, 1.0, 3.0), 1e-9);
}

TEST(Metrics, SsimOfIdenticalIsOne) {
  const auto y = random_plane(20 * 20, 3, 1.0);
  const Image2D a(20, 20, 1.0, y);
  EXPECT_NEAR(ssim(a, a, MetricConfig{}), 1.0, 1e-12);
}

TEST(Metrics, PsnrClosedForms) {
  std::vector<double> ref(100);
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = static_cast<double>(i) / 99.0;
  auto test = ref;
  for (auto& v : test) v += 0.1;
  const Image2D r(10, 10, 1.0, ref);
  const Image2D t(10, 10, 1.0, test);
  EXPECT_NEAR(psnr(t, r, MetricConfig{}), 20.0, 1e-9);
  MetricConfig fixed;
  fixed.range = RangePolicy::Fixed;
  fixed.fixed_range = 255.0;
  // MSE 0.01, peak 255: 10 log10(255^2 / 0.01)
  EXPECT_NEAR(psnr(t, r, fixed), 10.0 * std::log10(255.0 * 255.0 / 0.01), 1e-9);
  EXPECT_EQ(psnr(r, r, MetricConfig{}), std::numeric_limits<double>::infinity());
}

TEST(Metrics, ShapeAndRangeErrors) {
  const Image2D a(12, 12, 1.0);
  const Image2D b(12, 11, 1.0);
  EXPECT_THROW(psnr(a, b, MetricConfig{}), ValidationError);
  EXPECT_THROW(psnr(a, a, MetricConfig{}), ValidationError);  // zero range
  const Image2D tiny(5, 5, 1.0, random_plane(25, 4, 1.0));
  EXPECT_THROW(ssim(tiny, tiny, MetricConfig{}), ValidationError);
  MetricConfig even;
  even.window = 10;
  EXPECT_THROW(even.validate(), ValidationError);
  EXPECT_EQ(range_policy_from_string(to_string(RangePolicy::Fixed)), RangePolicy::Fixed);
  EXPECT_THROW(range_policy_from_string("max"), ValidationError);
}

TEST(Metrics, AggregateExcludesInfinities) {
  const std::vector<double> v = {1.0, 3.0, std::numeric_limits<double>::infinity(), 5.0};
  const Aggregate a = aggregate(v);
  EXPECT_EQ(a.n, 3u);
  EXPECT_EQ(a.excluded, 1u);
  EXPECT_DOUBLE_EQ(a.mean, 3.0);
  EXPECT_DOUBLE_EQ(a.std, 2.0);
  const std::vector<double> only_inf = {std::numeric_limits<double>::infinity()};
  EXPECT_TRUE(std::isnan(aggregate(only_inf).mean));
}

TEST(Metrics, CsvRoundTripIsExact) {
  const std::vector<MetricRecord> records = {
      {"slice_000", "sinogram", "psnr", 27.123456789012345},
      {"slice_000", "recon", "ssim", 0.1},
      {"slice_001", "recon", "psnr", std::numeric_limits<double>::infinity()}};
  const std::string csv = metric_records_to_csv(records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "slice_id,domain,metric,value");
  const auto back = metric_records_from_csv(csv);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].slice_id, records[i].slice_id);
    EXPECT_EQ(back[i].domain, records[i].domain);
    EXPECT_EQ(back[i].value, records[i].value);
  }
  EXPECT_THROW(metric_records_from_csv("a,b\n"), ValidationError);
  EXPECT_THROW(parse_value("1.5x"), ValidationError);
}

TEST(Metrics, BothDomainEvaluation) {
  const std::size_t na = 90, np = 61;
  std::vector<double> clean(na * np), test(na * np);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      const double t = (static_cast<double>(p) - 30.0) / 25.0;
      clean[a * np + p] = std::abs(t) < 1.0 ? std::exp(-0.8 * std::sqrt(1.0 - t * t)) : 1.0;
      test[a * np + p] = clean[a * np + p] * (1.0 + 0.02 * std::sin(0.7 * static_cast<double>(a * np + p)));
    }
  }
  const Sinogram c(half_turn_angles(na), np, 1.0, SinogramStage::IntensityLoss, clean);
  const Sinogram t(half_turn_angles(na), np, 1.0, SinogramStage::IntensityLoss, test);
  FbpConfig fbp;
  fbp.width = 40;
  fbp.height = 40;
  fbp.pixel_size_mm = 1.2;
  const auto e = evaluate_pair_in_both_domains(t, c, fbp, MetricConfig{});
  EXPECT_NEAR(e.sinogram.psnr, psnr(t, c, MetricConfig{}), 1e-12);
  const Image2D rc = reconstruct_intensity_loss(c, fbp);
  const Image2D rt = reconstruct_intensity_loss(t, fbp);
  EXPECT_NEAR(e.recon.ssim, ssim(rt, rc, MetricConfig{}), 1e-12);
  const Sinogram y = Sinogram::with_layout_of(c, SinogramStage::Absorption, clean);
  EXPECT_THROW(evaluate_pair_in_both_domains(y, c, fbp, MetricConfig{}), ValidationError);
}
