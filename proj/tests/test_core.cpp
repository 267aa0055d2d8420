#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <vector>

#include "sim2real/core.hpp"
#include "sim2real/dataset.hpp"
#include "sim2real/rng.hpp"

using namespace sim2real;

namespace {

Sinogram small_sino(SinogramStage stage, double base) {
  std::vector<double> data(3 * 4);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = base + 0.01 * static_cast<double>(i);
  return Sinogram(half_turn_angles(3), 4, 0.5, stage, data);
}

}  // namespace

TEST(Core, HalfTurnAnglesAreUniformWithoutEndpoint) {
  const auto a = half_turn_angles(4);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(a[i], kPi * static_cast<double>(i) / 4.0);
}

TEST(Core, SinogramRejectsBadLayouts) {
  EXPECT_THROW(Sinogram({}, 4, 0.5, SinogramStage::Absorption, {}), ValidationError);
  EXPECT_THROW(Sinogram({0.0, 0.1}, 2, 0.5, SinogramStage::Absorption, {1, 2, 3}), ValidationError);
  EXPECT_THROW(Sinogram({0.1, 0.0}, 1, 0.5, SinogramStage::Absorption, {1, 2}), ValidationError);
  EXPECT_THROW(Sinogram({0.0}, 1, 0.0, SinogramStage::Absorption, {1}), ValidationError);
  EXPECT_THROW(Sinogram({0.0}, 1, 0.5, SinogramStage::IntensityLoss, {-0.1}), ValidationError);
  EXPECT_NO_THROW(Sinogram({0.0}, 1, 0.5, SinogramStage::Absorption, {-0.1}));
}

TEST(Core, DetectorOffsetsAreCentered) {
  const Sinogram s = small_sino(SinogramStage::Absorption, 0.0);
  EXPECT_DOUBLE_EQ(s.offset_mm(0), -0.75);
  EXPECT_DOUBLE_EQ(s.offset_mm(3), 0.75);
}

TEST(Core, ImagePixelCenters) {
  const Image2D img(4, 3, 2.0);
  EXPECT_DOUBLE_EQ(img.x_mm(0), -3.0);
  EXPECT_DOUBLE_EQ(img.x_mm(3), 3.0);
  EXPECT_DOUBLE_EQ(img.y_mm(0), 2.0);
  EXPECT_DOUBLE_EQ(img.y_mm(2), -2.0);
  EXPECT_THROW(Image2D(0, 3, 1.0), ValidationError);
  EXPECT_THROW(Image2D(2, 2, 1.0, {1, 2, 3}), ValidationError);
}

TEST(Core, RequireFinite) {
  std::vector<double> v = {1.0, 2.0};
  EXPECT_NO_THROW(require_finite(v, "v"));
  v.push_back(std::nan(""));
  EXPECT_THROW(require_finite(v, "v"), ValidationError);
}

TEST(Core, ParallelForVisitsEveryIndexOnce) {
  for (std::size_t threads : {1u, 3u}) {
    set_num_threads(threads);
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  set_num_threads(1);
}

TEST(Core, ParallelForRethrows) {
  set_num_threads(2);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw ValidationError("boom");
               }),
               ValidationError);
  set_num_threads(1);
}

TEST(Rng, PhiloxKnownAnswers) {
  using W = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  const SeededRng rng(42);
  auto a = rng.stream(RngPurpose::SimulatedNoise, 3, 5);
  auto b = rng.stream(RngPurpose::SimulatedNoise, 3, 5);
  auto c = rng.stream(RngPurpose::SimulatedNoise, 3, 6);
  auto d = rng.derive(1).stream(RngPurpose::SimulatedNoise, 3, 5);
  bool differs_c = false;
  bool differs_d = false;
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next_u32();
    EXPECT_EQ(va, b.next_u32());
    differs_c |= va != c.next_u32();
    differs_d |= va != d.next_u32();
  }
  EXPECT_TRUE(differs_c);
  EXPECT_TRUE(differs_d);
  EXPECT_NE(rng.derive(1).master_seed(), rng.derive(2).master_seed());
  EXPECT_EQ(rng.derive(9).master_seed(), SeededRng(42).derive(9).master_seed());
}

TEST(Rng, UniformAndNormalMoments) {
  auto s = SeededRng(5).stream(RngPurpose::Generic, 0, 0);
  const int n = 200000;
  double su = 0.0, su2 = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    su2 += u * u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
  }
  const double mu = su / n;
  EXPECT_NEAR(mu, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(su2 / n - mu * mu, 1.0 / 12.0, 0.002);
  EXPECT_NEAR(sn / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 0.015);
}

TEST(Rng, Mix64IsABijectionOnSamples) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix64(i));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Dataset, RoundTripThroughFloat32) {
  const Sinogram clean = small_sino(SinogramStage::IntensityLoss, 0.3);
  const Sinogram noisy = small_sino(SinogramStage::IntensityLoss, 0.35);
  const Image2D img(3, 2, 0.5, {1, 2, 3, 4, 5, 6.25});
  const std::vector<DatasetRecord> records = {{RecordRole::CleanSino, clean},
                                              {RecordRole::NoisySino, noisy},
                                              {RecordRole::CleanRecon, img}};
  const auto bytes = encode_dataset(records);
  EXPECT_EQ(bytes.size(), 4u + 1 + 2 + 3 * 10 + 4 * (12 + 12 + 6));
  const auto back = decode_dataset(bytes, {0.5, 0.5});
  ASSERT_EQ(back.size(), 3u);
  const auto& s = std::get<Sinogram>(back[0].object);
  EXPECT_EQ(back[0].role, RecordRole::CleanSino);
  EXPECT_EQ(s.stage(), SinogramStage::IntensityLoss);
  for (std::size_t i = 0; i < s.data().size(); ++i) {
    EXPECT_EQ(s.data()[i], static_cast<double>(static_cast<float>(clean.data()[i])));
  }
  const auto& im = std::get<Image2D>(back[2].object);
  EXPECT_EQ(im.width(), 3u);
  EXPECT_EQ(im.height(), 2u);
  EXPECT_EQ(im.at(1, 2), 6.25);
}

TEST(Dataset, CorruptionIsDetected) {
  const auto bytes = encode_dataset({{RecordRole::CleanSino, small_sino(SinogramStage::Absorption, 1.0)}});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_dataset(bad_magic), BadMagicError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_dataset(bad_version), VersionMismatchError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_dataset(truncated), TruncatedError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_dataset(trailing), FormatError);
  auto bad_role = bytes;
  bad_role[7] = 17;
  EXPECT_THROW(decode_dataset(bad_role), FormatError);
}

TEST(Dataset, FileRoundTripAndMissingFile) {
  const auto path = std::filesystem::temp_directory_path() / "sim2real_core_test.ctns";
  const Image2D img(2, 2, 1.0, {0, 1, 2, 3});
  write_dataset(path, {{RecordRole::NoisyRecon, img}});
  const auto back = read_dataset(path);
  EXPECT_EQ(std::get<Image2D>(back.at(0).object).at(1, 1), 3.0);
  std::filesystem::remove(path);
  EXPECT_THROW(read_dataset(path), IoError);
}
