#pragma once

#include <array>
#include <cstdint>

namespace sim2real {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Identifies what a random stream is used for, so that independent noise
/// sources at the same detector coordinate never share draws.
enum class RngPurpose : std::uint32_t {
  Generic = 0,
  PhantomLayout = 1,
  CleanMeasurement = 2,
  SurrogateMeasurement = 3,
  SimulatedNoise = 4,
  ElectronicNoise = 5,
  DetectorMaps = 6,
  WeightInit = 7,
  PatchSampling = 8,
  DataSplit = 9,
};

/// Sequential draws from one (key, purpose, angle, pixel) coordinate.
///
/// The 128-bit Philox counter is (draw block, pixel, angle, purpose), so a
/// stream is fully determined by its coordinates and never depends on
/// which thread evaluates it or in what order.
class RandomStream {
 public:
  RandomStream(std::array<std::uint32_t, 2> key, std::uint32_t purpose,
               std::uint32_t angle, std::uint32_t pixel)
      : key_(key), purpose_(purpose), angle_(angle), pixel_(pixel) {}

  std::uint32_t next_u32();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (one value per call; the pair's second
  /// half is cached).
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t purpose_;
  std::uint32_t angle_;
  std::uint32_t pixel_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Counter-based generator keyed by a 64-bit master seed.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t master_seed) : seed_(master_seed) {}

  std::uint64_t master_seed() const { return seed_; }

  /// Independent generator for a sub-task (for example one phantom slice).
  SeededRng derive(std::uint64_t tag) const;

  RandomStream stream(RngPurpose purpose, std::uint32_t angle,
                      std::uint32_t pixel) const;
  RandomStream stream(std::uint32_t purpose, std::uint32_t angle,
                      std::uint32_t pixel) const;

  /// First uniform draw of the given stream.
  double uniform(RngPurpose purpose, std::uint32_t angle,
                 std::uint32_t pixel) const;

 private:
  std::uint64_t seed_;
};

/// splitmix64 finalizer, used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace sim2real
