#include "sim2real/rng.hpp"

#include <cmath>

#include "sim2real/core.hpp"

namespace sim2real {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                    std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void RandomStream::refill() {
  buffer_ = philox4x32({block_, pixel_, angle_, purpose_}, key_);
  ++block_;
  used_ = 0;
}

std::uint32_t RandomStream::next_u32() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double RandomStream::uniform() {
  const std::uint32_t a = next_u32() >> 5;
  const std::uint32_t b = next_u32() >> 6;
  return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) *
         (1.0 / 9007199254740992.0);
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

SeededRng SeededRng::derive(std::uint64_t tag) const {
  return SeededRng(mix64(seed_ ^ mix64(tag + 0x5851F42D4C957F2Dull)));
}

RandomStream SeededRng::stream(RngPurpose purpose, std::uint32_t angle,
                               std::uint32_t pixel) const {
  return stream(static_cast<std::uint32_t>(purpose), angle, pixel);
}

RandomStream SeededRng::stream(std::uint32_t purpose, std::uint32_t angle,
                               std::uint32_t pixel) const {
  return RandomStream({static_cast<std::uint32_t>(seed_),
                       static_cast<std::uint32_t>(seed_ >> 32)},
                      purpose, angle, pixel);
}

double SeededRng::uniform(RngPurpose purpose, std::uint32_t angle,
                          std::uint32_t pixel) const {
  return stream(purpose, angle, pixel).uniform();
}

}  // namespace sim2real
