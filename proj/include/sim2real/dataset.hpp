#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sim2real/core.hpp"

namespace sim2real {

enum class RecordRole : std::uint8_t {
  CleanSino = 0,
  NoisySino = 1,
  CleanRecon = 2,
  NoisyRecon = 3,
};

const char* to_string(RecordRole role);

struct DatasetRecord {
  RecordRole role;
  std::variant<Sinogram, Image2D> object;
};

/// Geometry that the on-disk layout does not carry. Sinograms are read back
/// with uniform half-turn angles.
struct DatasetGeometryHints {
  double det_pixel_size_mm = 1.0;
  double image_pixel_size_mm = 1.0;
};

/// Binary layout (all integers little-endian):
///   "CTNS" | u8 version=1 | u16 record count |
///   per record: u8 role | u8 stage | u32 dim0 | u32 dim1 | dim0*dim1 f32
/// Sinograms store (n_angles, n_pixels) with their stage byte; images store
/// (height, width) with stage byte kImageStageByte.
inline constexpr std::uint8_t kDatasetVersion = 1;
inline constexpr std::uint8_t kImageStageByte = 3;

/// Serialized bytes for `records`. Validates finiteness in 32-bit and
/// per-role dimension consistency.
std::vector<std::uint8_t> encode_dataset(const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> decode_dataset(const std::vector<std::uint8_t>& bytes,
                                          const DatasetGeometryHints& hints = {});

void write_dataset(const std::filesystem::path& path,
                   const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path,
                                        const DatasetGeometryHints& hints = {});

}  // namespace sim2real
