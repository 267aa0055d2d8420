#include "sim2real/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <utility>

namespace sim2real {

namespace {

constexpr char kMagic[4] = {'C', 'T', 'N', 'S'};
constexpr std::size_t kHeaderSize = 4 + 1 + 2;
constexpr std::size_t kRecordHeaderSize = 1 + 1 + 4 + 4;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, double value) {
  const float f = static_cast<float>(value);
  if (!std::isfinite(f)) {
    throw ValidationError("dataset payload value is not finite in 32-bit float");
  }
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

struct Dims {
  std::uint32_t d0;
  std::uint32_t d1;
  bool operator==(const Dims&) const = default;
};

}  // namespace

const char* to_string(RecordRole role) {
  switch (role) {
    case RecordRole::CleanSino:
      return "clean_sino";
    case RecordRole::NoisySino:
      return "noisy_sino";
    case RecordRole::CleanRecon:
      return "clean_recon";
    case RecordRole::NoisyRecon:
      return "noisy_recon";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_dataset(const std::vector<DatasetRecord>& records) {
  if (records.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("dataset holds at most 65535 records");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kDatasetVersion);
  put_u16(out, static_cast<std::uint16_t>(records.size()));

  std::map<RecordRole, Dims> dims_by_role;
  for (const auto& rec : records) {
    Dims dims{};
    std::uint8_t stage = 0;
    std::span<const double> payload;
    if (const auto* sino = std::get_if<Sinogram>(&rec.object)) {
      dims = {static_cast<std::uint32_t>(sino->n_angles()),
              static_cast<std::uint32_t>(sino->n_pixels())};
      stage = static_cast<std::uint8_t>(sino->stage());
      payload = sino->data();
    } else {
      const auto& img = std::get<Image2D>(rec.object);
      dims = {static_cast<std::uint32_t>(img.height()),
              static_cast<std::uint32_t>(img.width())};
      stage = kImageStageByte;
      payload = img.data();
    }
    auto [it, inserted] = dims_by_role.emplace(rec.role, dims);
    if (!inserted && !(it->second == dims)) {
      throw ValidationError(std::string("inconsistent dimensions for role ") +
                            to_string(rec.role));
    }
    out.push_back(static_cast<std::uint8_t>(rec.role));
    out.push_back(stage);
    put_u32(out, dims.d0);
    put_u32(out, dims.d1);
    for (double v : payload) put_f32(out, v);
  }
  return out;
}

std::vector<DatasetRecord> decode_dataset(const std::vector<std::uint8_t>& bytes,
                                          const DatasetGeometryHints& hints) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagicError("dataset does not start with CTNS magic");
  }
  if (bytes.size() < kHeaderSize) throw TruncatedError("dataset header truncated");
  if (bytes[4] != kDatasetVersion) {
    throw VersionMismatchError("unsupported dataset version " +
                               std::to_string(bytes[4]));
  }
  const std::size_t count = static_cast<std::size_t>(bytes[5]) |
                            (static_cast<std::size_t>(bytes[6]) << 8);
  std::vector<DatasetRecord> records;
  records.reserve(count);
  std::size_t pos = kHeaderSize;
  for (std::size_t r = 0; r < count; ++r) {
    if (bytes.size() - pos < kRecordHeaderSize) {
      throw TruncatedError("dataset record header truncated");
    }
    const std::uint8_t role = bytes[pos];
    const std::uint8_t stage = bytes[pos + 1];
    const std::uint32_t d0 = get_u32(&bytes[pos + 2]);
    const std::uint32_t d1 = get_u32(&bytes[pos + 6]);
    pos += kRecordHeaderSize;
    if (role > static_cast<std::uint8_t>(RecordRole::NoisyRecon)) {
      throw FormatError("unknown record role " + std::to_string(role));
    }
    if (stage > kImageStageByte) {
      throw FormatError("unknown record stage " + std::to_string(stage));
    }
    const std::uint64_t n = static_cast<std::uint64_t>(d0) * d1;
    if ((bytes.size() - pos) / 4 < n) {
      throw TruncatedError("dataset payload truncated");
    }
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(&bytes[pos])));
      pos += 4;
    }
    const auto rec_role = static_cast<RecordRole>(role);
    if (stage == kImageStageByte) {
      records.push_back({rec_role, Image2D(d1, d0, hints.image_pixel_size_mm,
                                           std::move(data))});
    } else {
      records.push_back({rec_role, Sinogram(half_turn_angles(d0), d1,
                                            hints.det_pixel_size_mm,
                                            static_cast<SinogramStage>(stage),
                                            std::move(data))});
    }
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes after last record");
  return records;
}

void write_dataset(const std::filesystem::path& path,
                   const std::vector<DatasetRecord>& records) {
  const auto bytes = encode_dataset(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path,
                                        const DatasetGeometryHints& hints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_dataset(bytes, hints);
}

}  // namespace sim2real
