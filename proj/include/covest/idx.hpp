#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace covest {

class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unsigned-byte IDX tensor: row-major payload with its dimensions.
struct IdxTensor {
  std::vector<std::uint32_t> shape;
  std::vector<std::uint8_t> data;

  std::size_t element_count() const noexcept;
};

/// Parses an in-memory IDX file: 00 00 <type> <ndim>, ndim big-endian u32
/// sizes, then the payload. Only type 0x08 (unsigned byte) is supported.
/// Gzip input (1F 8B) is inflated first. Throws IdxError on any defect.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes);

IdxTensor load_idx(const std::filesystem::path& path);

/// Serializes to the IDX byte layout, gzip-compressed when `gzip` is set.
std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor, bool gzip = false);

void save_idx(const std::filesystem::path& path, const IdxTensor& tensor, bool gzip = false);

}  // namespace covest
