#include "covest/idx.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <zlib.h>

namespace covest {

namespace {

constexpr std::uint8_t kUnsignedByte = 0x08;

bool is_gzip(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw IdxError("zlib: inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());

  std::vector<std::uint8_t> out;
  std::uint8_t buffer[1 << 16];
  int status = Z_OK;
  while (status != Z_STREAM_END) {
    zs.next_out = buffer;
    zs.avail_out = sizeof(buffer);
    status = inflate(&zs, Z_NO_FLUSH);
    if (status != Z_OK && status != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IdxError("gzip stream is corrupt or truncated");
    }
    out.insert(out.end(), buffer, buffer + (sizeof(buffer) - zs.avail_out));
    if (status == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw IdxError("gzip stream is truncated");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> gzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw IdxError("zlib: deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())));
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int status = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (status != Z_STREAM_END) throw IdxError("zlib: deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

IdxTensor parse_raw(std::span<const std::uint8_t> b) {
  if (b.size() < 4) throw IdxError("IDX header is truncated");
  if (b[0] != 0 || b[1] != 0) throw IdxError("bad IDX magic: first two bytes must be zero");
  if (b[2] != kUnsignedByte) {
    char code[8];
    std::snprintf(code, sizeof(code), "0x%02x", static_cast<unsigned>(b[2]));
    throw IdxError(std::string("unsupported IDX type code ") + code + " (only unsigned byte 0x08)");
  }
  const std::size_t ndim = b[3];
  if (ndim == 0) throw IdxError("IDX file declares zero dimensions");
  const std::size_t header = 4 + 4 * ndim;
  if (b.size() < header) throw IdxError("IDX dimension table is truncated");

  IdxTensor t;
  std::uint64_t count = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    const std::uint32_t size = read_be32(b, 4 + 4 * d);
    t.shape.push_back(size);
    count *= size;
    if (count > std::numeric_limits<std::uint32_t>::max() * std::uint64_t{16}) {
      throw IdxError("IDX tensor is implausibly large");
    }
  }
  const std::size_t payload = b.size() - header;
  if (payload < count) {
    throw IdxError("IDX payload is truncated: expected " + std::to_string(count) + " bytes, got " +
                   std::to_string(payload));
  }
  if (payload > count) {
    throw IdxError("IDX payload has " + std::to_string(payload - count) + " trailing bytes");
  }
  t.data.assign(b.begin() + static_cast<std::ptrdiff_t>(header), b.end());
  return t;
}

}  // namespace

std::size_t IdxTensor::element_count() const noexcept {
  std::size_t c = shape.empty() ? 0 : 1;
  for (auto s : shape) c *= s;
  return c;
}

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (is_gzip(bytes)) {
    const std::vector<std::uint8_t> raw = gunzip(bytes);
    return parse_raw(raw);
  }
  return parse_raw(bytes);
}

IdxTensor load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open IDX file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes);
  } catch (const IdxError& e) {
    throw IdxError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor, bool compress) {
  if (tensor.shape.empty() || tensor.shape.size() > 255) {
    throw IdxError("IDX tensors need between 1 and 255 dimensions");
  }
  if (tensor.element_count() != tensor.data.size()) {
    throw IdxError("IDX shape does not match payload size");
  }
  std::vector<std::uint8_t> out{0, 0, kUnsignedByte, static_cast<std::uint8_t>(tensor.shape.size())};
  for (auto s : tensor.shape) write_be32(out, s);
  out.insert(out.end(), tensor.data.begin(), tensor.data.end());
  return compress ? gzip(out) : out;
}

void save_idx(const std::filesystem::path& path, const IdxTensor& tensor, bool compress) {
  const std::vector<std::uint8_t> bytes = encode_idx(tensor, compress);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IdxError("cannot write IDX file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IdxError("write failed for " + path.string());
}

}  // namespace covest
