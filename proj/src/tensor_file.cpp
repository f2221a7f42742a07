#include "tvspec/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

#include "tvspec/image_io.hpp"

namespace tvspec {

namespace {

constexpr char kMagic[4] = {'T', 'V', 'S', 'B'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

}  // namespace

ImageGrid BandTensor::plane(int band) const {
  if (band < 0 || band >= bands) {
    throw std::out_of_range("band " + std::to_string(band) + " of " + std::to_string(bands));
  }
  std::vector<double> d(plane_size());
  const std::size_t off = band * plane_size();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = values[off + i];
  return ImageGrid(width, height, std::move(d));
}

std::vector<ImageGrid> BandTensor::planes() const {
  std::vector<ImageGrid> out;
  out.reserve(bands);
  for (int k = 0; k < bands; ++k) out.push_back(plane(k));
  return out;
}

BandTensor BandTensor::from_grids(const std::vector<ImageGrid>& grids) {
  if (grids.empty()) throw std::invalid_argument("BandTensor: no planes");
  BandTensor t;
  t.bands = static_cast<int>(grids.size());
  t.width = grids.front().width();
  t.height = grids.front().height();
  t.values.reserve(t.bands * t.plane_size());
  for (const auto& g : grids) {
    if (!g.same_shape(grids.front())) throw std::invalid_argument("BandTensor: planes differ in shape");
    for (double v : g.data()) t.values.push_back(static_cast<float>(v));
  }
  return t;
}

std::vector<std::uint8_t> encode_band_tensor(const BandTensor& t) {
  if (t.bands < 1 || t.height < 1 || t.width < 1) {
    throw std::invalid_argument("encode_band_tensor: empty tensor");
  }
  if (t.values.size() != t.bands * t.plane_size()) {
    throw std::invalid_argument("encode_band_tensor: value count does not match dims");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kTensorHeaderBytes + 4 * t.values.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kTensorVersion);
  put_u32(out, kTensorDtypeFloat32);
  put_u32(out, static_cast<std::uint32_t>(t.bands));
  put_u32(out, static_cast<std::uint32_t>(t.height));
  put_u32(out, static_cast<std::uint32_t>(t.width));
  for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

BandTensor decode_band_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTensorHeaderBytes) {
    throw std::runtime_error("band tensor: truncated header (" + std::to_string(bytes.size()) +
                             " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw std::runtime_error("band tensor: bad magic");
  const auto version = get_u32(bytes, 4);
  if (version != kTensorVersion) {
    throw std::runtime_error("band tensor: unsupported version " + std::to_string(version));
  }
  const auto dtype = get_u32(bytes, 8);
  if (dtype != kTensorDtypeFloat32) {
    throw std::runtime_error("band tensor: unsupported dtype " + std::to_string(dtype));
  }
  const std::uint64_t b = get_u32(bytes, 12), h = get_u32(bytes, 16), w = get_u32(bytes, 20);
  if (b == 0 || h == 0 || w == 0 || b > (1u << 20) || h > (1u << 20) || w > (1u << 20)) {
    throw std::runtime_error("band tensor: invalid dims");
  }
  const std::uint64_t count = b * h * w;
  if (bytes.size() - kTensorHeaderBytes != 4 * count) {
    throw std::runtime_error("band tensor: payload is " +
                             std::to_string(bytes.size() - kTensorHeaderBytes) +
                             " bytes, header declares " + std::to_string(4 * count));
  }
  BandTensor t;
  t.bands = static_cast<int>(b);
  t.height = static_cast<int>(h);
  t.width = static_cast<int>(w);
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.values[i] = std::bit_cast<float>(get_u32(bytes, kTensorHeaderBytes + 4 * i));
  }
  return t;
}

void write_band_tensor(const std::filesystem::path& path, const BandTensor& t) {
  write_file_bytes(path, encode_band_tensor(t));
}

BandTensor read_band_tensor(const std::filesystem::path& path) {
  try {
    return decode_band_tensor(read_file_bytes(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace tvspec
