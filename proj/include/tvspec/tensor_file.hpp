#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tvspec/image.hpp"

namespace tvspec {

// BandTensorFile layout, all integers little-endian uint32:
//   bytes 0-3   magic "TVSB"
//   bytes 4-7   version (1)
//   bytes 8-11  dtype (1 = IEEE-754 binary32)
//   bytes 12-23 bands, height, width
// followed by bands*height*width little-endian float32 values, band-major then
// row-major.

inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::uint32_t kTensorDtypeFloat32 = 1;
inline constexpr std::size_t kTensorHeaderBytes = 24;

struct BandTensor {
  int bands = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  ImageGrid plane(int band) const;
  std::vector<ImageGrid> planes() const;

  /// Rounds each grid to float32. All grids must share one shape.
  static BandTensor from_grids(const std::vector<ImageGrid>& grids);

  friend bool operator==(const BandTensor&, const BandTensor&) = default;
};

std::vector<std::uint8_t> encode_band_tensor(const BandTensor& t);

/// Throws std::runtime_error on a bad magic, version, dtype or a payload whose
/// size disagrees with the header.
BandTensor decode_band_tensor(std::span<const std::uint8_t> bytes);

void write_band_tensor(const std::filesystem::path& path, const BandTensor& t);
BandTensor read_band_tensor(const std::filesystem::path& path);

}  // namespace tvspec
