#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tvspec/image.hpp"

namespace tvspec {

/// 8-bit raster as decoded from disk: 1 (gray) or 3 (RGB) interleaved channels.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Decodes PNG (any bit depth/colour type, alpha dropped) or binary/ASCII PGM
/// and PPM. Throws std::runtime_error on undecodable input.
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage read_image_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// ITU-R BT.601 luma, unscaled: 0.299 R + 0.587 G + 0.114 B.
ImageGrid to_luma(const RasterImage& img);

std::vector<std::uint8_t> encode_png_gray8(int width, int height,
                                           std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> encode_png_rgb8(int width, int height,
                                          std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> encode_pgm(int width, int height, std::span<const std::uint8_t> pixels);

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

struct DisplayScaling {
  double offset = 0.0;  // pixel = round((value - offset) * scale)
  double scale = 1.0;
};

/// Min-max scaling of an arbitrary grid into [0, 255]. Constant grids map to 0.
DisplayScaling minmax_scaling(const ImageGrid& u);
std::vector<std::uint8_t> to_gray8(const ImageGrid& u, const DisplayScaling& s);

void write_png(const std::filesystem::path& path, const ImageGrid& u, const DisplayScaling& s);

}  // namespace tvspec
