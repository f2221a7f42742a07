#include "tvspec/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tvspec {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t count) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + count > cur->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->bytes.data() + cur->pos, count);
  cur->pos += count;
}

[[noreturn]] void png_throw(png_structp, png_const_charp msg) {
  throw std::runtime_error(std::string("PNG: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
  if (!png) throw std::runtime_error("PNG: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("PNG: cannot create info struct");
  }
  ReadCursor cursor{bytes, 0};
  RasterImage img;
  try {
    png_set_read_fn(png, &cursor, png_read_from_span);
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
      png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    if (img.channels != 1 && img.channels != 3) {
      throw std::runtime_error("PNG: unsupported channel layout");
    }
    const std::size_t stride = png_get_rowbytes(png, info);
    img.pixels.resize(stride * img.height);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

// Netpbm header token, skipping whitespace and '#' comments.
std::string pnm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    tok.push_back(static_cast<char>(bytes[pos++]));
  }
  if (tok.empty()) throw std::runtime_error("PNM: truncated header");
  return tok;
}

int pnm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const std::string tok = pnm_token(bytes, pos);
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); })) {
    throw std::runtime_error("PNM: malformed header value '" + tok + "'");
  }
  return std::stoi(tok);
}

RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const std::string magic = pnm_token(bytes, pos);
  const bool ascii = magic == "P2" || magic == "P3";
  const bool binary = magic == "P5" || magic == "P6";
  if (!ascii && !binary) throw std::runtime_error("PNM: unsupported magic " + magic);
  RasterImage img;
  img.channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  img.width = pnm_int(bytes, pos);
  img.height = pnm_int(bytes, pos);
  const int maxval = pnm_int(bytes, pos);
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw std::runtime_error("PNM: invalid dimensions or maxval");
  }
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height * img.channels;
  img.pixels.resize(count);
  auto rescale = [maxval](int v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0, maxval) / maxval));
  };
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) img.pixels[i] = rescale(pnm_int(bytes, pos));
    return img;
  }
  ++pos;  // single whitespace after maxval
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  if (pos + count * bpp > bytes.size()) throw std::runtime_error("PNM: truncated pixel data");
  for (std::size_t i = 0; i < count; ++i) {
    int v = bytes[pos + i * bpp];
    if (bpp == 2) v = (v << 8) | bytes[pos + i * bpp + 1];
    img.pixels[i] = maxval == 255 ? static_cast<std::uint8_t>(v) : rescale(v);
  }
  return img;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

std::vector<std::uint8_t> encode_png(int width, int height, int channels,
                                     std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels) {
    throw std::invalid_argument("encode_png: pixel buffer size mismatch");
  }
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
  if (!png) throw std::runtime_error("PNG: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(pixels.data() +
                                               static_cast<std::size_t>(y) * width * channels));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::equal(kPngSignature, kPngSignature + 8, bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '2' && bytes[1] <= '6' &&
      bytes[1] != '4') {
    return decode_pnm(bytes);
  }
  throw std::runtime_error("decode_image: unrecognised image format");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

RasterImage read_image_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

ImageGrid to_luma(const RasterImage& img) {
  ImageGrid out(img.width, img.height);
  auto d = out.data();
  if (img.channels == 1) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = img.pixels[i];
  } else if (img.channels == 3) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] +
             0.114 * img.pixels[3 * i + 2];
    }
  } else {
    throw std::invalid_argument("to_luma: expected 1 or 3 channels");
  }
  return out;
}

std::vector<std::uint8_t> encode_png_gray8(int width, int height,
                                           std::span<const std::uint8_t> pixels) {
  return encode_png(width, height, 1, pixels);
}

std::vector<std::uint8_t> encode_png_rgb8(int width, int height,
                                          std::span<const std::uint8_t> pixels) {
  return encode_png(width, height, 3, pixels);
}

std::vector<std::uint8_t> encode_pgm(int width, int height, std::span<const std::uint8_t> pixels) {
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

DisplayScaling minmax_scaling(const ImageGrid& u) {
  const double lo = min_value(u);
  const double hi = max_value(u);
  DisplayScaling s;
  s.offset = lo;
  s.scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  return s;
}

std::vector<std::uint8_t> to_gray8(const ImageGrid& u, const DisplayScaling& s) {
  std::vector<std::uint8_t> px(u.size());
  auto d = u.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = std::round((d[i] - s.offset) * s.scale);
    px[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return px;
}

void write_png(const std::filesystem::path& path, const ImageGrid& u, const DisplayScaling& s) {
  const auto px = to_gray8(u, s);
  write_file_bytes(path, encode_png_gray8(u.width(), u.height(), px));
}

}  // namespace tvspec
