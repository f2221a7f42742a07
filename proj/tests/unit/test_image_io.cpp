#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "helpers.hpp"
#include "tvspec/image_io.hpp"

using namespace tvspec;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(TVSPEC_TEST_DATA) / "png" / name;
}

// Grey ramp the PNG fixtures are built from (tests/oracles/png_fixtures.py).
std::uint8_t fixture_grey(int x, int y) { return static_cast<std::uint8_t>(x * 30 + y * 7); }

std::vector<std::uint8_t> ramp(int w, int h, int channels) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * channels);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>((i * 37 + 11) % 256);
  return px;
}

}  // namespace

TEST(Luma, Bt601Weights) {
  const RasterImage red{1, 1, 3, {255, 0, 0}};
  EXPECT_DOUBLE_EQ(to_luma(red).at(0, 0), 0.299 * 255);
  const RasterImage mix{2, 1, 3, {10, 20, 30, 255, 255, 255}};
  const ImageGrid l = to_luma(mix);
  EXPECT_DOUBLE_EQ(l.at(0, 0), 0.299 * 10 + 0.587 * 20 + 0.114 * 30);
  EXPECT_NEAR(l.at(1, 0), 255.0, 1e-12);
  const RasterImage grey{2, 1, 1, {7, 200}};
  EXPECT_EQ(to_luma(grey), ImageGrid(2, 1, {7.0, 200.0}));
  EXPECT_THROW(to_luma(RasterImage{1, 1, 2, {1, 2}}), std::invalid_argument);
}

TEST(Png, Gray8RoundTrip) {
  const auto px = ramp(13, 6, 1);
  const RasterImage img = decode_image(encode_png_gray8(13, 6, px));
  EXPECT_EQ(img.width, 13);
  EXPECT_EQ(img.height, 6);
  EXPECT_EQ(img.channels, 1);
  EXPECT_EQ(img.pixels, px);
}

TEST(Png, Rgb8RoundTrip) {
  const auto px = ramp(5, 9, 3);
  const RasterImage img = decode_image(encode_png_rgb8(5, 9, px));
  EXPECT_EQ(img.channels, 3);
  EXPECT_EQ(img.pixels, px);
}

TEST(Png, SixteenBitKeepsHighByte) {
  const RasterImage img = read_image_file(fixture("gray16.png"));
  ASSERT_EQ(img.channels, 1);
  ASSERT_EQ(img.width, 7);
  ASSERT_EQ(img.height, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(img.pixels[y * 7 + x], fixture_grey(x, y));
}

TEST(Png, PaletteAndAlphaExpandToRgb) {
  for (const char* name : {"palette.png", "rgba.png"}) {
    const RasterImage img = read_image_file(fixture(name));
    ASSERT_EQ(img.channels, 3) << name;
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 7; ++x) {
        const std::size_t i = 3 * (y * 7 + x);
        EXPECT_EQ(img.pixels[i], fixture_grey(x, y)) << name;
        EXPECT_EQ(img.pixels[i + 1], 255 - fixture_grey(x, y)) << name;
        EXPECT_EQ(img.pixels[i + 2], x * 11) << name;
      }
  }
}

TEST(Png, BilevelExpandsTo8Bit) {
  const RasterImage img = read_image_file(fixture("bilevel.png"));
  ASSERT_EQ(img.channels, 1);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(img.pixels[y * 7 + x], (x + y) % 2 ? 255 : 0);
}

TEST(Png, NaturalImagesDecode) {
  for (const char* name : {"camera", "astronaut", "moon"}) {
    const RasterImage img = read_image_file(test::natural_image(name));
    EXPECT_GE(img.width, 256) << name;
    EXPECT_GE(img.height, 256) << name;
    const ImageGrid l = to_luma(img);
    EXPECT_GE(min_value(l), 0.0);
    EXPECT_LE(max_value(l), 255.0 + 1e-9);
  }
}

TEST(Pnm, BinaryAndAscii) {
  const auto px = ramp(4, 3, 1);
  const RasterImage p5 = decode_image(encode_pgm(4, 3, px));
  EXPECT_EQ(p5.pixels, px);
  const RasterImage p2 = decode_image(bytes_of("P2\n# comment\n3 2\n255\n0 1 2\n253 254 255\n"));
  EXPECT_EQ(p2.pixels, (std::vector<std::uint8_t>{0, 1, 2, 253, 254, 255}));
  const RasterImage p3 = decode_image(bytes_of("P3 1 2 15 15 0 0 0 15 5"));
  EXPECT_EQ(p3.channels, 3);
  EXPECT_EQ(p3.pixels, (std::vector<std::uint8_t>{255, 0, 0, 0, 255, 85}));
  std::string p6 = "P6\n2 1\n255\n";
  p6 += std::string{'\x01', '\x02', '\x03', '\xfd', '\xfe', '\xff'};
  EXPECT_EQ(decode_image(bytes_of(p6)).pixels, (std::vector<std::uint8_t>{1, 2, 3, 253, 254, 255}));
  std::string wide = "P5 2 1 65535\n";
  wide += std::string{'\xff', '\xff', '\x80', '\x00'};
  EXPECT_EQ(decode_image(bytes_of(wide)).pixels, (std::vector<std::uint8_t>{255, 128}));
}

TEST(Decode, Errors) {
  EXPECT_THROW(decode_image(bytes_of("GIF89a")), std::runtime_error);
  EXPECT_THROW(decode_image(bytes_of("")), std::runtime_error);
  EXPECT_THROW(decode_image(bytes_of("P5 4 4 255\n1234")), std::runtime_error);
  EXPECT_THROW(decode_image(bytes_of("P2 2 x 255")), std::runtime_error);
  EXPECT_THROW(decode_image(bytes_of("P2 2 2 0 0 0 0 0")), std::runtime_error);
  auto png = encode_png_gray8(8, 8, ramp(8, 8, 1));
  png.resize(png.size() / 2);
  EXPECT_THROW(decode_image(png), std::runtime_error);
  EXPECT_THROW(read_image_file("/nonexistent/tvspec.png"), std::runtime_error);
}

TEST(Display, MinMaxScaling) {
  const ImageGrid u(3, 1, {-1.0, 0.0, 3.0});
  const DisplayScaling s = minmax_scaling(u);
  EXPECT_EQ(s.offset, -1.0);
  EXPECT_DOUBLE_EQ(s.scale, 255.0 / 4.0);
  EXPECT_EQ(to_gray8(u, s), (std::vector<std::uint8_t>{0, 64, 255}));
  const DisplayScaling flat = minmax_scaling(ImageGrid(2, 2, 5.0));
  EXPECT_EQ(to_gray8(ImageGrid(2, 2, 5.0), flat), (std::vector<std::uint8_t>(4, 0)));
  EXPECT_EQ(to_gray8(ImageGrid(2, 1, {-10.0, 10.0}), s), (std::vector<std::uint8_t>{0, 255}));
}

TEST(Display, WritePng) {
  const auto dir = test::temp_dir("image_io");
  const ImageGrid u(4, 2, {0, 1, 2, 3, 4, 5, 6, 7});
  write_png(dir / "u.png", u, minmax_scaling(u));
  const RasterImage back = read_image_file(dir / "u.png");
  EXPECT_EQ(back.pixels, to_gray8(u, minmax_scaling(u)));
  EXPECT_THROW(write_png(dir / "missing" / "u.png", u, {}), std::runtime_error);
}
