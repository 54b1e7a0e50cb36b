#include <cmath>
#include <string>

#include <gtest/gtest.h>
#include <png.h>

#include "fixtures.hpp"
#include "matchbench/image.hpp"

using namespace matchbench;

namespace {

void append_png(png_structp png, png_bytep data, png_size_t n) {
  static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<const char*>(data), n);
}

void flush_png(png_structp) {}

// RGB or RGBA PNG written straight through libpng.
std::string encode_color_png(int w, int h, const std::vector<std::uint8_t>& samples, bool alpha) {
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_set_write_fn(png, &out, append_png, flush_png);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               alpha ? PNG_COLOR_TYPE_RGB_ALPHA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int stride = w * (alpha ? 4 : 3);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(samples.data() + static_cast<std::size_t>(y) * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

int luma_by_hand(int r, int g, int b) { return static_cast<int>(std::lround(0.299 * r + 0.587 * g + 0.114 * b)); }

template <class F>
void expect_parse_error(F&& f) {
  try {
    f();
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
}

}  // namespace

TEST(Luma, MatchesWeightedSum) {
  EXPECT_EQ(luma(0, 0, 0), 0);
  EXPECT_EQ(luma(255, 255, 255), 255);
  EXPECT_EQ(luma(255, 0, 0), 76);
  EXPECT_EQ(luma(0, 255, 0), 150);
  EXPECT_EQ(luma(0, 0, 255), 29);
  for (int r = 0; r < 256; r += 5) {
    for (int g = 0; g < 256; g += 7) {
      for (int b = 0; b < 256; b += 11) {
        EXPECT_EQ(luma(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)),
                  luma_by_hand(r, g, b));
      }
    }
  }
}

TEST(Netpbm, AsciiGray) {
  const GrayImage img = decode_netpbm("P2\n# comment\n3 2\n255\n0 1 2\n253 254 255\n");
  ASSERT_EQ(img.width, 3);
  ASSERT_EQ(img.height, 2);
  EXPECT_EQ(img.at(0, 0), 0);
  EXPECT_EQ(img.at(2, 0), 2);
  EXPECT_EQ(img.at(0, 1), 253);
  EXPECT_EQ(img.at(2, 1), 255);
}

TEST(Netpbm, BinaryGray) {
  std::string bytes = "P5 2 2 255\n";
  bytes += std::string("\x00\x7f\x80\xff", 4);
  const GrayImage img = decode_netpbm(bytes);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 127, 128, 255}));
}

TEST(Netpbm, RawBytesMayLookLikeWhitespaceOrComments) {
  // Exactly one whitespace byte separates maxval from the raster.
  std::string bytes = "P5\n2 1\n255\n";
  bytes += std::string("\x0a#", 2);
  const GrayImage img = decode_netpbm(bytes);
  EXPECT_EQ(img.at(0, 0), 10);
  EXPECT_EQ(img.at(1, 0), '#');
}

TEST(Netpbm, SixteenBitBigEndianIsRescaled) {
  std::string bytes = "P5 3 1 65535\n";
  bytes += std::string("\x00\x00\xff\xff\x80\x00", 6);
  const GrayImage img = decode_netpbm(bytes);
  EXPECT_EQ(img.at(0, 0), 0);
  EXPECT_EQ(img.at(1, 0), 255);
  EXPECT_EQ(img.at(2, 0), std::lround(32768.0 * 255.0 / 65535.0));
}

TEST(Netpbm, SmallMaxvalIsRescaled) {
  const GrayImage img = decode_netpbm("P2 4 1 3 0 1 2 3");
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 85, 170, 255}));
}

TEST(Netpbm, ColorConvertsToLuma) {
  std::string bytes = "P6 2 1 255\n";
  bytes += std::string("\xff\x00\x00\x10\x80\xf0", 6);
  const GrayImage img = decode_netpbm(bytes);
  EXPECT_EQ(img.at(0, 0), luma_by_hand(255, 0, 0));
  EXPECT_EQ(img.at(1, 0), luma_by_hand(0x10, 0x80, 0xf0));
  const GrayImage ascii = decode_netpbm("P3 1 1 255 16 128 240");
  EXPECT_EQ(ascii.at(0, 0), luma_by_hand(16, 128, 240));
}

TEST(Netpbm, Malformed) {
  expect_parse_error([] { decode_netpbm("P4 2 2\n"); });
  expect_parse_error([] { decode_netpbm("P5 2 2 255\n\x01"); });
  expect_parse_error([] { decode_netpbm("P2 2 1 255 1"); });
  expect_parse_error([] { decode_netpbm("P2 1 1 10 11"); });
  expect_parse_error([] { decode_netpbm("P2 0 1 255"); });
  expect_parse_error([] { decode_netpbm("P2 1 1 70000 1"); });
  expect_parse_error([] { decode_netpbm("P2 x 1 255 1"); });
  expect_parse_error([] { decode_netpbm("P"); });
}

TEST(Png, GrayRoundTrip) {
  CounterRng rng(50);
  GrayImage img(37, 23);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  EXPECT_EQ(decode_png(encode_png(img)), img);
  EXPECT_EQ(decode_netpbm(encode_pgm(img)), img);
}

TEST(Png, ColorConvertsToLuma) {
  CounterRng rng(51);
  const int w = 9, h = 5;
  for (bool alpha : {false, true}) {
    std::vector<std::uint8_t> samples;
    std::vector<int> expected;
    for (int i = 0; i < w * h; ++i) {
      const int r = static_cast<int>(rng.below(256)), g = static_cast<int>(rng.below(256)),
                b = static_cast<int>(rng.below(256));
      samples.insert(samples.end(), {std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)});
      if (alpha) samples.push_back(static_cast<std::uint8_t>(rng.below(256)));
      expected.push_back(luma_by_hand(r, g, b));
    }
    const GrayImage img = decode_png(encode_color_png(w, h, samples, alpha));
    ASSERT_EQ(img.width, w);
    ASSERT_EQ(img.height, h);
    for (int i = 0; i < w * h; ++i) EXPECT_EQ(img.pixels[static_cast<std::size_t>(i)], expected[i]);
  }
}

TEST(Png, Corrupt) {
  GrayImage img(8, 8, 100);
  std::string bytes = encode_png(img);
  expect_parse_error([&] { decode_png(bytes.substr(0, bytes.size() / 2)); });
  expect_parse_error([] { decode_png("not a png at all"); });
}

TEST(ImageFiles, ReadDispatchesOnContent) {
  const std::string dir = fixtures::temp_dir("image");
  GrayImage img(16, 4);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 3);
  write_image(img, dir + "/a.png");
  write_image(img, dir + "/b.pgm");
  EXPECT_EQ(read_image(dir + "/a.png"), img);
  EXPECT_EQ(read_image(dir + "/b.pgm"), img);
  write_text_file(dir + "/c.png", "garbage");
  expect_parse_error([&] { read_image(dir + "/c.png"); });
  EXPECT_THROW(read_image(dir + "/missing.png"), Error);
}
