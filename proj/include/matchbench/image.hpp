#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace matchbench {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// luma = round(0.299 R + 0.587 G + 0.114 B) on 8-bit channels.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Decodes P2/P5 (gray) and P3/P6 (color) netpbm, maxval 1..65535.
/// Samples are rescaled to 8 bits as round(v * 255 / maxval).
GrayImage decode_netpbm(std::string_view bytes, const std::string& source = "<memory>");
GrayImage decode_png(std::string_view bytes, const std::string& source = "<memory>");

/// Dispatches on the file signature (netpbm or PNG).
GrayImage read_image(const std::string& path);

std::string encode_pgm(const GrayImage& image);
std::string encode_png(const GrayImage& image);
/// Writes PNG if the path ends in ".png", binary PGM otherwise.
void write_image(const GrayImage& image, const std::string& path);

}  // namespace matchbench
