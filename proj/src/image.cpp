#include "matchbench/image.hpp"

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>

#include <png.h>

#include "matchbench/common.hpp"

namespace matchbench {

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::min(255.0, std::round(y)));
}

namespace {

class NetpbmReader {
 public:
  NetpbmReader(std::string_view bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  // Header tokens are separated by whitespace; '#' starts a comment that
  // runs to the end of the line.
  unsigned long header_int(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ParseError(source_, 0, std::string("expected ") + what);
    }
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 100000000UL) throw ParseError(source_, 0, std::string(what) + " out of range");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from a binary raster.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ParseError(source_, 0, "missing whitespace before raster");
    }
    ++pos_;
  }

  unsigned binary_sample(bool wide) {
    const std::size_t need = wide ? 2 : 1;
    if (pos_ + need > bytes_.size()) throw ParseError(source_, 0, "truncated raster");
    unsigned v = static_cast<unsigned char>(bytes_[pos_]);
    if (wide) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + 1]);
    pos_ += need;
    return v;
  }

  std::string_view magic() {
    if (bytes_.size() < 2) throw ParseError(source_, 0, "file too short");
    pos_ = 2;
    return bytes_.substr(0, 2);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::uint8_t rescale(unsigned v, unsigned maxval, const std::string& source) {
  if (v > maxval) throw ParseError(source, 0, "sample exceeds maxval");
  if (maxval == 255) return static_cast<std::uint8_t>(v);
  return static_cast<std::uint8_t>(std::lround(static_cast<double>(v) * 255.0 / maxval));
}

}  // namespace

GrayImage decode_netpbm(std::string_view bytes, const std::string& source) {
  NetpbmReader reader(bytes, source);
  const std::string_view magic = reader.magic();
  const bool ascii = magic == "P2" || magic == "P3";
  const bool color = magic == "P3" || magic == "P6";
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw ParseError(source, 0, "unsupported netpbm magic");
  }
  const auto width = reader.header_int("width");
  const auto height = reader.header_int("height");
  const auto maxval = reader.header_int("maxval");
  if (width == 0 || height == 0) throw ParseError(source, 0, "zero image dimension");
  if (maxval == 0 || maxval > 65535) throw ParseError(source, 0, "maxval must be in 1..65535");
  if (width * height > 400000000UL) throw ParseError(source, 0, "image too large");

  GrayImage img(static_cast<int>(width), static_cast<int>(height));
  const auto max = static_cast<unsigned>(maxval);
  const bool wide = max > 255;
  if (!ascii) reader.single_whitespace();

  auto next_sample = [&]() -> std::uint8_t {
    const unsigned v = ascii ? static_cast<unsigned>(reader.header_int("sample"))
                             : reader.binary_sample(wide);
    return rescale(v, max, source);
  };

  for (auto& px : img.pixels) {
    if (color) {
      const std::uint8_t r = next_sample();
      const std::uint8_t g = next_sample();
      const std::uint8_t b = next_sample();
      px = luma(r, g, b);
    } else {
      px = next_sample();
    }
  }
  return img;
}

namespace {

struct PngMemoryReader {
  std::string_view bytes;
  std::size_t pos = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
  if (src->pos + count > src->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->bytes.data() + src->pos, count);
  src->pos += count;
}

void png_write_to_string(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), count);
}

void png_flush_noop(png_structp) {}

}  // namespace

GrayImage decode_png(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw ParseError(source, 0, "not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::kIo, "libpng initialization failed");
  }

  PngMemoryReader reader{bytes, 0};
  GrayImage img;
  std::vector<png_byte> row_data;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(source, 0, "corrupt PNG stream");
  }
  png_set_read_fn(png, &reader, png_read_from_memory);
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) png_error(png, "unexpected channel layout");

  const png_size_t rowbytes = png_get_rowbytes(png, info);
  row_data.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = row_data.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img = GrayImage(static_cast<int>(w), static_cast<int>(h));
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      const png_byte* p = rows[y] + x * static_cast<png_uint_32>(channels);
      img.at(static_cast<int>(x), static_cast<int>(y)) =
          channels == 1 ? p[0] : luma(p[0], p[1], p[2]);
    }
  }
  return img;
}

GrayImage read_image(const std::string& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() >= 8 &&
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_netpbm(bytes, path);
  throw ParseError(path, 0, "unrecognized image format");
}

std::string encode_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

std::string encode_png(const GrayImage& image) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIo, "libpng initialization failed");
  }
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIo, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(y) *
                                                 static_cast<std::size_t>(image.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_image(const GrayImage& image, const std::string& path) {
  const bool png = path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0;
  write_text_file(path, png ? encode_png(image) : encode_pgm(image));
}

}  // namespace matchbench
