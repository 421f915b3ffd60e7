#include "mf/io/png_io.h"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "mf/error.h"

namespace mf {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth,
               int color_type, const std::vector<png_bytep>& rows) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw Error("libpng allocation failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FilePtr file;
  int width = 0, height = 0, bit_depth = 0, color_type = 0;

  explicit PngReader(const std::filesystem::path& path) : file(open_file(path, "rb")) {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png_create_info_struct(png);
    if (!png || !info) throw Error("libpng allocation failed");
    if (setjmp(png_jmpbuf(png))) throw Error("png read failed: " + path.string());
    png_init_io(png, file.get());
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
  }

  void read_rows(const std::vector<png_bytep>& rows) {
    if (setjmp(png_jmpbuf(png))) throw Error("png read failed");
    png_read_image(png, const_cast<png_bytepp>(rows.data()));
  }

  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const ColorImage& img) {
  std::vector<png_bytep> rows(img.height());
  static_assert(sizeof(Rgb8) == 3);
  for (int y = 0; y < img.height(); ++y)
    rows[y] = reinterpret_cast<png_bytep>(const_cast<Rgb8*>(&img.at(0, y)));
  write_png(path, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, rows);
}

ColorImage read_png_rgb(const std::filesystem::path& path) {
  PngReader r(path);
  if (r.bit_depth != 8) throw Error("expected 8-bit color png: " + path.string());
  if (r.color_type == PNG_COLOR_TYPE_GRAY) png_set_gray_to_rgb(r.png);
  if (r.color_type == PNG_COLOR_TYPE_RGB_ALPHA || r.color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_strip_alpha(r.png);
  ColorImage img(r.width, r.height);
  std::vector<png_bytep> rows(r.height);
  for (int y = 0; y < r.height; ++y) rows[y] = reinterpret_cast<png_bytep>(&img.at(0, y));
  r.read_rows(rows);
  return img;
}

void write_png_gray8(const std::filesystem::path& path, const LabelImage& img) {
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y)
    rows[y] = const_cast<png_bytep>(&img.at(0, y));
  write_png(path, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY, rows);
}

LabelImage read_png_gray8(const std::filesystem::path& path) {
  PngReader r(path);
  if (r.bit_depth != 8 || r.color_type != PNG_COLOR_TYPE_GRAY)
    throw Error("expected 8-bit grayscale png: " + path.string());
  LabelImage img(r.width, r.height);
  std::vector<png_bytep> rows(r.height);
  for (int y = 0; y < r.height; ++y) rows[y] = &img.at(0, y);
  r.read_rows(rows);
  return img;
}

void write_png_gray16(const std::filesystem::path& path, const Image<uint16_t>& img) {
  // PNG stores 16-bit samples big-endian.
  std::vector<uint8_t> buf(img.size() * 2);
  for (size_t i = 0; i < img.size(); ++i) {
    buf[2 * i] = static_cast<uint8_t>(img[i] >> 8);
    buf[2 * i + 1] = static_cast<uint8_t>(img[i] & 0xff);
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y)
    rows[y] = buf.data() + static_cast<size_t>(y) * img.width() * 2;
  write_png(path, img.width(), img.height(), 16, PNG_COLOR_TYPE_GRAY, rows);
}

Image<uint16_t> read_png_gray16(const std::filesystem::path& path) {
  PngReader r(path);
  if (r.bit_depth != 16 || r.color_type != PNG_COLOR_TYPE_GRAY)
    throw Error("expected 16-bit grayscale png: " + path.string());
  std::vector<uint8_t> buf(static_cast<size_t>(r.width) * r.height * 2);
  std::vector<png_bytep> rows(r.height);
  for (int y = 0; y < r.height; ++y)
    rows[y] = buf.data() + static_cast<size_t>(y) * r.width * 2;
  r.read_rows(rows);
  Image<uint16_t> img(r.width, r.height);
  for (size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  return img;
}

}  // namespace mf
