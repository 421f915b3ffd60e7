#pragma once

#include <filesystem>

#include "mf/image.h"

namespace mf {

/// 8-bit RGB.
void write_png_rgb(const std::filesystem::path& path, const ColorImage& img);
ColorImage read_png_rgb(const std::filesystem::path& path);

/// 8-bit grayscale (label images, external masks).
void write_png_gray8(const std::filesystem::path& path, const LabelImage& img);
LabelImage read_png_gray8(const std::filesystem::path& path);

/// 16-bit grayscale (depth in fixed raw units, big-endian per PNG spec).
void write_png_gray16(const std::filesystem::path& path, const Image<uint16_t>& img);
Image<uint16_t> read_png_gray16(const std::filesystem::path& path);

}  // namespace mf
