#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace circcal {

/// 8-bit interleaved RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // size 3 * width * height

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, 0) {}

  bool Empty() const { return width <= 0 || height <= 0; }
  std::uint8_t* Pixel(int x, int y) { return &data[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const std::uint8_t* Pixel(int x, int y) const { return &data[3 * (static_cast<std::size_t>(y) * width + x)]; }
};

/// 8-bit single-channel image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t& At(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t At(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Reads any 8/16-bit PNG and converts it to 8-bit RGB (alpha dropped, gray expanded).
RgbImage ReadPngRgb(const std::filesystem::path& path);
/// Reads any PNG and converts it to 8-bit gray (RGB input must be gray-valued: R == G == B).
GrayImage ReadPngGray(const std::filesystem::path& path);

void WritePng(const std::filesystem::path& path, const RgbImage& image);
void WritePng(const std::filesystem::path& path, const GrayImage& image);

/// Sorted list of *.png files directly inside `dir`.
std::vector<std::filesystem::path> ListPngFiles(const std::filesystem::path& dir);

}  // namespace circcal
