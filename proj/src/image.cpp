#include "circcal/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

#include "circcal/error.hpp"

namespace circcal {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decodes to 8-bit RGBA regardless of the stored color type.
std::vector<std::uint8_t> DecodeRgba(const std::filesystem::path& path, int& width, int& height) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_stdio(&image, file.get()))
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + message);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return buffer;
}

void Encode(const std::filesystem::path& path, int width, int height, png_uint_32 format, const std::uint8_t* data) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot create " + path.string());
  if (!png_image_write_to_stdio(&image, file.get(), 0, data, 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace

RgbImage ReadPngRgb(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto rgba = DecodeRgba(path, w, h);
  RgbImage out(w, h);
  for (std::size_t i = 0, n = static_cast<std::size_t>(w) * h; i < n; ++i) {
    out.data[3 * i] = rgba[4 * i];
    out.data[3 * i + 1] = rgba[4 * i + 1];
    out.data[3 * i + 2] = rgba[4 * i + 2];
  }
  return out;
}

GrayImage ReadPngGray(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto rgba = DecodeRgba(path, w, h);
  GrayImage out(w, h);
  for (std::size_t i = 0, n = static_cast<std::size_t>(w) * h; i < n; ++i) {
    if (rgba[4 * i] != rgba[4 * i + 1] || rgba[4 * i] != rgba[4 * i + 2])
      throw IoError("expected a gray image: " + path.string());
    out.data[i] = rgba[4 * i];
  }
  return out;
}

void WritePng(const std::filesystem::path& path, const RgbImage& image) {
  Encode(path, image.width, image.height, PNG_FORMAT_RGB, image.data.data());
}

void WritePng(const std::filesystem::path& path, const GrayImage& image) {
  Encode(path, image.width, image.height, PNG_FORMAT_GRAY, image.data.data());
}

std::vector<std::filesystem::path> ListPngFiles(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace circcal
