#include "wordspot/data/image.hpp"

#include <png.h>

#include <cstring>

#include "wordspot/error.hpp"

namespace wordspot::data {

GrayImage read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(ErrorCode::kIo,
                "cannot decode " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_GRAY;
  GrayImage image(png.height, png.width);
  if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kIo, "cannot decode " + path.string() + ": " + message);
  }
  if (image.empty()) {
    throw Error(ErrorCode::kIo, path.string() + " is an empty image");
  }
  return image;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0,
                               nullptr)) {
    throw Error(ErrorCode::kIo,
                "cannot write " + path.string() + ": " + png.message);
  }
}

double normalize_pixel(std::uint8_t value) {
  return 1.0 - static_cast<double>(value) / 255.0;
}

diff::Array normalize_pixels(const GrayImage& image) {
  diff::Array out({1, image.height, image.width});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out[i] = normalize_pixel(image.pixels[i]);
  }
  return out;
}

}  // namespace wordspot::data
