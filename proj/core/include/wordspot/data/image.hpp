#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "wordspot/diff/array.hpp"

namespace wordspot::data {

// 8-bit grayscale raster, row-major, 0 = black.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t h, std::size_t w, std::uint8_t fill = 255)
      : height(h), width(w), pixels(h * w, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const {
    return pixels[y * width + x];
  }
  bool empty() const { return pixels.empty(); }
};

// Any PNG color type is converted to 8-bit gray. Throws Error(kIo).
GrayImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& image);

// p -> 1 - p / 255, so ink is near 1.0 and paper near 0.0. Returns a
// 1 x H x W array ready to feed a network.
diff::Array normalize_pixels(const GrayImage& image);
double normalize_pixel(std::uint8_t value);

}  // namespace wordspot::data
