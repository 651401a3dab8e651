#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "infernet/tensor.hpp"

namespace infernet {

// Axis-aligned pixel rectangle, half-open: [x, x + w) × [y, y + h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool empty() const { return w <= 0 || h <= 0; }
  int area() const { return empty() ? 0 : w * h; }
  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

Rect intersect(const Rect& a, const Rect& b);
double iou(const Rect& a, const Rect& b);

// 8-bit RGB image, interleaved, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  Rect bounds() const { return {0, 0, width, height}; }

  friend bool operator==(const Image&, const Image&) = default;
};

// PNG (8-bit RGB, RGBA or gray), binary PPM (P6) or PGM (P5). Gray images are
// replicated to three channels.
Image read_image(const std::filesystem::path& path);
// Width and height without decoding the pixel data.
std::pair<int, int> read_image_extents(const std::filesystem::path& path);

void write_png(const Image& image, const std::filesystem::path& path,
               const std::vector<std::pair<std::string, std::string>>& text = {});
void write_ppm(const Image& image, const std::filesystem::path& path);

// 3×H×W tensor of RGB values scaled to [0, 1].
Tensor image_to_tensor(const Image& image);

// Crop of `side`×`side` pixels whose top-left corner is
// (cx - side/2, cy - side/2); out-of-bounds samples replicate the border.
Image crop_clamped(const Image& image, int cx, int cy, int side);

Image resize_bilinear(const Image& image, int out_w, int out_h);

// Heatmaps: map scaled by its min/max into 0..255. `comments` become PGM
// comment lines (or PNG text chunks) so each file carries its provenance.
std::vector<std::uint8_t> map_to_gray8(const Map2D& map);
void write_pgm(const Map2D& map, const std::filesystem::path& path,
               const std::vector<std::string>& comments = {});
void write_map_png(const Map2D& map, const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& text = {});

// Raw float map container: "MAP2", u32 height, u32 width, f32 values (LE).
void write_map(const Map2D& map, const std::filesystem::path& path);
Map2D read_map(const std::filesystem::path& path);

}  // namespace infernet
