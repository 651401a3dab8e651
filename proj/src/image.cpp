#include "infernet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include "binary_io.hpp"
#include "infernet/error.hpp"

namespace infernet {
namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

// Netpbm header: magic, width, height, maxval, separated by whitespace and
// '#' comments, followed by exactly one whitespace byte.
struct PnmHeader {
  char kind = 0;  // '5' or '6'
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError(name + ": not a PNG, binary PPM (P6) or PGM (P5) image");
  }
  PnmHeader h;
  h.kind = static_cast<char>(bytes[1]);
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw FormatError(name + ": malformed netpbm header");
    }
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos++] - '0');
      if (value > (1L << 24)) throw FormatError(name + ": netpbm extent too large");
    }
    return static_cast<int>(value);
  };
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError(name + ": malformed netpbm header");
  }
  h.data_offset = pos + 1;
  if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 255) {
    throw FormatError(name + ": unsupported netpbm extents or maxval");
  }
  return h;
}

Image decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  const PnmHeader h = parse_pnm_header(bytes, name);
  const std::size_t channels = h.kind == '6' ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height * channels;
  if (bytes.size() - h.data_offset < need) throw IoError(name + ": truncated netpbm data");
  Image img(h.width, h.height);
  const std::uint8_t* src = bytes.data() + h.data_offset;
  const double scale = 255.0 / h.maxval;
  for (std::size_t i = 0; i < static_cast<std::size_t>(h.width) * h.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::uint8_t v = src[i * channels + (channels == 3 ? c : 0)];
      img.pixels[i * 3 + c] =
          h.maxval == 255 ? v : static_cast<std::uint8_t>(std::lround(std::min<double>(v, h.maxval) * scale));
    }
  }
  return img;
}

Image decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError(name + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw FormatError(name + ": " + message);
  }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

// Classic libpng writer: the simplified API cannot emit text chunks.
void write_png_rows(const std::filesystem::path& path, int width, int height, int color_type,
                    const std::uint8_t* pixels, std::size_t row_bytes,
                    const std::vector<std::pair<std::string, std::string>>& text) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_text> chunks(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = const_cast<char*>(text[i].first.c_str());
    chunks[i].text = const_cast<char*>(text[i].second.c_str());
  }
  if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<std::uint8_t*>(pixels + static_cast<std::size_t>(y) * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const std::uint8_t* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

Rect intersect(const Rect& a, const Rect& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
  return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const Rect& a, const Rect& b) {
  const int inter = intersect(a, b).area();
  const int uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

Image::Image(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw ArgumentError("image extents must be >= 1");
  pixels.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

Image read_image(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return has_png_signature(bytes) ? decode_png(bytes, path.string()) : decode_pnm(bytes, path.string());
}

std::pair<int, int> read_image_extents(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (has_png_signature(bytes)) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
      throw FormatError(path.string() + ": " + png.message);
    }
    const std::pair<int, int> extents{static_cast<int>(png.width), static_cast<int>(png.height)};
    png_image_free(&png);
    return extents;
  }
  const PnmHeader h = parse_pnm_header(bytes, path.string());
  return {h.width, h.height};
}

void write_png(const Image& image, const std::filesystem::path& path,
               const std::vector<std::pair<std::string, std::string>>& text) {
  write_png_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, image.pixels.data(),
                 static_cast<std::size_t>(image.width) * 3, text);
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  write_bytes(path, header, image.pixels.data(), image.pixels.size());
}

Tensor image_to_tensor(const Image& image) {
  Tensor t({3, image.height, image.width});
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* p = image.at(x, y);
      for (int c = 0; c < 3; ++c) t(c, y, x) = p[c] / 255.0f;
    }
  }
  return t;
}

Image crop_clamped(const Image& image, int cx, int cy, int side) {
  if (side < 1) throw ArgumentError("crop side must be >= 1");
  Image out(side, side);
  const int x0 = cx - side / 2, y0 = cy - side / 2;
  for (int y = 0; y < side; ++y) {
    const int sy = std::clamp(y0 + y, 0, image.height - 1);
    for (int x = 0; x < side; ++x) {
      const int sx = std::clamp(x0 + x, 0, image.width - 1);
      std::copy_n(image.at(sx, sy), 3, out.at(x, y));
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int out_w, int out_h) {
  Image out(out_w, out_h);
  for (int c = 0; c < 3; ++c) {
    Map2D plane(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) plane.at(y, x) = image.at(x, y)[c];
    }
    const Map2D scaled = upsample_bilinear(plane, out_h, out_w, Interpolation::HalfPixel);
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        out.at(x, y)[c] = static_cast<std::uint8_t>(std::lround(std::clamp(scaled.at(y, x), 0.0f, 255.0f)));
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> map_to_gray8(const Map2D& map) {
  std::vector<std::uint8_t> gray(map.values.size(), 0);
  if (map.values.empty()) return gray;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double min = *lo, range = static_cast<double>(*hi) - *lo;
  if (!(range > 0.0)) return gray;
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = static_cast<std::uint8_t>(std::lround((map.values[i] - min) / range * 255.0));
  }
  return gray;
}

void write_pgm(const Map2D& map, const std::filesystem::path& path,
               const std::vector<std::string>& comments) {
  std::string header = "P5\n";
  for (const auto& line : comments) {
    std::string clean = line;
    std::replace(clean.begin(), clean.end(), '\n', ' ');
    header += "# " + clean + "\n";
  }
  header += std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  const auto gray = map_to_gray8(map);
  write_bytes(path, header, gray.data(), gray.size());
}

void write_map_png(const Map2D& map, const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& text) {
  const auto gray = map_to_gray8(map);
  write_png_rows(path, map.width, map.height, PNG_COLOR_TYPE_GRAY, gray.data(),
                 static_cast<std::size_t>(map.width), text);
}

void write_map(const Map2D& map, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_string("MAP2");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(map.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(map.width));
  w.put_bytes(map.values.data(), map.values.size() * sizeof(float));
  write_bytes(path, "", w.bytes().data(), w.bytes().size());
}

Map2D read_map(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  detail::ByteReader r(bytes.data(), bytes.size());
  if (r.get_string(4) != "MAP2") throw FormatError(path.string() + ": bad map magic");
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  if (h < 1 || w < 1 || h > (1u << 16) || w > (1u << 16)) {
    throw FormatError(path.string() + ": bad map extents");
  }
  Map2D map(static_cast<int>(h), static_cast<int>(w));
  std::memcpy(map.values.data(), r.take(map.values.size() * sizeof(float)),
              map.values.size() * sizeof(float));
  return map;
}

}  // namespace infernet
