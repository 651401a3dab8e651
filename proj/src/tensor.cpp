#include "infernet/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "infernet/error.hpp"

namespace infernet {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Upper bound on the im2col scratch buffer, in floats.
constexpr std::size_t kColumnBudget = std::size_t{1} << 21;

std::size_t product(const std::vector<int>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

void check_dims(const std::vector<int>& dims) {
  if (dims.empty() || dims.size() > 4) {
    throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims.size()));
  }
  for (int d : dims) {
    if (d < 1) throw ShapeError("tensor extents must be >= 1");
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) +
                     ", got " + t.shape_string());
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> dims, float fill) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(product(dims_), fill);
}

Tensor::Tensor(std::vector<int> dims, std::vector<float> values)
    : dims_(std::move(dims)), data_(std::move(values)) {
  check_dims(dims_);
  if (data_.size() != product(dims_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match dims " + shape_string());
  }
}

void Tensor::reshape(std::vector<int> dims) {
  check_dims(dims);
  if (product(dims) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string() + " to a different element count");
  }
  dims_ = std::move(dims);
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << 'x';
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Map2D::Map2D(int h, int w, float fill) : height(h), width(w) {
  if (h < 1 || w < 1) throw ShapeError("map extents must be >= 1");
  values.assign(static_cast<std::size_t>(h) * w, fill);
}

MapStats map_stats(const Map2D& map) {
  MapStats s;
  if (map.values.empty()) return s;
  s.min = s.max = map.values[0];
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.values.size(); ++i) {
    const float v = map.values[i];
    if (v > s.max) {
      s.max = v;
      best = i;
    }
    s.min = std::min(s.min, v);
  }
  s.argmax_row = static_cast<int>(best / map.width);
  s.argmax_col = static_cast<int>(best % map.width);
  return s;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::span<const float> bias,
              int stride, int pad) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  if (input.dim(0) != kernels.dim(1)) {
    throw ShapeError("conv2d channel mismatch: input " + input.shape_string() + " vs kernels " +
                     kernels.shape_string());
  }
  if (stride < 1 || pad < 0) throw ArgumentError("conv2d requires stride >= 1 and pad >= 0");
  const int channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const int outputs = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(outputs)) {
    throw ShapeError("conv2d bias length " + std::to_string(bias.size()) + " vs " +
                     std::to_string(outputs) + " output channels");
  }
  const int out_h = (height + 2 * pad - kh) / stride + 1;
  const int out_w = (width + 2 * pad - kw) / stride + 1;
  if (height + 2 * pad < kh || width + 2 * pad < kw || out_h < 1 || out_w < 1) {
    throw ShapeError("conv2d kernels " + kernels.shape_string() + " do not fit input " +
                     input.shape_string() + " with pad " + std::to_string(pad));
  }

  Tensor out({outputs, out_h, out_w});
  const int rows = channels * kh * kw;
  const int positions = out_h * out_w;
  const int chunk = static_cast<int>(std::clamp<std::size_t>(
      kColumnBudget / static_cast<std::size_t>(rows), 1, static_cast<std::size_t>(positions)));

  Eigen::Map<const RowMatrix> weights(kernels.raw(), outputs, rows);
  std::vector<float> columns(static_cast<std::size_t>(rows) * chunk);
  const float* src = input.raw();

  for (int p0 = 0; p0 < positions; p0 += chunk) {
    const int n = std::min(chunk, positions - p0);
    for (int r = 0; r < rows; ++r) {
      const int c = r / (kh * kw);
      const int dy = (r / kw) % kh;
      const int dx = r % kw;
      const float* plane = src + static_cast<std::size_t>(c) * height * width;
      float* dst = columns.data() + static_cast<std::size_t>(r) * n;
      int oy = p0 / out_w, ox = p0 % out_w;
      for (int j = 0; j < n; ++j) {
        const int iy = oy * stride - pad + dy;
        const int ix = ox * stride - pad + dx;
        dst[j] = (iy >= 0 && iy < height && ix >= 0 && ix < width)
                     ? plane[static_cast<std::size_t>(iy) * width + ix]
                     : 0.0f;
        if (++ox == out_w) {
          ox = 0;
          ++oy;
        }
      }
    }
    Eigen::Map<const RowMatrix> cols(columns.data(), rows, n);
    Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>> dst(out.raw() + p0, outputs, n,
                                                      Eigen::OuterStride<>(positions));
    dst.noalias() = weights * cols;
  }

  if (!bias.empty()) {
    for (int o = 0; o < outputs; ++o) {
      float* plane = out.raw() + static_cast<std::size_t>(o) * positions;
      const float b = bias[o];
      for (int i = 0; i < positions; ++i) plane[i] += b;
    }
  }
  return out;
}

int pooled_extent(int extent, int k, int stride, bool ceil_mode) {
  const int span = extent - k;
  int out;
  if (ceil_mode) {
    // ceil division that also works for negative spans
    out = (span >= 0 ? (span + stride - 1) / stride : -((-span) / stride)) + 1;
    // the last window must start inside the input
    if (out > 1 && (out - 1) * stride >= extent) --out;
  } else {
    out = (span >= 0 ? span / stride : -((-span + stride - 1) / stride)) + 1;
  }
  return out;
}

Tensor maxpool2d(const Tensor& input, int k, int stride, bool ceil_mode) {
  require_rank(input, 3, "maxpool2d input");
  if (k < 1 || stride < 1) throw ArgumentError("maxpool2d requires k >= 1 and stride >= 1");
  const int channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const int out_h = pooled_extent(height, k, stride, ceil_mode);
  const int out_w = pooled_extent(width, k, stride, ceil_mode);
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("maxpool2d window " + std::to_string(k) + " does not fit input " +
                     input.shape_string());
  }
  Tensor out({channels, out_h, out_w});
  for (int c = 0; c < channels; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = oy * stride, y1 = std::min(y0 + k, height);
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = ox * stride, x1 = std::min(x0 + k, width);
        float best = -std::numeric_limits<float>::infinity();
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) best = std::max(best, input(c, y, x));
        }
        out(c, oy, ox) = best;
      }
    }
  }
  return out;
}

Tensor relu(Tensor input) {
  for (float& v : input.data()) v = v > 0.0f ? v : 0.0f;
  return input;
}

std::vector<float> softmax(std::span<const float> logits) {
  if (logits.empty()) throw ArgumentError("softmax of an empty vector");
  const float peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - peak);
    total += e[i];
  }
  std::vector<float> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(e[i] / total);
  return out;
}

Map2D upsample_bilinear(const Map2D& map, int out_h, int out_w, Interpolation mode, double shift_y,
                        double shift_x) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("upsample target extents must be >= 1");
  Map2D out(out_h, out_w);
  auto source = [mode](int i, int out_n, int in_n, double shift) {
    double s;
    if (mode == Interpolation::AlignCorners) {
      s = out_n > 1 ? static_cast<double>(i) * (in_n - 1) / (out_n - 1) : 0.0;
    } else {
      s = (i + 0.5) * in_n / out_n - 0.5;
    }
    return std::clamp(s + shift, 0.0, static_cast<double>(in_n - 1));
  };
  for (int y = 0; y < out_h; ++y) {
    const double sy = source(y, out_h, map.height, shift_y);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, map.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double sx = source(x, out_w, map.width, shift_x);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, map.width - 1);
      const double fx = sx - x0;
      const double top = (1.0 - fx) * map.at(y0, x0) + fx * map.at(y0, x1);
      const double bottom = (1.0 - fx) * map.at(y1, x0) + fx * map.at(y1, x1);
      out.at(y, x) = static_cast<float>((1.0 - fy) * top + fy * bottom);
    }
  }
  return out;
}

Map2D minmax_normalize(Map2D map) {
  if (map.values.empty()) return map;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double min = *lo, max = *hi;
  if (!(max > min)) {
    std::fill(map.values.begin(), map.values.end(), 0.0f);
    return map;
  }
  const double range = max - min;
  for (float& v : map.values) v = static_cast<float>((v - min) / range);
  return map;
}

Map2D clamp_negative(Map2D map) {
  for (float& v : map.values) v = std::max(v, 0.0f);
  return map;
}

Map2D xcorr(const Tensor& kernel, const Tensor& field, SimilarityOp op) {
  require_rank(kernel, 3, "xcorr kernel");
  require_rank(field, 3, "xcorr field");
  if (kernel.dim(0) != field.dim(0)) {
    throw ShapeError("xcorr channel mismatch: kernel " + kernel.shape_string() + " vs field " +
                     field.shape_string());
  }
  const int channels = field.dim(0), height = field.dim(1), width = field.dim(2);
  const int kh = kernel.dim(1), kw = kernel.dim(2);
  if (kh > height || kw > width) {
    throw ShapeError("xcorr kernel " + kernel.shape_string() + " larger than field " +
                     field.shape_string());
  }
  const int oy = kh / 2, ox = kw / 2;
  const std::size_t cells = static_cast<std::size_t>(height) * width;

  std::vector<double> dot(cells, 0.0);
  for (int c = 0; c < channels; ++c) {
    const float* plane = field.raw() + c * cells;
    for (int dy = 0; dy < kh; ++dy) {
      for (int dx = 0; dx < kw; ++dx) {
        const double k = kernel(c, dy, dx);
        if (k == 0.0) continue;
        const int x_lo = std::max(0, ox - dx);
        const int x_hi = std::min(width, width + ox - dx);
        for (int y = 0; y < height; ++y) {
          const int fy = y + dy - oy;
          if (fy < 0 || fy >= height) continue;
          const float* row = plane + static_cast<std::size_t>(fy) * width;
          double* acc = dot.data() + static_cast<std::size_t>(y) * width;
          const int shift = dx - ox;
          for (int x = x_lo; x < x_hi; ++x) acc[x] += k * row[x + shift];
        }
      }
    }
  }

  Map2D out(height, width);
  if (op == SimilarityOp::Dot) {
    for (std::size_t i = 0; i < cells; ++i) out.values[i] = static_cast<float>(dot[i]);
    return out;
  }

  double kernel_energy = 0.0;
  for (float v : kernel.data()) kernel_energy += static_cast<double>(v) * v;
  if (kernel_energy <= 0.0) return out;

  std::vector<double> energy(cells, 0.0);
  for (int c = 0; c < channels; ++c) {
    const float* plane = field.raw() + c * cells;
    for (std::size_t i = 0; i < cells; ++i) energy[i] += static_cast<double>(plane[i]) * plane[i];
  }
  // Window energy via a separable box sum: columns first, then rows.
  std::vector<double> vertical(cells, 0.0);
  for (int y = 0; y < height; ++y) {
    const int y0 = std::max(0, y - oy), y1 = std::min(height, y - oy + kh);
    double* dst = vertical.data() + static_cast<std::size_t>(y) * width;
    for (int fy = y0; fy < y1; ++fy) {
      const double* src = energy.data() + static_cast<std::size_t>(fy) * width;
      for (int x = 0; x < width; ++x) dst[x] += src[x];
    }
  }
  const double kernel_norm = std::sqrt(kernel_energy);
  for (int y = 0; y < height; ++y) {
    const double* src = vertical.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      const int x0 = std::max(0, x - ox), x1 = std::min(width, x - ox + kw);
      double window = 0.0;
      for (int fx = x0; fx < x1; ++fx) window += src[fx];
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (window <= 0.0) continue;
      const double cosine = dot[i] / (kernel_norm * std::sqrt(window));
      out.values[i] = static_cast<float>(std::clamp(cosine, -1.0, 1.0));
    }
  }
  return out;
}

}  // namespace infernet
