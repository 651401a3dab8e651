#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace infernet {

// Dense row-major float tensor of rank 1..4. Feature maps are C×H×W,
// convolution kernels O×C×kh×kw, linear weights O×I.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims, float fill = 0.0f);
  Tensor(std::vector<int> dims, std::vector<float> values);

  const std::vector<int>& dims() const { return dims_; }
  int dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* raw() { return data_.data(); }
  const float* raw() const { return data_.data(); }

  // Rank-3 accessors (channel, row, column).
  float& operator()(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }
  float operator()(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }

  // New extents with the same element count.
  void reshape(std::vector<int> dims);

  std::string shape_string() const;
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> dims_;
  std::vector<float> data_;
};

// Single-channel float grid. Holds similarity, saliency and inference maps.
struct Map2D {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  Map2D() = default;
  Map2D(int h, int w, float fill = 0.0f);

  float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return values.size(); }

  friend bool operator==(const Map2D&, const Map2D&) = default;
};

struct MapStats {
  float min = 0.0f;
  float max = 0.0f;
  int argmax_row = 0;
  int argmax_col = 0;
};

// Min/max plus the first maximal cell in raster order.
MapStats map_stats(const Map2D& map);

enum class SimilarityOp { Cosine, Dot };

enum class Interpolation {
  AlignCorners,  // corner samples map onto corner samples
  HalfPixel,     // sample centres map onto sample centres
};

// Cross-correlation of `input` (C×H×W) with `kernels` (O×C×kh×kw) plus one
// bias per output channel. `bias` may be empty (treated as zeros).
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::span<const float> bias,
              int stride, int pad);

// Output extent of a pooling window sweep; may be < 1 for infeasible inputs.
int pooled_extent(int extent, int k, int stride, bool ceil_mode);

Tensor maxpool2d(const Tensor& input, int k, int stride, bool ceil_mode);

Tensor relu(Tensor input);

std::vector<float> softmax(std::span<const float> logits);

// `shift_y`/`shift_x` offset the sampling position, in source cells.
Map2D upsample_bilinear(const Map2D& map, int out_h, int out_w,
                        Interpolation mode = Interpolation::AlignCorners, double shift_y = 0.0,
                        double shift_x = 0.0);

// (x - min) / (max - min); constant maps become all zeros.
Map2D minmax_normalize(Map2D map);

// Slides `kernel` (C×kh×kw) over every position of `field` (C×H×W). The
// window at (y, x) spans rows y - kh/2 .. y - kh/2 + kh - 1 (likewise for
// columns) with zero padding outside the field. Cosine mode returns the
// cosine between kernel and window (0 where either has zero norm).
Map2D xcorr(const Tensor& kernel, const Tensor& field, SimilarityOp op);

inline Map2D xcorr_cosine(const Tensor& kernel, const Tensor& field) {
  return xcorr(kernel, field, SimilarityOp::Cosine);
}

Map2D clamp_negative(Map2D map);

}  // namespace infernet
