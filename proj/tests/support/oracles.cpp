#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace oracle {

Tensor conv2d(const Tensor& input, const Tensor& kernels, const std::vector<float>& bias, int stride, int pad) {
  const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const int O = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const int oh = (H + 2 * pad - kh) / stride + 1, ow = (W + 2 * pad - kw) / stride + 1;
  Tensor out({O, oh, ow});
  const float* k = kernels.raw();
  for (int o = 0; o < O; ++o) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (int c = 0; c < C; ++c) {
          for (int dy = 0; dy < kh; ++dy) {
            for (int dx = 0; dx < kw; ++dx) {
              const int iy = y * stride + dy - pad, ix = x * stride + dx - pad;
              if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
              acc += static_cast<double>(k[((o * C + c) * kh + dy) * kw + dx]) * input(c, iy, ix);
            }
          }
        }
        out(o, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor maxpool2d(const Tensor& input, int k, int stride, bool ceil_mode) {
  const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
  // Full windows, plus (in ceil mode) one partial window when the full ones
  // leave trailing cells uncovered.
  auto count = [&](int n) {
    int windows = 0, covered = 0;
    for (int start = 0; start + k <= n; start += stride) {
      ++windows;
      covered = start + k;
    }
    if (ceil_mode && covered < n && windows * stride < n) ++windows;
    return windows;
  };
  const int oh = count(H), ow = count(W);
  Tensor out({C, oh, ow});
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        float best = -std::numeric_limits<float>::infinity();
        for (int iy = y * stride; iy < std::min(H, y * stride + k); ++iy) {
          for (int ix = x * stride; ix < std::min(W, x * stride + k); ++ix) best = std::max(best, input(c, iy, ix));
        }
        out(c, y, x) = best;
      }
    }
  }
  return out;
}

Map2D xcorr_cosine(const Tensor& kernel, const Tensor& field) {
  const int C = field.dim(0), H = field.dim(1), W = field.dim(2);
  const int kh = kernel.dim(1), kw = kernel.dim(2);
  Map2D out(H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double dot = 0.0, kk = 0.0, ww = 0.0;
      for (int c = 0; c < C; ++c) {
        for (int dy = 0; dy < kh; ++dy) {
          for (int dx = 0; dx < kw; ++dx) {
            const double a = kernel(c, dy, dx);
            const int fy = y - kh / 2 + dy, fx = x - kw / 2 + dx;
            const double b = (fy < 0 || fx < 0 || fy >= H || fx >= W) ? 0.0 : field(c, fy, fx);
            dot += a * b;
            kk += a * a;
            ww += b * b;
          }
        }
      }
      out.at(y, x) = (kk > 0 && ww > 0) ? static_cast<float>(dot / std::sqrt(kk * ww)) : 0.0f;
    }
  }
  return out;
}

Map2D template_match(const infernet::Image& patch, const infernet::Image& search) {
  Map2D m = oracle::xcorr_cosine(infernet::image_to_tensor(patch), infernet::image_to_tensor(search));
  float lo = std::numeric_limits<float>::infinity(), hi = -lo;
  for (float& v : m.values) {
    v = std::max(v, 0.0f);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (float& v : m.values) v = hi > lo ? (v - lo) / (hi - lo) : 0.0f;
  return m;
}

namespace {

// Highest cell of `box` (first in raster order on ties).
std::tuple<float, int, int> box_peak(const Map2D& map, const infernet::Rect& box) {
  std::tuple<float, int, int> best{-std::numeric_limits<float>::infinity(), 0, 0};
  bool found = false;
  for (int y = std::max(0, box.y); y < std::min(map.height, box.y + box.h); ++y) {
    for (int x = std::max(0, box.x); x < std::min(map.width, box.x + box.w); ++x) {
      if (!found || map.at(y, x) > std::get<0>(best)) best = {map.at(y, x), y, x};
      found = true;
    }
  }
  return best;
}

}  // namespace

std::optional<int> guess_count(const Map2D& map, const infernet::Trial& trial, const infernet::GuessParams& params) {
  if (trial.task == infernet::TaskType::Array) {
    // Peaks never change, so the search visits candidates in a fixed order
    // and the answer is the target's rank in it.
    const auto* target = trial.target_candidate();
    if (!target) throw std::logic_error("oracle: no target candidate");
    const auto [tv, ty, tx] = box_peak(map, target->box);
    int ahead = 0;
    for (const auto& c : trial.candidates) {
      if (c.id == target->id) continue;
      const auto [v, y, x] = box_peak(map, c.box);
      if (v > tv || (v == tv && std::pair(y, x) < std::pair(ty, tx))) ++ahead;
    }
    return ahead + 1;
  }

  // Natural trials: keep a list of eliminated squares rather than a mask.
  std::vector<infernet::Rect> removed;
  const int half = params.elim_side / 2;
  auto is_removed = [&](int x, int y) {
    return std::any_of(removed.begin(), removed.end(), [&](const infernet::Rect& r) { return r.contains(x, y); });
  };
  for (int guess = 1; guess <= params.budget; ++guess) {
    float best = 0.0f;
    int bx = -1, by = -1;
    for (int y = 0; y < map.height; ++y) {
      for (int x = 0; x < map.width; ++x) {
        if (is_removed(x, y)) continue;
        if (bx < 0 || map.at(y, x) > best) {
          best = map.at(y, x);
          bx = x;
          by = y;
        }
      }
    }
    if (bx < 0) return std::nullopt;
    bool hit;
    if (params.iou_threshold > 0.0) {
      hit = infernet::iou({bx - half, by - half, params.elim_side, params.elim_side}, trial.target_box) >=
            params.iou_threshold;
    } else {
      hit = trial.target_box.contains(bx, by);
    }
    if (hit) return guess;
    removed.push_back({bx - half, by - half, params.elim_side, params.elim_side});
  }
  return std::nullopt;
}

double max_relative_error(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double err = std::abs(static_cast<double>(a[i]) - b[i]) / std::max(1.0, std::abs(static_cast<double>(b[i])));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace oracle
