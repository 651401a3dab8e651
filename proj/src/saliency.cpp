#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "infernet/baselines.hpp"
#include "infernet/error.hpp"

namespace infernet {
namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
  return i;
}

// Blur with the binomial [1 5 10 10 5 1]/32 kernel in both directions and
// keep every second sample. The even kernel centres output sample x on input
// position 2x + 0.5, so every level shares the half-pixel sampling grid that
// upsample_bilinear assumes.
Map2D pyr_down(const Map2D& m) {
  static constexpr double k[6] = {1 / 32.0, 5 / 32.0, 10 / 32.0, 10 / 32.0, 5 / 32.0, 1 / 32.0};
  Map2D horizontal(m.height, (m.width + 1) / 2);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < horizontal.width; ++x) {
      double acc = 0.0;
      for (int t = -2; t <= 3; ++t) acc += k[t + 2] * m.at(y, reflect(2 * x + t, m.width));
      horizontal.at(y, x) = static_cast<float>(acc);
    }
  }
  Map2D out((m.height + 1) / 2, horizontal.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double acc = 0.0;
      for (int t = -2; t <= 3; ++t) acc += k[t + 2] * horizontal.at(reflect(2 * y + t, m.height), x);
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

std::vector<Map2D> gaussian_pyramid(const Map2D& base, int levels) {
  std::vector<Map2D> pyr{base};
  while (static_cast<int>(pyr.size()) < levels) pyr.push_back(pyr_down(pyr.back()));
  return pyr;
}

Map2D convolve(const Map2D& m, const Map2D& kernel) {
  const int ry = kernel.height / 2, rx = kernel.width / 2;
  Map2D out(m.height, m.width);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < kernel.height; ++dy) {
        const int sy = reflect(y + dy - ry, m.height);
        for (int dx = 0; dx < kernel.width; ++dx) {
          acc += kernel.at(dy, dx) * m.at(sy, reflect(x + dx - rx, m.width));
        }
      }
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

// Even-symmetric Gabor kernel with its DC component removed, so uniform
// regions give no orientation response.
Map2D gabor_kernel(const SaliencyConfig& cfg, double theta_deg) {
  const double lambda = cfg.gabor_wavelength;
  const double b = std::pow(2.0, cfg.gabor_bandwidth);
  const double sigma = lambda / std::numbers::pi * std::sqrt(std::log(2.0) / 2.0) * (b + 1.0) / (b - 1.0);
  const int radius = static_cast<int>(std::ceil(2.5 * sigma));
  const double theta = theta_deg * std::numbers::pi / 180.0;
  Map2D kernel(2 * radius + 1, 2 * radius + 1);
  double mean = 0.0;
  for (int y = -radius; y <= radius; ++y) {
    for (int x = -radius; x <= radius; ++x) {
      const double xr = x * std::cos(theta) + y * std::sin(theta);
      const double yr = -x * std::sin(theta) + y * std::cos(theta);
      const double envelope =
          std::exp(-(xr * xr + cfg.gabor_aspect * cfg.gabor_aspect * yr * yr) / (2.0 * sigma * sigma));
      const double v = envelope * std::cos(2.0 * std::numbers::pi * xr / lambda);
      kernel.at(y + radius, x + radius) = static_cast<float>(v);
      mean += v;
    }
  }
  mean /= static_cast<double>(kernel.size());
  double energy = 0.0;
  for (float& v : kernel.values) {
    v = static_cast<float>(v - mean);
    energy += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(energy);
  for (float& v : kernel.values) v = static_cast<float>(v / norm);
  return kernel;
}

Map2D abs_diff(const Map2D& a, const Map2D& b) {
  Map2D out(a.height, a.width);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = std::fabs(a.values[i] - b.values[i]);
  return out;
}

void add_into(Map2D& acc, const Map2D& m) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc.values[i] += m.values[i];
}

// Brings a map from pyramid level `from` down to level `to` (from <= to).
Map2D reduce_to(Map2D m, int from, int to) {
  for (int l = from; l < to; ++l) m = pyr_down(m);
  return m;
}

struct ScalePair {
  int center;
  int surround;
};

// Center-surround maps |F(c) - F(s)↑c| for every scale pair.
std::vector<Map2D> center_surround(const std::vector<Map2D>& pyr, const std::vector<ScalePair>& pairs) {
  std::vector<Map2D> maps;
  for (const auto& p : pairs) {
    const Map2D& c = pyr[p.center];
    maps.push_back(abs_diff(c, upsample_bilinear(pyr[p.surround], c.height, c.width, Interpolation::HalfPixel)));
  }
  return maps;
}

Map2D normalize_passes(const Map2D& m, int passes) {
  Map2D out = saliency_normalize(m);
  for (int i = 1; i < passes; ++i) out = saliency_normalize(out);
  return out;
}

// Across-scale sum of normalized maps at the coarsest center scale.
Map2D across_scale_sum(const std::vector<Map2D>& maps, const std::vector<ScalePair>& pairs, int target_level,
                       const Map2D& shape, int passes) {
  Map2D acc(shape.height, shape.width);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    add_into(acc, reduce_to(normalize_passes(maps[i], passes), pairs[i].center, target_level));
  }
  return acc;
}

}  // namespace

void SaliencyConfig::validate() const {
  if (pyramid_levels < 2 || center_scales.empty() || deltas.empty() || orientations_deg.empty()) {
    throw ArgumentError("saliency config needs levels, center scales, deltas and orientations");
  }
  if (gabor_wavelength <= 0.0 || gabor_bandwidth <= 0.0 || gabor_aspect <= 0.0 || normalization_passes < 1) {
    throw ArgumentError("saliency gabor parameters and passes must be positive");
  }
}

Map2D saliency_normalize(const Map2D& map) {
  Map2D m = minmax_normalize(map);
  const MapStats stats = map_stats(m);
  if (!(stats.max > 0.0f)) return m;
  const int window = std::max(3, m.width / 10);
  const int half = window / 2;
  double total = 0.0;
  int count = 0;
  bool skipped_global = false;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const float v = m.at(y, x);
      if (!(v > 0.0f)) continue;
      bool is_peak = true;
      for (int yy = std::max(0, y - half); yy <= std::min(m.height - 1, y + half) && is_peak; ++yy) {
        for (int xx = std::max(0, x - half); xx <= std::min(m.width - 1, x + half); ++xx) {
          const float w = m.at(yy, xx);
          // plateaus count once: the first cell in raster order wins
          if (w > v || (w == v && std::pair(yy, xx) < std::pair(y, x))) {
            is_peak = false;
            break;
          }
        }
      }
      if (!is_peak) continue;
      if (!skipped_global && y == stats.argmax_row && x == stats.argmax_col) {
        skipped_global = true;
        continue;
      }
      total += v;
      ++count;
    }
  }
  const double mean_peak = count ? total / count : 0.0;
  const double weight = (1.0 - mean_peak) * (1.0 - mean_peak);
  for (float& v : m.values) v = static_cast<float>(v * weight);
  return m;
}

Map2D ittikoch_saliency(const Image& image, const SaliencyConfig& cfg) {
  cfg.validate();
  const int min_side = std::min(image.width, image.height);
  const int available = static_cast<int>(std::floor(std::log2(static_cast<double>(min_side)))) + 1;
  const int levels = std::min(cfg.pyramid_levels, available);

  std::vector<ScalePair> pairs;
  int deepest_center = -1;
  int min_center = levels;
  for (int c : cfg.center_scales) {
    for (int d : cfg.deltas) {
      if (c >= 0 && d > 0 && c + d <= levels - 1) {
        pairs.push_back({c, c + d});
        deepest_center = std::max(deepest_center, c);
        min_center = std::min(min_center, c);
      }
    }
  }
  if (pairs.empty()) {
    throw ArgumentError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                        " too small for any center-surround scale pair");
  }

  // Intensity and broadly tuned color channels.
  const int h = image.height, w = image.width;
  Map2D intensity(h, w), rg(h, w), by(h, w);
  float max_intensity = 0.0f;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto* p = image.at(x, y);
      const float i = (p[0] + p[1] + p[2]) / (3.0f * 255.0f);
      intensity.at(y, x) = i;
      max_intensity = std::max(max_intensity, i);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float i = intensity.at(y, x);
      // hue is undefined at low luminance
      if (!(i > 0.1f * max_intensity) || i <= 0.0f) continue;
      const auto* p = image.at(x, y);
      const float r = p[0] / 255.0f / i, g = p[1] / 255.0f / i, b = p[2] / 255.0f / i;
      const float R = std::max(0.0f, r - (g + b) / 2.0f);
      const float G = std::max(0.0f, g - (r + b) / 2.0f);
      const float B = std::max(0.0f, b - (r + g) / 2.0f);
      const float Y = std::max(0.0f, (r + g) / 2.0f - std::fabs(r - g) / 2.0f - b);
      rg.at(y, x) = R - G;
      by.at(y, x) = B - Y;
    }
  }

  const auto i_pyr = gaussian_pyramid(intensity, levels);
  const auto rg_pyr = gaussian_pyramid(rg, levels);
  const auto by_pyr = gaussian_pyramid(by, levels);
  const Map2D& shape = i_pyr[deepest_center];
  const int passes = cfg.normalization_passes;

  const Map2D intensity_cons = across_scale_sum(center_surround(i_pyr, pairs), pairs, deepest_center, shape, passes);

  const auto rg_cs = center_surround(rg_pyr, pairs);
  const auto by_cs = center_surround(by_pyr, pairs);
  Map2D color_cons(shape.height, shape.width);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    Map2D both = normalize_passes(rg_cs[k], passes);
    add_into(both, normalize_passes(by_cs[k], passes));
    add_into(color_cons, reduce_to(std::move(both), pairs[k].center, deepest_center));
  }

  Map2D orientation_cons(shape.height, shape.width);
  for (double theta : cfg.orientations_deg) {
    const Map2D kernel = gabor_kernel(cfg, theta);
    std::vector<Map2D> o_pyr;
    for (const auto& level : i_pyr) {
      if (static_cast<int>(o_pyr.size()) < min_center) {
        o_pyr.push_back(level);  // finer levels are never used
        continue;
      }
      Map2D response = convolve(level, kernel);
      for (float& v : response.values) v = std::fabs(v);
      o_pyr.push_back(std::move(response));
    }
    add_into(orientation_cons,
             normalize_passes(across_scale_sum(center_surround(o_pyr, pairs), pairs, deepest_center, shape, passes),
                              passes));
  }

  Map2D saliency(shape.height, shape.width);
  for (const Map2D* cons : std::array<const Map2D*, 3>{&intensity_cons, &color_cons, &orientation_cons}) {
    const Map2D n = normalize_passes(*cons, passes);
    for (std::size_t i = 0; i < saliency.size(); ++i) saliency.values[i] += n.values[i] / 3.0f;
  }
  return minmax_normalize(upsample_bilinear(saliency, h, w, Interpolation::HalfPixel));
}

}  // namespace infernet
