#pragma once

#include <cstdint>
#include <vector>

#include "infernet/dataset.hpp"
#include "infernet/engine.hpp"
#include "infernet/image.hpp"
#include "infernet/tensor.hpp"

namespace infernet {

// Expected guesses of uniform search without replacement: (n + 1) / 2.
double chance_expected_guesses(int n_candidates);

// Same elimination mechanics as infer_target, but each guess is drawn
// uniformly from the remaining candidates (arrays) or available pixels.
GuessTrace chance_trace(const Trial& trial, std::uint64_t seed, const GuessParams& params);

// Cosine cross-correlation of raw pixels (RGB in [0, 1]), negatives clamped,
// min-max normalized.
Map2D template_match_map(const Image& patch, const Image& search);

struct SaliencyConfig {
  int pyramid_levels = 9;
  std::vector<int> center_scales{2, 3, 4};
  std::vector<int> deltas{3, 4};
  std::vector<double> orientations_deg{0.0, 45.0, 90.0, 135.0};
  double gabor_wavelength = 7.0;  // pixels
  double gabor_bandwidth = 1.0;   // octaves
  double gabor_aspect = 1.0;
  int normalization_passes = 1;   // >1 iterates N(·)

  void validate() const;
};

// Itti-Koch-Niebur bottom-up saliency at image resolution, min-max
// normalized.
Map2D ittikoch_saliency(const Image& image, const SaliencyConfig& cfg = {});

// N(·): scale to [0, 1], then multiply by (1 - m)² where m is the mean of the
// local maxima other than the global one. Local maxima are searched in a
// window of side max(3, width / 10).
Map2D saliency_normalize(const Map2D& map);

}  // namespace infernet
