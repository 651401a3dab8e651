#pragma once

// Straightforward loop implementations used as references for the
// optimized library code. They favour obviousness over speed.

#include <optional>
#include <vector>

#include "infernet/dataset.hpp"
#include "infernet/engine.hpp"
#include "infernet/image.hpp"
#include "infernet/tensor.hpp"

namespace oracle {

using infernet::Map2D;
using infernet::Tensor;

Tensor conv2d(const Tensor& input, const Tensor& kernels, const std::vector<float>& bias, int stride, int pad);

// Windows start at multiples of `stride`; with ceil_mode an extra, partial
// window is kept when it starts inside the input.
Tensor maxpool2d(const Tensor& input, int k, int stride, bool ceil_mode);

// Cosine between the kernel and the zero-padded window whose top-left corner
// sits at (y - kh/2, x - kw/2).
Map2D xcorr_cosine(const Tensor& kernel, const Tensor& field);

Map2D template_match(const infernet::Image& patch, const infernet::Image& search);

// Number of guesses the argmax-and-eliminate search needs, or nullopt when
// the budget (natural trials) or the candidates (arrays) run out.
std::optional<int> guess_count(const Map2D& map, const infernet::Trial& trial, const infernet::GuessParams& params);

// Largest |a - b| / max(1, |b|) over all elements.
double max_relative_error(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace oracle
