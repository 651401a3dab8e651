#include "infernet/baselines.hpp"

#include <algorithm>

#include "infernet/elimination.hpp"
#include "infernet/error.hpp"
#include "infernet/random.hpp"

namespace infernet {

double chance_expected_guesses(int n_candidates) {
  if (n_candidates < 1) throw ArgumentError("chance model needs at least one candidate");
  return (n_candidates + 1) / 2.0;
}

GuessTrace chance_trace(const Trial& trial, std::uint64_t seed, const GuessParams& params) {
  EliminationState state(trial, params);
  Rng rng(seed);
  while (!state.finished()) {
    if (state.is_array()) {
      const auto pick = static_cast<std::size_t>(uniform_below(rng, state.remaining().size()));
      const Rect& box = state.remaining()[pick].box;
      state.guess_candidate(pick, static_cast<int>(box.center_x()), static_cast<int>(box.center_y()));
      continue;
    }
    const auto total = static_cast<std::uint64_t>(state.width()) * state.height();
    int x = -1, y = -1;
    for (int attempt = 0; attempt < 64; ++attempt) {
      const auto idx = uniform_below(rng, total);
      const int cx = static_cast<int>(idx % state.width()), cy = static_cast<int>(idx / state.width());
      if (state.available(cx, cy)) {
        x = cx;
        y = cy;
        break;
      }
    }
    if (x < 0) {
      // Mostly eliminated: pick the k-th available pixel directly.
      auto k = uniform_below(rng, static_cast<std::uint64_t>(state.available_count()));
      for (int yy = 0; yy < state.height() && x < 0; ++yy) {
        for (int xx = 0; xx < state.width(); ++xx) {
          if (state.available(xx, yy) && k-- == 0) {
            x = xx;
            y = yy;
            break;
          }
        }
      }
    }
    state.guess_pixel(x, y);
  }
  return state.trace();
}

Map2D template_match_map(const Image& patch, const Image& search) {
  if (patch.width > search.width || patch.height > search.height) {
    throw ArgumentError("template " + std::to_string(patch.width) + "x" + std::to_string(patch.height) +
                        " larger than search image " + std::to_string(search.width) + "x" +
                        std::to_string(search.height));
  }
  Map2D m = xcorr_cosine(image_to_tensor(patch), image_to_tensor(search));
  return minmax_normalize(clamp_negative(std::move(m)));
}

}  // namespace infernet
