#include <doctest.h>

#include <cmath>

#include "infernet/baselines.hpp"
#include "infernet/error.hpp"
#include "infernet/synthgen.hpp"
#include "support/oracles.hpp"
#include "support/scratch.hpp"

using namespace infernet;

namespace {

Trial array_trial(int n, int target) {
  Trial t;
  t.id = "a";
  t.width = 40 * n;
  t.height = 40;
  for (int i = 0; i < n; ++i) t.candidates.push_back({"c" + std::to_string(i), {40 * i, 0, 30, 30}});
  t.target_box = t.candidates[target].box;
  return t;
}

Image noise_image(Rng& rng, int w, int h) {
  Image img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(uniform_below(rng, 256));
  return img;
}

// Green discs on a 3x3 grid with one red disc; returns the red disc centre.
std::pair<int, int> popout_fixture(Image& img, int odd, int dx, int dy) {
  img = Image(256, 256, 128);
  std::pair<int, int> centre;
  for (int i = 0; i < 9; ++i) {
    const int cx = 68 + 60 * (i % 3) + dx, cy = 68 + 60 * (i / 3) + dy;
    const Rgb color = i == odd ? Rgb{220, 30, 30} : Rgb{30, 170, 30};
    draw_glyph(img, {Glyph::Disc, color, 0.0}, cx, cy, 30);
    if (i == odd) centre = {cx, cy};
  }
  return centre;
}

}  // namespace

TEST_CASE("chance_expected_guesses") {
  CHECK(chance_expected_guesses(1) == 1.0);
  CHECK(chance_expected_guesses(5) == 3.0);
  CHECK(chance_expected_guesses(10) == 5.5);
  CHECK_THROWS_AS(chance_expected_guesses(0), ArgumentError);
}

TEST_CASE("chance traces average to the closed form") {
  for (int n : {3, 5, 10}) {
    double total = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const Trial t = array_trial(n, i % n);
      total += *chance_trace(t, mix_seed(99, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i)}), {})
                   .success_index;
    }
    CHECK(std::abs(total / draws - chance_expected_guesses(n)) < 0.05);
  }
}

TEST_CASE("chance_trace is reproducible and trivially succeeds on a full-image target") {
  const Trial t = array_trial(6, 2);
  CHECK(chance_trace(t, 7, {}) == chance_trace(t, 7, {}));
  Trial whole;
  whole.task = TaskType::Natural;
  whole.width = 50;
  whole.height = 40;
  whole.target_box = {0, 0, 50, 40};
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(chance_trace(whole, s, {}).success_index == 1);
}

TEST_CASE("template_match_map") {
  Rng rng(31);
  const Image search = noise_image(rng, 60, 50);
  const Image patch = crop_clamped(search, 37, 21, 12);
  const auto s = map_stats(template_match_map(patch, search));
  CHECK(s.argmax_col == 37);
  CHECK(s.argmax_row == 21);
  for (float v : template_match_map(patch, Image(60, 50, 0)).values) CHECK(v == 0.0f);
  CHECK_THROWS_AS(template_match_map(Image(70, 10), search), ArgumentError);
}

TEST_CASE("template_match_map matches the pixel-loop oracle") {
  Rng rng(32);
  for (int i = 0; i < 50; ++i) {
    const int w = 10 + uniform_below(rng, 20), h = 10 + uniform_below(rng, 20);
    const int pw = 1 + uniform_below(rng, 8), ph = 1 + uniform_below(rng, 8);
    const Image search = noise_image(rng, w, h), patch = noise_image(rng, pw, ph);
    CHECK(oracle::max_relative_error(template_match_map(patch, search).values,
                                     oracle::template_match(patch, search).values) < 1e-5);
  }
}

TEST_CASE("saliency of a uniform image is constant") {
  const Map2D m = ittikoch_saliency(Image(128, 96, 128));
  for (float v : m.values) CHECK(v == m.values[0]);
  CHECK(m.height == 96);
  CHECK(m.width == 128);
}

TEST_CASE("saliency is finite and non-negative on noise") {
  Rng rng(33);
  const Map2D m = ittikoch_saliency(noise_image(rng, 100, 80));
  for (float v : m.values) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0f);
  }
  CHECK_THROWS_AS(ittikoch_saliency(Image(8, 8)), ArgumentError);
}

TEST_CASE("a red disc among green discs is the most salient point") {
  Rng rng(34);
  for (int i = 0; i < 10; ++i) {
    Image img;
    const int dx = static_cast<int>(uniform_below(rng, 31)) - 15, dy = static_cast<int>(uniform_below(rng, 31)) - 15;
    const auto [cx, cy] = popout_fixture(img, i % 9, dx, dy);
    const auto s = map_stats(ittikoch_saliency(img));
    CAPTURE(i);
    CHECK(std::abs(s.argmax_col - cx) <= 8);
    CHECK(std::abs(s.argmax_row - cy) <= 8);
  }
}
