#include <doctest.h>

#include <cmath>

#include "infernet/error.hpp"
#include "infernet/tensor.hpp"
#include "support/oracles.hpp"
#include "support/scratch.hpp"

using namespace infernet;

TEST_CASE("conv2d with an identity kernel returns the input") {
  Rng rng(1);
  const Tensor input = testing::random_tensor({1, 3, 3}, rng);
  const Tensor out = conv2d(input, Tensor({1, 1, 1, 1}, 1.0f), std::vector<float>{0.0f}, 1, 0);
  CHECK(out == input);
}

TEST_CASE("conv2d counts window overlap on a padded grid") {
  const Tensor out = conv2d(Tensor({1, 4, 4}, 1.0f), Tensor({1, 1, 3, 3}, 1.0f), {}, 1, 1);
  REQUIRE(out.dims() == std::vector<int>{1, 4, 4});
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const int borders = (y == 0 || y == 3) + (x == 0 || x == 3);
      CHECK(out(0, y, x) == (borders == 2 ? 4.0f : borders == 1 ? 6.0f : 9.0f));
    }
  }
}

TEST_CASE("conv2d matches the loop oracle on random shapes") {
  Rng rng(2);
  for (int i = 0; i < 60; ++i) {
    const int c = 1 + uniform_below(rng, 3), o = 1 + uniform_below(rng, 4), k = 1 + uniform_below(rng, 3);
    const int h = k + uniform_below(rng, 8 - k + 1), w = k + uniform_below(rng, 8 - k + 1);
    const int stride = 1 + uniform_below(rng, 2), pad = uniform_below(rng, 2);
    const Tensor input = testing::random_tensor({c, h, w}, rng);
    const Tensor kernels = testing::random_tensor({o, c, k, k}, rng);
    std::vector<float> bias(o);
    for (float& b : bias) b = static_cast<float>(uniform_unit(rng));
    const Tensor got = conv2d(input, kernels, bias, stride, pad);
    const Tensor want = oracle::conv2d(input, kernels, bias, stride, pad);
    REQUIRE(got.dims() == want.dims());
    CHECK(oracle::max_relative_error({got.data().begin(), got.data().end()},
                                     {want.data().begin(), want.data().end()}) < 1e-5);
  }
}

TEST_CASE("conv2d rejects mismatched channels with both shapes in the message") {
  try {
    conv2d(Tensor({2, 4, 4}), Tensor({1, 3, 3, 3}), {}, 1, 1);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x4x4]") != std::string::npos);
    CHECK(msg.find("[1x3x3x3]") != std::string::npos);
  }
}

TEST_CASE("maxpool2d examples") {
  const Tensor out = maxpool2d(Tensor({1, 2, 2}, std::vector<float>{1, 2, 3, 4}), 2, 2, false);
  CHECK(out == Tensor({1, 1, 1}, std::vector<float>{4}));
  CHECK(maxpool2d(Tensor({1, 7, 7}), 2, 2, true).dims() == std::vector<int>{1, 4, 4});
  CHECK(maxpool2d(Tensor({1, 7, 7}), 2, 2, false).dims() == std::vector<int>{1, 3, 3});

  Tensor t({1, 28, 28});
  std::vector<int> extents;
  for (int i = 0; i < 5; ++i) {
    t = maxpool2d(t, 2, 2, true);
    extents.push_back(t.dim(1));
  }
  CHECK(extents == std::vector<int>{14, 7, 4, 2, 1});
  CHECK_THROWS_AS(maxpool2d(Tensor({1, 1, 1}), 2, 2, false), ShapeError);
}

TEST_CASE("maxpool2d matches the loop oracle on random shapes") {
  Rng rng(3);
  for (int i = 0; i < 60; ++i) {
    const int k = 1 + uniform_below(rng, 3), stride = 1 + uniform_below(rng, 3);
    const int h = k + uniform_below(rng, 9), w = k + uniform_below(rng, 9);
    const bool ceil_mode = uniform_below(rng, 2) == 1;
    const Tensor input = testing::random_tensor({1 + static_cast<int>(uniform_below(rng, 3)), h, w}, rng);
    const Tensor got = maxpool2d(input, k, stride, ceil_mode);
    const Tensor want = oracle::maxpool2d(input, k, stride, ceil_mode);
    REQUIRE(got.dims() == want.dims());
    CHECK(got == want);
  }
}

TEST_CASE("relu") {
  CHECK(relu(Tensor({3}, std::vector<float>{-1, 0, 2})) == Tensor({3}, std::vector<float>{0, 0, 2}));
  CHECK(relu(Tensor({4}, -3.0f)) == Tensor({4}, 0.0f));
  Rng rng(4);
  const Tensor x = testing::random_tensor({2, 5, 5}, rng);
  CHECK(relu(relu(x)) == relu(x));
}

TEST_CASE("softmax") {
  const auto half = softmax(std::vector<float>{0, 0});
  CHECK(half[0] == doctest::Approx(0.5));
  CHECK(half[1] == doctest::Approx(0.5));
  const auto big = softmax(std::vector<float>{1000, 0});
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(big[1]));

  Rng rng(5);
  std::vector<float> logits(1000);
  for (float& v : logits) v = static_cast<float>(20.0 * uniform_unit(rng) - 10.0);
  double total = 0.0;
  for (float p : softmax(logits)) total += p;
  CHECK(std::abs(total - 1.0) < 1e-6);
  CHECK_THROWS_AS(softmax(std::vector<float>{}), ArgumentError);
}

TEST_CASE("upsample_bilinear") {
  for (auto mode : {Interpolation::AlignCorners, Interpolation::HalfPixel}) {
    const Map2D seven = upsample_bilinear(Map2D(1, 1, 7.0f), 5, 9, mode);
    for (float v : seven.values) CHECK(v == 7.0f);

    Map2D ramp(2, 2);
    ramp.values = {0, 1, 0, 1};
    const Map2D wide = upsample_bilinear(ramp, 2, 3, mode);
    for (int y = 0; y < 2; ++y) {
      CHECK(wide.at(y, 0) == doctest::Approx(0.0));
      CHECK(wide.at(y, 1) == doctest::Approx(0.5));
      CHECK(wide.at(y, 2) == doctest::Approx(1.0));
    }

    Rng rng(6);
    Map2D m(4, 6);
    for (float& v : m.values) v = static_cast<float>(uniform_unit(rng));
    CHECK(upsample_bilinear(m, 4, 6, mode) == m);
  }
}

TEST_CASE("upsample_bilinear shift samples half a cell later") {
  Map2D ramp(1, 4);
  ramp.values = {0, 1, 2, 3};
  // 4 -> 8 with half-pixel centres: output x samples source x/2 - 0.25.
  const Map2D plain = upsample_bilinear(ramp, 1, 8, Interpolation::HalfPixel);
  const Map2D shifted = upsample_bilinear(ramp, 1, 8, Interpolation::HalfPixel, 0.0, 0.5);
  CHECK(plain.at(0, 3) == doctest::Approx(1.25));
  CHECK(shifted.at(0, 3) == doctest::Approx(1.75));
}

TEST_CASE("minmax_normalize") {
  Map2D m(1, 3);
  m.values = {2, 4, 6};
  CHECK(minmax_normalize(m).values == std::vector<float>{0, 0.5f, 1});
  for (float v : minmax_normalize(Map2D(3, 3, 5.0f)).values) CHECK(v == 0.0f);

  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    Map2D r(7, 5);
    for (float& v : r.values) v = static_cast<float>(uniform_unit(rng) * 10 - 5);
    const auto a = map_stats(r), b = map_stats(minmax_normalize(r));
    CHECK(a.argmax_row == b.argmax_row);
    CHECK(a.argmax_col == b.argmax_col);
  }
}

TEST_CASE("xcorr_cosine finds an exact copy of the kernel") {
  Rng rng(8);
  const Tensor kernel = testing::random_tensor({2, 3, 4}, rng, 0.1f, 1.0f);
  Tensor field({2, 12, 15});
  const int y0 = 6, x0 = 9;  // window centre
  for (int c = 0; c < 2; ++c) {
    for (int dy = 0; dy < 3; ++dy) {
      for (int dx = 0; dx < 4; ++dx) field(c, y0 - 1 + dy, x0 - 2 + dx) = kernel(c, dy, dx);
    }
  }
  const Map2D m = xcorr_cosine(kernel, field);
  CHECK(m.at(y0, x0) == doctest::Approx(1.0).epsilon(1e-6));
  const auto s = map_stats(m);
  CHECK(s.argmax_row == y0);
  CHECK(s.argmax_col == x0);
}

TEST_CASE("xcorr_cosine is zero for a kernel orthogonal to every window") {
  Tensor kernel({2, 3, 3});
  Tensor field({2, 8, 8});
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) kernel(0, y, x) = 1.0f;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) field(1, y, x) = 1.0f + y + x;
  for (float v : xcorr_cosine(kernel, field).values) CHECK(v == 0.0f);
  CHECK_THROWS_AS(xcorr_cosine(Tensor({1, 2, 2}), field), ShapeError);
}

TEST_CASE("xcorr_cosine matches the loop oracle on random shapes") {
  Rng rng(9);
  for (int i = 0; i < 60; ++i) {
    const int c = 1 + uniform_below(rng, 4);
    const int kh = 1 + uniform_below(rng, 4), kw = 1 + uniform_below(rng, 4);
    const int h = kh + uniform_below(rng, 10), w = kw + uniform_below(rng, 10);
    const Tensor kernel = testing::random_tensor({c, kh, kw}, rng);
    const Tensor field = testing::random_tensor({c, h, w}, rng);
    const Map2D got = xcorr_cosine(kernel, field);
    const Map2D want = oracle::xcorr_cosine(kernel, field);
    CHECK(oracle::max_relative_error(got.values, want.values) < 1e-5);
  }
}
