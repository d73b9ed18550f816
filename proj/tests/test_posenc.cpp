#include <doctest.h>

#include <cmath>

namespace { constexpr double kPi = 3.14159265358979323846; }

#include "faseg/posenc.hpp"
#include "test_util.hpp"

using namespace faseg;

TEST_CASE("sinusoidal single pixel closed form") {
  const PosEncoding pe = sinusoidal_pe(1, 1, 4);
  // (0.5/1)*2*pi = pi per axis; frequency 1 for both channel pairs.
  CHECK(std::abs(pe.data(0, 0) - std::sin(kPi)) < 1e-12);
  CHECK(std::abs(pe.data(0, 1) - (-1.0)) < 1e-12);
  CHECK(std::abs(pe.data(0, 2) - 0.0) < 1e-12);
  CHECK(std::abs(pe.data(0, 3) - (-1.0)) < 1e-12);
}

TEST_CASE("sinusoidal row squared norm equals d/2") {
  for (auto [h, w, d] : {std::tuple{3, 5, 8}, {1, 1, 4}, {4, 4, 16}, {2, 7, 32}}) {
    const PosEncoding pe = sinusoidal_pe(h, w, d);
    for (int r = 0; r < h * w; ++r) {
      double sq = 0.0;
      for (int c = 0; c < d; ++c) sq += pe.data(r, c) * pe.data(r, c);
      CHECK(std::abs(sq - d / 2.0) < 1e-9);
    }
  }
}

TEST_CASE("pixels sharing a row share the y channels exactly") {
  const PosEncoding pe = sinusoidal_pe(3, 4, 8);
  for (int y = 0; y < 3; ++y)
    for (int x = 1; x < 4; ++x)
      for (int c = 0; c < 4; ++c) CHECK(pe.data(y * 4 + x, c) == pe.data(y * 4, c));
}

TEST_CASE("sinusoidal rejects d not divisible by four") {
  CHECK_THROWS_AS(sinusoidal_pe(2, 2, 6), ParamError);
  CHECK_THROWS_AS(sinusoidal_point(0.5, 0.5, 10), ParamError);
}

TEST_CASE("learnable encoding determinism and range") {
  const PosEncoding a = learnable_pe(2, 3, 4, 42);
  const PosEncoding b = learnable_pe(2, 3, 4, 42);
  CHECK(a.data == b.data);
  const PosEncoding c = learnable_pe(2, 3, 4, 43);
  CHECK(!(a.data == c.data));
  const PosEncoding single = learnable_pe(1, 1, 4, 7);
  CHECK(single.data.rows() == 1);
  for (int j = 0; j < 4; ++j) {
    CHECK(single.data(0, j) >= -0.02);
    CHECK(single.data(0, j) <= 0.02);
  }
}

TEST_CASE("conditional encoding identity and zero kernels") {
  Rng rng(21);
  const FeatureMap f(2, 3, 2, testutil::rand_mat(6, 2, rng));
  Mat center(2, 9);
  center(0, 4) = center(1, 4) = 1.0;
  CHECK(conditional_pe(f, center).data == f.data);
  CHECK(max_abs_diff(conditional_pe(f, Mat(2, 9)).data, Mat(6, 2)) == 0.0);
}

TEST_CASE("conditional encoding zero-padding tap count") {
  const FeatureMap f(3, 3, 1, Mat(9, 1, 2.0));
  const PosEncoding pe = conditional_pe(f, Mat(1, 9, 1.0));
  CHECK(pe.data(4, 0) == 18.0);  // interior: 9 taps of 2
  CHECK(pe.data(0, 0) == 8.0);   // corner: 4 taps of 2
}

TEST_CASE("conditional encoding channel mismatch") {
  const FeatureMap f(2, 2, 3, Mat(4, 3));
  CHECK_THROWS_AS(conditional_pe(f, Mat(2, 9)), ShapeError);
}

TEST_CASE("conditional encoding depends only on a 3x3 neighborhood") {
  Rng rng(22);
  const int h = 5, w = 6, d = 2;
  const Mat kernels = peg_kernels(d, 9);
  const FeatureMap f(h, w, d, testutil::rand_mat(h * w, d, rng));
  Mat bumped = f.data;
  const int py = 2, px = 3;
  bumped(py * w + px, 0) += 1.0;
  const PosEncoding before = conditional_pe(f, kernels);
  const PosEncoding after = conditional_pe(FeatureMap(h, w, d, bumped), kernels);
  int changed = 0;
  for (int r = 0; r < h * w; ++r) {
    bool diff = false;
    for (int c = 0; c < d; ++c)
      if (before.data(r, c) != after.data(r, c)) diff = true;
    if (diff) {
      ++changed;
      const int yy = r / w, xx = r % w;
      CHECK(std::abs(yy - py) <= 1);
      CHECK(std::abs(xx - px) <= 1);
    }
  }
  CHECK(changed <= 9);
}
