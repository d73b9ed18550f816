#include <doctest.h>

#include <cmath>

#include "faseg/posenc.hpp"
#include "faseg/queries.hpp"
#include "test_util.hpp"

using namespace faseg;

namespace {

PosEncoding wrap_pe(int h, int w, Mat data) {
  return PosEncoding(h, w, data.cols(), PeKind::kLearnableAbsolute, std::move(data));
}

}  // namespace

TEST_CASE("dfpq one-hot retrieval is exact") {
  Rng rng(31);
  const int hw = 6, d = 4;
  const Mat kp = testutil::rand_mat(hw, d, rng);
  Mat a(2, hw);
  a(0, 3) = 1.0;
  a(1, 0) = 1.0;
  const Mat out = dfpq_next(a, kp, DfpqParams::identity(2, d));
  for (int j = 0; j < d; ++j) {
    CHECK(out(0, j) == kp(3, j));
    CHECK(out(1, j) == kp(0, j));
  }
}

TEST_CASE("dfpq uniform attention averages the encodings") {
  Rng rng(32);
  const int hw = 8, d = 3;
  const Mat kp = testutil::rand_mat(hw, d, rng);
  const Mat a(2, hw, 1.0 / hw);
  const Mat out = dfpq_next(a, kp, DfpqParams::identity(2, d));
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int t = 0; t < hw; ++t) mean += kp(t, j);
    mean /= hw;
    CHECK(std::abs(out(0, j) - mean) < 1e-12);
    CHECK(std::abs(out(1, j) - mean) < 1e-12);
  }
}

TEST_CASE("dfpq hand-evaluated case") {
  DfpqParams p = DfpqParams::identity(1, 2);
  p.bias = Mat::from_rows({{1, 1}});
  const Mat out = dfpq_next(Mat::from_rows({{0.25, 0.75}}),
                            Mat::from_rows({{0.0, -1.0}, {0.0, 1.0}}), p);
  CHECK(out(0, 0) == doctest::Approx(1.0));
  CHECK(out(0, 1) == doctest::Approx(1.5));
}

TEST_CASE("dfpq shape and stochasticity preconditions") {
  const DfpqParams p = DfpqParams::identity(1, 4);
  CHECK_THROWS_AS(dfpq_next(Mat(1, 5), Mat(4, 4), p), ShapeError);
  // Typed overload validates the row-stochastic invariant on construction.
  CHECK_THROWS_AS(AttnScores(1, 4, Mat(1, 4, 0.3)), ParamError);
}

TEST_CASE("dfpq is linear in the encodings under the identity configuration") {
  Rng rng(33);
  const int hw = 9, d = 4;
  const Mat kp = testutil::rand_mat(hw, d, rng);
  const Mat a = testutil::rand_stochastic(3, hw, rng);
  const DfpqParams p = DfpqParams::identity(3, d);
  for (double alpha : {2.5, -0.75}) {
    const Mat lhs = dfpq_next(a, scale(kp, alpha), p);
    const Mat rhs = scale(dfpq_next(a, kp, p), alpha);
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("dfpq permutation equivariance is exact") {
  Rng rng(34);
  const int n = 4, hw = 7, d = 4;
  const Mat kp = testutil::rand_mat(hw, d, rng);
  const Mat a = testutil::rand_stochastic(n, hw, rng);
  DfpqParams p = DfpqParams::identity(n, d);
  p.bias = testutil::rand_mat(n, d, rng);

  const int perm[n] = {2, 0, 3, 1};
  Mat pa(n, hw), pbias(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < hw; ++j) pa(i, j) = a(perm[i], j);
    for (int j = 0; j < d; ++j) pbias(i, j) = p.bias(perm[i], j);
  }
  DfpqParams pp = p;
  pp.bias = pbias;
  const Mat base = dfpq_next(a, kp, p);
  const Mat permuted = dfpq_next(pa, kp, pp);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) CHECK(permuted(i, j) == base(perm[i], j));
}

TEST_CASE("dfpq identical score rows with equal bias rows give equal outputs") {
  Rng rng(35);
  const int hw = 5, d = 4;
  Mat a(3, hw);
  const Mat row = testutil::rand_stochastic(1, hw, rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < hw; ++j) a(i, j) = row(0, j);
  DfpqParams p = DfpqParams::identity(3, d);
  const Mat kp = testutil::rand_mat(hw, d, rng);
  const Mat out = dfpq_next(a, kp, p);
  for (int i = 1; i < 3; ++i)
    for (int j = 0; j < d; ++j) CHECK(out(i, j) == out(0, j));
}

TEST_CASE("bootstrap pooling: full, one-hot, and empty masks") {
  Rng rng(36);
  const int h = 2, w = 3, d = 4, n = 2;
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(h * w, d, rng));
  const DfpqParams p = DfpqParams::identity(n, d);

  int fb = -1;
  const Mat full = dfpq_bootstrap(MaskPrediction(h, w, Mat(n, h * w, 1.0)), kp, p, &fb);
  CHECK(fb == 0);
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int t = 0; t < h * w; ++t) mean += kp.data(t, j);
    mean /= h * w;
    CHECK(std::abs(full(0, j) - mean) < 1e-12);
  }

  Mat onehot(n, h * w);
  onehot(0, 4) = 1.0;
  onehot(1, 1) = 1.0;
  const Mat picked = dfpq_bootstrap(MaskPrediction(h, w, onehot), kp, p, &fb);
  CHECK(fb == 0);
  for (int j = 0; j < d; ++j) {
    CHECK(picked(0, j) == kp.data(4, j));
    CHECK(picked(1, j) == kp.data(1, j));
  }

  const Mat empty = dfpq_bootstrap(MaskPrediction(h, w, Mat(n, h * w, 0.0)), kp, p, &fb);
  CHECK(fb == n);
  CHECK(max_abs_diff(empty, full) == 0.0);  // fallback equals the global mean
}

TEST_CASE("bootstrap grid mismatch") {
  const PosEncoding kp = wrap_pe(2, 2, Mat(4, 4));
  CHECK_THROWS_AS(dfpq_bootstrap(MaskPrediction(2, 3, Mat(1, 6, 1.0)), kp,
                                 DfpqParams::identity(1, 4), nullptr),
                  ShapeError);
}

TEST_CASE("learnable positional queries") {
  const Mat a = pq_learnable(5, 3, 99);
  CHECK(a == pq_learnable(5, 3, 99));
  CHECK(!(a == pq_learnable(5, 3, 100)));
  CHECK(a.rows() == 5);
  CHECK(a.cols() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.data()[i] >= -0.02);
    CHECK(a.data()[i] <= 0.02);
  }
}

TEST_CASE("grid anchors: center and 2x2 layout") {
  const Mat one = pq_grid_anchor(1, 8, 4, 4);
  CHECK(max_abs_diff(one, sinusoidal_point(0.5, 0.5, 8)) == 0.0);

  const Mat four = pq_grid_anchor(4, 8, 4, 4);
  const double xs[4] = {0.25, 0.75, 0.25, 0.75};
  const double ys[4] = {0.25, 0.25, 0.75, 0.75};
  for (int i = 0; i < 4; ++i) {
    const Mat want = sinusoidal_point(xs[i], ys[i], 8);
    for (int j = 0; j < 8; ++j) CHECK(four(i, j) == want(0, j));
  }

  for (int i = 0; i < 4; ++i) {
    double sq = 0.0;
    for (int j = 0; j < 8; ++j) sq += four(i, j) * four(i, j);
    CHECK(std::abs(sq - 4.0) < 1e-9);
  }
  CHECK_THROWS_AS(pq_grid_anchor(4, 6, 4, 4), ParamError);
}

TEST_CASE("dynamic anchors from mask centers") {
  const int h = 1, w = 4, d = 8;
  const Mat full(1, h * w, 1.0);
  CHECK(max_abs_diff(pq_dynamic_anchor(MaskPrediction(h, w, full), d),
                     sinusoidal_point(0.5, 0.5, d)) == 0.0);

  Mat onehot(1, h * w);
  onehot(0, 2) = 1.0;
  CHECK(max_abs_diff(pq_dynamic_anchor(MaskPrediction(h, w, onehot), d),
                     sinusoidal_point(2.5 / 4, 0.5, d)) == 0.0);

  Mat two(1, h * w);
  two(0, 0) = two(0, 3) = 1.0;  // x in {0, 3} of w = 4 -> center x = 0.5
  CHECK(max_abs_diff(pq_dynamic_anchor(MaskPrediction(h, w, two), d),
                     sinusoidal_point(0.5, 0.5, d)) == 0.0);

  int fb = 0;
  pq_dynamic_anchor(MaskPrediction(h, w, Mat(1, h * w, 0.0)), d, &fb);
  CHECK(fb == 1);
}

TEST_CASE("dynamic foreground pooling") {
  Rng rng(37);
  const int h = 2, w = 4, d = 4;
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(h * w, d, rng));

  Mat onehot(1, h * w);
  onehot(0, 5) = 1.0;
  const Mat picked = pq_dynamic_foreground(MaskPrediction(h, w, onehot), kp);
  for (int j = 0; j < d; ++j) CHECK(picked(0, j) == kp.data(5, j));

  const Mat full = pq_dynamic_foreground(MaskPrediction(h, w, Mat(1, h * w, 1.0)), kp);
  Mat half_mask(1, h * w);
  for (int x = 0; x < w; ++x) half_mask(0, x) = 1.0;  // first grid row only
  const Mat half = pq_dynamic_foreground(MaskPrediction(h, w, half_mask), kp);
  for (int j = 0; j < d; ++j) {
    double mean_all = 0.0, mean_top = 0.0;
    for (int t = 0; t < h * w; ++t) mean_all += kp.data(t, j);
    for (int x = 0; x < w; ++x) mean_top += kp.data(x, j);
    CHECK(std::abs(full(0, j) - mean_all / (h * w)) < 1e-12);
    CHECK(std::abs(half(0, j) - mean_top / w) < 1e-12);
  }
}
