#include <doctest.h>

#include <cmath>
#include <numeric>

#include "faseg/attention.hpp"
#include "faseg/kernels.hpp"
#include "test_util.hpp"

using namespace faseg;

namespace {

FeatureMap wrap_fm(int h, int w, Mat data) {
  return FeatureMap(h, w, data.cols(), std::move(data));
}

PosEncoding wrap_pe(int h, int w, Mat data) {
  return PosEncoding(h, w, data.cols(), PeKind::kLearnableAbsolute, std::move(data));
}

QueryState make_queries(int n, int d, Rng& rng) {
  return QueryState(testutil::rand_mat(n, d, rng), testutil::rand_mat(n, d, rng));
}

}  // namespace

TEST_CASE("uniform attention averages the values") {
  // q_full = 0, k_full = 0 -> uniform scores; out = mean of V.
  const QueryState q(Mat(1, 1), Mat(1, 1));
  const FeatureMap kc = wrap_fm(1, 2, Mat::from_rows({{1.0}, {3.0}}));
  const PosEncoding kp = wrap_pe(1, 2, sub(Mat(2, 1), kc.data));  // kp = -kc so k_full = 0
  const auto r = cross_attention(q, kc, kp, 1);
  CHECK(r.out(0, 0) == doctest::Approx(2.0));
  CHECK(r.scores.data(0, 0) == doctest::Approx(0.5));
  CHECK(r.scores.data(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("zero positional parts reduce to content-only attention") {
  Rng rng(41);
  const int n = 3, h = 2, w = 3, d = 4;
  const FeatureMap kc = wrap_fm(h, w, testutil::rand_mat(h * w, d, rng));
  const Mat content = testutil::rand_mat(n, d, rng);
  const QueryState q(content, Mat(n, d));
  const PosEncoding zero_pe = wrap_pe(h, w, Mat(h * w, d));
  const auto with_zero = cross_attention(q, kc, zero_pe, 2);
  // Oracle route: K = Kc alone.
  const auto oracle = testutil::naive_attention(content, kc.data, kc.data, 2);
  CHECK(max_abs_diff(with_zero.out, oracle.out) < 1e-12);
  CHECK(max_abs_diff(with_zero.scores.data, oracle.scores) < 1e-12);
}

TEST_CASE("closed-form logits 0 and ln 3") {
  const QueryState q(Mat(1, 1, 1.0), Mat(1, 1));
  const FeatureMap kc = wrap_fm(1, 2, Mat::from_rows({{0.0}, {std::log(3.0)}}));
  const PosEncoding kp = wrap_pe(1, 2, Mat(2, 1));
  const auto r = cross_attention(q, kc, kp, 1);
  CHECK(std::abs(r.scores.data(0, 0) - 0.25) < 1e-12);
  CHECK(std::abs(r.scores.data(0, 1) - 0.75) < 1e-12);
  CHECK(std::abs(r.out(0, 0) - 0.75 * std::log(3.0)) < 1e-12);
}

TEST_CASE("cross attention shape errors") {
  Rng rng(42);
  const QueryState q = make_queries(2, 4, rng);
  const FeatureMap kc = wrap_fm(2, 2, testutil::rand_mat(4, 4, rng));
  CHECK_THROWS_AS(cross_attention(q, kc, wrap_pe(2, 3, Mat(6, 4)), 2), ShapeError);
  CHECK_THROWS_AS(cross_attention(q, kc, wrap_pe(2, 2, Mat(4, 4)), 3), ParamError);
}

TEST_CASE("masked attention: full, single-pixel, and empty masks") {
  Rng rng(43);
  const int n = 2, h = 2, w = 2, d = 4, hw = h * w;
  const QueryState q = make_queries(n, d, rng);
  const FeatureMap kc = wrap_fm(h, w, testutil::rand_mat(hw, d, rng));
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(hw, d, rng));
  const auto dense = cross_attention(q, kc, kp, 2);

  const auto full = masked_attention(q, kc, kp, MaskPrediction(h, w, Mat(n, hw, 1.0)), 2);
  CHECK(full.mask_fallbacks == 0);
  CHECK(max_abs_diff(full.out, dense.out) == 0.0);
  CHECK(max_abs_diff(full.scores.data, dense.scores.data) == 0.0);

  Mat single(n, hw);
  single(0, 3) = 1.0;
  single(1, 1) = 1.0;
  const auto one = masked_attention(q, kc, kp, MaskPrediction(h, w, single), 2);
  CHECK(one.mask_fallbacks == 0);
  for (int j = 0; j < d; ++j) {
    CHECK(one.out(0, j) == doctest::Approx(kc.data(3, j)));
    CHECK(one.out(1, j) == doctest::Approx(kc.data(1, j)));
  }
  CHECK(one.scores.data(0, 3) == 1.0);
  CHECK(one.scores.data(0, 0) == 0.0);

  Mat half_empty(n, hw);
  half_empty(0, 2) = 1.0;  // query 1 has no foreground at all
  const auto fb = masked_attention(q, kc, kp, MaskPrediction(h, w, half_empty), 2);
  CHECK(fb.mask_fallbacks == 1);
  for (int j = 0; j < hw; ++j) CHECK(fb.scores.data(1, j) == dense.scores.data(1, j));
  for (int j = 0; j < d; ++j) CHECK(fb.out(1, j) == dense.out(1, j));
}

TEST_CASE("select_omega argmax, tie rule, and brute-force oracle") {
  // Same-size grid, k = 1: the single query's argmax wins.
  Mat row(1, 4);
  row(0, 0) = 0.1;
  row(0, 1) = 0.6;
  row(0, 2) = 0.2;
  row(0, 3) = 0.1;
  const PixelIndexSet top = select_omega(AttnScores(2, 2, row), 2, 2, 1);
  CHECK(top.indices == std::vector<int>{1});

  // Constant aggregate: lowest indices win.
  const PixelIndexSet ties = select_omega(AttnScores(2, 2, Mat(3, 4, 0.25)), 4, 4, 5);
  CHECK(ties.indices == std::vector<int>{0, 1, 2, 3, 4});

  Rng rng(44);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2;
    const Mat scores = testutil::rand_stochastic(n, 4, rng);
    const int k = 3;
    const PixelIndexSet got = select_omega(AttnScores(2, 2, scores), 4, 4, k);

    // Oracle: explicit per-query upsample, sum, stable sort.
    std::vector<double> agg(16, 0.0);
    for (int i = 0; i < n; ++i) {
      std::vector<double> src(scores.row(i), scores.row(i) + 4);
      const auto up = testutil::naive_bilinear(src, 2, 2, 4, 4);
      for (int p = 0; p < 16; ++p) agg[static_cast<std::size_t>(p)] += up[static_cast<std::size_t>(p)];
    }
    std::vector<int> order(16);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return agg[static_cast<std::size_t>(a)] > agg[static_cast<std::size_t>(b)];
    });
    std::vector<int> want(order.begin(), order.begin() + k);
    std::sort(want.begin(), want.end());
    CHECK(got.indices == want);
  }
}

TEST_CASE("select_omega is invariant to query permutation") {
  Rng rng(45);
  const Mat scores = testutil::rand_stochastic(4, 9, rng);
  Mat permuted(4, 9);
  const int perm[4] = {3, 1, 0, 2};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 9; ++j) permuted(i, j) = scores(perm[i], j);
  const auto a = select_omega(AttnScores(3, 3, scores), 6, 6, 7);
  const auto b = select_omega(AttnScores(3, 3, permuted), 6, 6, 7);
  CHECK(a.indices == b.indices);
}

TEST_CASE("hrca equals dense attention on the full grid") {
  Rng rng(46);
  const int n = 3, h = 2, w = 4, d = 8, hw = h * w;
  const QueryState q = make_queries(n, d, rng);
  const FeatureMap kc = wrap_fm(h, w, testutil::rand_mat(hw, d, rng));
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(hw, d, rng));
  std::vector<int> all(hw);
  std::iota(all.begin(), all.end(), 0);
  const auto sparse = hrca(q, kc, kp, PixelIndexSet(h, w, all), 2);
  const auto dense = cross_attention(q, kc, kp, 2);
  CHECK(max_abs_diff(sparse.out, dense.out) < 1e-9);
  CHECK(max_abs_diff(sparse.sparse_scores, dense.scores.data) < 1e-9);
}

TEST_CASE("hrca with a single pixel returns that value row") {
  Rng rng(47);
  const int n = 2, h = 2, w = 2, d = 4;
  const QueryState q = make_queries(n, d, rng);
  const FeatureMap kc = wrap_fm(h, w, testutil::rand_mat(4, d, rng));
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(4, d, rng));
  const auto r = hrca(q, kc, kp, PixelIndexSet(h, w, {2}), 2);
  for (int i = 0; i < n; ++i) {
    CHECK(r.sparse_scores(i, 0) == 1.0);
    for (int j = 0; j < d; ++j) CHECK(r.out(i, j) == doctest::Approx(kc.data(2, j)));
  }
}

TEST_CASE("hrca equals the gather-then-dense oracle") {
  Rng rng(48);
  const int n = 3, h = 4, w = 4, d = 8, heads = 2;
  const QueryState q = make_queries(n, d, rng);
  const FeatureMap kc = wrap_fm(h, w, testutil::rand_mat(h * w, d, rng));
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(h * w, d, rng));
  const PixelIndexSet omega(h, w, {1, 6, 9, 14});

  const auto r = hrca(q, kc, kp, omega, heads);

  // Oracle: explicit gather, then straight-line attention.
  const int m = omega.size();
  Mat kg(m, d), vg(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) {
      const int p = omega.indices[static_cast<std::size_t>(i)];
      kg(i, j) = kc.data(p, j) + kp.data(p, j);
      vg(i, j) = kc.data(p, j);
    }
  const auto want = testutil::naive_attention(add(q.content, q.positional), kg, vg, heads);
  CHECK(max_abs_diff(r.out, want.out) < 1e-9);
  CHECK(max_abs_diff(r.sparse_scores, want.scores) < 1e-9);
}

TEST_CASE("hrca equals masked attention restricted to omega") {
  Rng rng(49);
  const int n = 3, h = 4, w = 4, d = 8, hw = h * w;
  const QueryState q = make_queries(n, d, rng);
  const FeatureMap kc = wrap_fm(h, w, testutil::rand_mat(hw, d, rng));
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(hw, d, rng));
  const PixelIndexSet omega(h, w, {0, 3, 7, 8, 13});

  Mat indicator(n, hw);
  for (int i = 0; i < n; ++i)
    for (int p : omega.indices) indicator(i, p) = 1.0;
  const auto masked = masked_attention(q, kc, kp, MaskPrediction(h, w, indicator), 2);
  const auto sparse = hrca(q, kc, kp, omega, 2);

  CHECK(max_abs_diff(masked.out, sparse.out) < 1e-9);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < omega.size(); ++s)
      CHECK(std::abs(masked.scores.data(i, omega.indices[static_cast<std::size_t>(s)]) -
                     sparse.sparse_scores(i, s)) < 1e-9);
    for (int p = 0; p < hw; ++p) {
      bool in_omega = false;
      for (int v : omega.indices) in_omega = in_omega || v == p;
      if (!in_omega) CHECK(masked.scores.data(i, p) == 0.0);  // exact zeros off-mask
    }
  }
}

TEST_CASE("hrca omega grid mismatch") {
  Rng rng(50);
  const QueryState q = make_queries(1, 4, rng);
  const FeatureMap kc = wrap_fm(2, 2, testutil::rand_mat(4, 4, rng));
  const PosEncoding kp = wrap_pe(2, 2, testutil::rand_mat(4, 4, rng));
  CHECK_THROWS_AS(hrca(q, kc, kp, PixelIndexSet(2, 3, {0, 5}), 2), IndexError);
}

TEST_CASE("templated forward kernel matches the engine path at f64") {
  Rng rng(55);
  const int n = 4, h = 3, w = 3, d = 8, hw = h * w;
  const QueryState q = make_queries(n, d, rng);
  const FeatureMap kc = wrap_fm(h, w, testutil::rand_mat(hw, d, rng));
  const PosEncoding kp = wrap_pe(h, w, testutil::rand_mat(hw, d, rng));
  const auto engine = cross_attention(q, kc, kp, 2);
  const auto fwd = attn_forward(add(q.content, q.positional), add(kc.data, kp.data), kc.data, 2);
  CHECK(max_abs_diff(engine.out, fwd.out) == 0.0);
  CHECK(max_abs_diff(engine.scores.data, fwd.scores) == 0.0);
}

TEST_CASE("random omega: full grid, determinism, frequencies") {
  const auto full = random_omega(2, 3, 6, 5);
  CHECK(full.indices == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(random_omega(4, 4, 5, 123).indices == random_omega(4, 4, 5, 123).indices);
  CHECK_THROWS_AS(random_omega(2, 2, 5, 1), ParamError);

  int counts[4] = {0, 0, 0, 0};
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    counts[random_omega(2, 2, 1, seed).indices[0]] += 1;
  for (int c : counts) {
    CHECK(c > 200);  // within +-5 points of the uniform 25%
    CHECK(c < 300);
  }
}

TEST_CASE("resize_mask_nearest keeps masks binary and aligns grids") {
  Mat probs(1, 4);
  probs(0, 0) = 1.0;  // 2x2: foreground at top-left only
  const MaskPrediction m(2, 2, probs);
  const MaskPrediction up = resize_mask_nearest(m, 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      CHECK(up.probs(0, y * 4 + x) == ((y < 2 && x < 2) ? 1.0 : 0.0));
  const MaskPrediction down = resize_mask_nearest(up, 2, 2);
  CHECK(down.probs == m.probs);
}
