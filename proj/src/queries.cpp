#include "faseg/queries.hpp"

#include <cmath>

#include "faseg/detail/query_ops.hpp"
#include "faseg/posenc.hpp"

namespace faseg {

// Identity configuration must hold for arbitrary-signed encodings, so it
// uses the exact relu(x) - relu(-x) construction.
DfpqParams DfpqParams::identity(int n, int d) { return {Mat(n, d), Mlp2Params::exact_identity(d)}; }

DfpqParams DfpqParams::seeded(int n, int d, int d_hidden, Rng& rng) {
  Mat bias(n, d);
  for (std::size_t i = 0; i < bias.size(); ++i) bias.data()[i] = rng.uniform(-0.02, 0.02);
  return {std::move(bias), Mlp2Params::seeded(d, d_hidden, d, rng)};
}

namespace {

detail::DfpqH<PlainCtx> lift_dfpq(PlainCtx& cx, const DfpqParams& p) {
  return {cx.leaf(p.bias), lift(cx, p.mlp)};
}

}  // namespace

Mat dfpq_next(const Mat& a_prev, const Mat& kp_rows, const DfpqParams& params) {
  if (a_prev.cols() != kp_rows.rows())
    throw ShapeError("dfpq_next: scores " + a_prev.shape_str() + " vs encodings " +
                     kp_rows.shape_str());
  if (a_prev.rows() != params.bias.rows() || params.mlp.d_out() != params.bias.cols())
    throw ShapeError("dfpq_next: bias " + params.bias.shape_str() + " does not match output");
  PlainCtx cx;
  auto p = lift_dfpq(cx, params);
  return detail::dfpq_core(cx, cx.leaf(a_prev), cx.leaf(kp_rows), p);
}

Mat dfpq_next(const AttnScores& a_prev, const PosEncoding& kp_prev, const DfpqParams& params) {
  if (a_prev.h != kp_prev.h || a_prev.w != kp_prev.w)
    throw ShapeError("dfpq_next: score grid does not match encoding grid");
  a_prev.validate_stochastic(1e-6);
  return dfpq_next(a_prev.data, kp_prev.data, params);
}

Mat mask_pooling_matrix(const MaskPrediction& m, int* fallback_count) {
  const int n = m.probs.rows();
  const int hw = m.probs.cols();
  Mat pool(n, hw);
  int fallbacks = 0;
  for (int q = 0; q < n; ++q) {
    int count = 0;
    for (int p = 0; p < hw; ++p)
      if (m.foreground(q, p)) ++count;
    if (count == 0) {
      ++fallbacks;
      const double inv = 1.0 / hw;
      for (int p = 0; p < hw; ++p) pool(q, p) = inv;
    } else {
      const double inv = 1.0 / count;
      for (int p = 0; p < hw; ++p)
        if (m.foreground(q, p)) pool(q, p) = inv;
    }
  }
  if (fallback_count) *fallback_count = fallbacks;
  return pool;
}

Mat dfpq_bootstrap(const MaskPrediction& m0, const PosEncoding& kp, const DfpqParams& params,
                   int* fallback_count) {
  if (m0.h != kp.h || m0.w != kp.w)
    throw ShapeError("dfpq_bootstrap: mask grid " + std::to_string(m0.h) + "x" +
                     std::to_string(m0.w) + " vs encoding grid " + std::to_string(kp.h) + "x" +
                     std::to_string(kp.w));
  Mat pool = mask_pooling_matrix(m0, fallback_count);
  return dfpq_next(pool, kp.data, params);
}

Mat pq_learnable(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Mat q(n, d);
  for (std::size_t i = 0; i < q.size(); ++i) q.data()[i] = rng.uniform(-0.02, 0.02);
  return q;
}

Mat pq_grid_anchor(int n, int d, int /*h*/, int /*w*/) {
  if (d % 4 != 0) throw ParamError("pq_grid_anchor needs d divisible by 4");
  if (n < 1) throw ParamError("pq_grid_anchor: n must be positive");
  const int rows = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int cols = (n + rows - 1) / rows;
  Mat q(n, d);
  for (int i = 0; i < n; ++i) {
    const int iy = i / cols;
    const int ix = i % cols;
    const Mat row = sinusoidal_point((ix + 0.5) / cols, (iy + 0.5) / rows, d);
    for (int j = 0; j < d; ++j) q(i, j) = row(0, j);
  }
  return q;
}

Mat pq_dynamic_anchor(const MaskPrediction& m, int d, int* fallback_count) {
  if (d % 4 != 0) throw ParamError("pq_dynamic_anchor needs d divisible by 4");
  const int n = m.probs.rows();
  Mat q(n, d);
  int fallbacks = 0;
  for (int i = 0; i < n; ++i) {
    double cx = 0.0, cy = 0.0;
    int count = 0;
    for (int y = 0; y < m.h; ++y) {
      for (int x = 0; x < m.w; ++x) {
        if (!m.foreground(i, y * m.w + x)) continue;
        cx += (x + 0.5) / m.w;
        cy += (y + 0.5) / m.h;
        ++count;
      }
    }
    if (count == 0) {
      ++fallbacks;
      cx = 0.5;
      cy = 0.5;
    } else {
      cx /= count;
      cy /= count;
    }
    const Mat row = sinusoidal_point(cx, cy, d);
    for (int j = 0; j < d; ++j) q(i, j) = row(0, j);
  }
  if (fallback_count) *fallback_count = fallbacks;
  return q;
}

Mat pq_dynamic_foreground(const MaskPrediction& m, const PosEncoding& kp, int* fallback_count) {
  if (m.h != kp.h || m.w != kp.w)
    throw ShapeError("pq_dynamic_foreground: mask grid does not match encoding grid");
  Mat pool = mask_pooling_matrix(m, fallback_count);
  return matmul(pool, kp.data);
}

}  // namespace faseg
