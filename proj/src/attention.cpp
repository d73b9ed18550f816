#include "faseg/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "faseg/detail/attn_ops.hpp"
#include "faseg/kernels.hpp"

namespace faseg {

namespace {

void check_grids(const QueryState& q, const FeatureMap& kc, const PosEncoding& kp) {
  if (kc.h != kp.h || kc.w != kp.w)
    throw ShapeError("attention: feature grid " + std::to_string(kc.h) + "x" +
                     std::to_string(kc.w) + " vs encoding grid " + std::to_string(kp.h) + "x" +
                     std::to_string(kp.w));
  if (kc.d != q.d || kp.d != q.d)
    throw ShapeError("attention: channel mismatch, queries " + std::to_string(q.d) +
                     ", features " + std::to_string(kc.d) + ", encodings " + std::to_string(kp.d));
}

}  // namespace

AttnResult cross_attention(const QueryState& q, const FeatureMap& kc, const PosEncoding& kp,
                           int heads) {
  check_grids(q, kc, kp);
  PlainCtx cx;
  auto q_full = cx.add(cx.leaf(q.content), cx.leaf(q.positional));
  auto k_full = cx.add(cx.leaf(kc.data), cx.leaf(kp.data));
  auto r = detail::attn_core(cx, q_full, k_full, cx.leaf(kc.data), heads, nullptr);
  return {r.out, AttnScores(kc.h, kc.w, r.scores), 0};
}

Mat masked_logit_offset(const MaskPrediction& m, int* fallback_count) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const int n = m.probs.rows();
  const int hw = m.probs.cols();
  Mat offset(n, hw);
  int fallbacks = 0;
  for (int q = 0; q < n; ++q) {
    bool any = false;
    for (int p = 0; p < hw; ++p)
      if (m.foreground(q, p)) {
        any = true;
        break;
      }
    if (!any) {
      ++fallbacks;  // leave the row zero: dense fallback
      continue;
    }
    for (int p = 0; p < hw; ++p)
      if (!m.foreground(q, p)) offset(q, p) = kNegInf;
  }
  if (fallback_count) *fallback_count = fallbacks;
  return offset;
}

AttnResult masked_attention(const QueryState& q, const FeatureMap& kc, const PosEncoding& kp,
                            const MaskPrediction& m, int heads) {
  check_grids(q, kc, kp);
  if (m.h != kc.h || m.w != kc.w)
    throw ShapeError("masked_attention: mask grid must match the attention grid");
  int fallbacks = 0;
  const Mat offset = masked_logit_offset(m, &fallbacks);
  PlainCtx cx;
  auto q_full = cx.add(cx.leaf(q.content), cx.leaf(q.positional));
  auto k_full = cx.add(cx.leaf(kc.data), cx.leaf(kp.data));
  auto r = detail::attn_core(cx, q_full, k_full, cx.leaf(kc.data), heads, &offset);
  return {r.out, AttnScores(kc.h, kc.w, r.scores), fallbacks};
}

PixelIndexSet select_omega(const AttnScores& a_l, int h_h, int w_h, int k) {
  if (k < 1 || k > h_h * w_h)
    throw ParamError("select_omega: k = " + std::to_string(k) + " out of [1, " +
                     std::to_string(h_h * w_h) + "]");
  const Mat a_h = bilinear_upsample(a_l.data, a_l.h, a_l.w, h_h, w_h);
  std::vector<double> aggregate(static_cast<std::size_t>(h_h) * w_h, 0.0);
  for (int q = 0; q < a_h.rows(); ++q)
    for (int p = 0; p < a_h.cols(); ++p) aggregate[static_cast<std::size_t>(p)] += a_h(q, p);
  return PixelIndexSet(h_h, w_h, topk_indices(aggregate, k));
}

HrcaResult hrca(const QueryState& q, const FeatureMap& kc_h, const PosEncoding& kp_h,
                const PixelIndexSet& omega, int heads) {
  check_grids(q, kc_h, kp_h);
  if (omega.grid_h != kc_h.h || omega.grid_w != kc_h.w)
    throw IndexError("hrca: omega grid " + std::to_string(omega.grid_h) + "x" +
                     std::to_string(omega.grid_w) + " does not match features " +
                     std::to_string(kc_h.h) + "x" + std::to_string(kc_h.w));
  PlainCtx cx;
  auto q_full = cx.add(cx.leaf(q.content), cx.leaf(q.positional));
  auto k_full = cx.gather_rows(cx.add(cx.leaf(kc_h.data), cx.leaf(kp_h.data)), omega.indices);
  auto v = cx.gather_rows(cx.leaf(kc_h.data), omega.indices);
  auto r = detail::attn_core(cx, q_full, k_full, v, heads, nullptr);
  return {r.out, r.scores};
}

PixelIndexSet random_omega(int h, int w, int k, std::uint64_t seed) {
  const int hw = h * w;
  if (k < 1 || k > hw)
    throw ParamError("random_omega: k = " + std::to_string(k) + " out of [1, " +
                     std::to_string(hw) + "]");
  // Partial Fisher-Yates over index slots.
  std::vector<int> slots(static_cast<std::size_t>(hw));
  for (int i = 0; i < hw; ++i) slots[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  std::vector<int> picked(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.below(hw - i);
    std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(j)]);
    picked[static_cast<std::size_t>(i)] = slots[static_cast<std::size_t>(i)];
  }
  std::sort(picked.begin(), picked.end());
  return PixelIndexSet(h, w, std::move(picked));
}

MaskPrediction resize_mask_nearest(const MaskPrediction& m, int h_dst, int w_dst) {
  if (h_dst < 1 || w_dst < 1) throw ShapeError("resize_mask_nearest: empty target grid");
  const int n = m.probs.rows();
  Mat out(n, h_dst * w_dst);
  for (int y = 0; y < h_dst; ++y) {
    const int sy = std::min(m.h - 1, static_cast<int>((y + 0.5) * m.h / h_dst));
    for (int x = 0; x < w_dst; ++x) {
      const int sx = std::min(m.w - 1, static_cast<int>((x + 0.5) * m.w / w_dst));
      for (int q = 0; q < n; ++q) out(q, y * w_dst + x) = m.probs(q, sy * m.w + sx);
    }
  }
  return MaskPrediction(h_dst, w_dst, std::move(out), m.threshold);
}

template <typename T>
AttnForward<T> attn_forward(const Matrix<T>& q_full, const Matrix<T>& k_full, const Matrix<T>& v,
                            int heads) {
  const int d = q_full.cols();
  if (heads < 1 || d % heads != 0) throw ParamError("attn_forward: bad head count");
  const int dh = d / heads;
  const T inv_scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const int n = q_full.rows();
  const int seq = k_full.rows();
  Matrix<T> out(n, d);
  Matrix<T> score_avg(n, seq);
  Matrix<T> qh(n, dh), kh(seq, dh), vh(seq, dh);
  for (int h = 0; h < heads; ++h) {
    const int c0 = h * dh;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dh; ++j) qh(i, j) = q_full(i, c0 + j);
    for (int i = 0; i < seq; ++i)
      for (int j = 0; j < dh; ++j) {
        kh(i, j) = k_full(i, c0 + j);
        vh(i, j) = v(i, c0 + j);
      }
    Matrix<T> sc = softmax_rows(scale(matmul(qh, transpose(kh)), inv_scale));
    Matrix<T> oh = matmul(sc, vh);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dh; ++j) out(i, c0 + j) = oh(i, j);
    for (std::size_t i = 0; i < sc.size(); ++i) score_avg.data()[i] += sc.data()[i];
  }
  const T inv_heads = static_cast<T>(1.0) / static_cast<T>(heads);
  for (std::size_t i = 0; i < score_avg.size(); ++i) score_avg.data()[i] *= inv_heads;
  return {std::move(out), std::move(score_avg)};
}

template <typename T>
std::vector<int> select_omega_flat(const Matrix<T>& a_l, int h_l, int w_l, int h_h, int w_h,
                                   int k) {
  const Matrix<T> a_h = bilinear_upsample(a_l, h_l, w_l, h_h, w_h);
  std::vector<T> aggregate(static_cast<std::size_t>(h_h) * w_h, T(0));
  for (int q = 0; q < a_h.rows(); ++q)
    for (int p = 0; p < a_h.cols(); ++p) aggregate[static_cast<std::size_t>(p)] += a_h(q, p);
  return topk_indices(aggregate, k);
}

template AttnForward<float> attn_forward(const Matrix<float>&, const Matrix<float>&,
                                         const Matrix<float>&, int);
template AttnForward<double> attn_forward(const Matrix<double>&, const Matrix<double>&,
                                          const Matrix<double>&, int);
template std::vector<int> select_omega_flat(const Matrix<float>&, int, int, int, int, int);
template std::vector<int> select_omega_flat(const Matrix<double>&, int, int, int, int, int);

}  // namespace faseg
