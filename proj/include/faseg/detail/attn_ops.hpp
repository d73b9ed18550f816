#pragma once

#include <cmath>

#include "faseg/engine.hpp"

namespace faseg::detail {

template <class Ctx>
struct AttnCoreOut {
  typename Ctx::H out;     // n x d
  typename Ctx::H scores;  // head-averaged, n x seq
};

/// Multi-head scaled dot-product attention with an optional additive logit
/// offset (0 / -inf mask rows). q_full: n x d, k_full: seq x d, v: seq x d.
/// Head h works on channel slice [h*d/heads, (h+1)*d/heads).
template <class Ctx>
AttnCoreOut<Ctx> attn_core(Ctx& cx, const typename Ctx::H& q_full, const typename Ctx::H& k_full,
                           const typename Ctx::H& v, int heads, const Mat* logit_offset) {
  const int d = cx.val(q_full).cols();
  if (heads < 1 || d % heads != 0)
    throw ParamError("attention: channels " + std::to_string(d) + " not divisible by heads " +
                     std::to_string(heads));
  if (cx.val(k_full).cols() != d || cx.val(v).rows() != cx.val(k_full).rows())
    throw ShapeError("attention: k " + cx.val(k_full).shape_str() + " / v " +
                     cx.val(v).shape_str() + " inconsistent with q " + cx.val(q_full).shape_str());
  const int dh = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  typename Ctx::H out{};
  typename Ctx::H score_sum{};
  for (int h = 0; h < heads; ++h) {
    auto qh = cx.slice_cols(q_full, h * dh, (h + 1) * dh);
    auto kh = cx.slice_cols(k_full, h * dh, (h + 1) * dh);
    auto vh = cx.slice_cols(v, h * dh, (h + 1) * dh);
    auto logits = cx.scale(cx.matmul(qh, cx.transpose(kh)), inv_scale);
    if (logit_offset != nullptr) logits = cx.add_const(logits, *logit_offset);
    auto sc = cx.softmax_rows(logits);
    auto oh = cx.matmul(sc, vh);
    out = (h == 0) ? oh : cx.hcat(out, oh);
    score_sum = (h == 0) ? sc : cx.add(score_sum, sc);
  }
  return {out, cx.scale(score_sum, 1.0 / heads)};
}

}  // namespace faseg::detail
