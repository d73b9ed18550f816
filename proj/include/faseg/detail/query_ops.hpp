#pragma once

#include "faseg/engine.hpp"

namespace faseg::detail {

template <class Ctx>
struct DfpqH {
  typename Ctx::H bias;
  Mlp2H<Ctx> mlp;
};

/// Core of the dynamic positional-query update: mlp(a_prev * kp_rows + bias).
template <class Ctx>
typename Ctx::H dfpq_core(Ctx& cx, const typename Ctx::H& a_prev, const typename Ctx::H& kp_rows,
                          const DfpqH<Ctx>& p) {
  return apply_mlp2(cx, cx.add(cx.matmul(a_prev, kp_rows), p.bias), p.mlp);
}

}  // namespace faseg::detail
