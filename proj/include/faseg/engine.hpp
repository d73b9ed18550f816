#pragma once

#include <utility>
#include <vector>

#include "faseg/autodiff.hpp"

namespace faseg {

/// Two interchangeable evaluation contexts. PlainCtx computes matrices
/// eagerly; TapeCtx records the identical primitive sequence on a Tape so
/// gradients of the exact same forward arithmetic can be taken. Algorithm
/// code is written once against this interface and instantiated with
/// either context, which keeps the checked path and the production path
/// bit-identical.
struct PlainCtx {
  using H = Mat;

  H leaf(Mat m) const { return m; }
  const Mat& val(const H& h) const { return h; }
  H matmul(const H& a, const H& b) const { return faseg::matmul(a, b); }
  H transpose(const H& a) const { return faseg::transpose(a); }
  H add(const H& a, const H& b) const { return faseg::add(a, b); }
  H add_const(const H& a, const Mat& c) const {
    require_same_shape(a, c, "add_const");
    Mat out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + c.data()[i];
    return out;
  }
  H scale(const H& a, double s) const { return faseg::scale(a, s); }
  H softmax_rows(const H& a) const { return faseg::softmax_rows(a); }
  H mlp2(const H& x, const H& w1, const H& b1, const H& w2, const H& b2) const {
    return mlp2_forward(x, w1, b1, w2, b2).first;
  }
  H gather_rows(const H& a, const std::vector<int>& rows) const {
    Mat out(static_cast<int>(rows.size()), a.cols());
    for (int i = 0; i < out.rows(); ++i) {
      const int r = rows[static_cast<std::size_t>(i)];
      if (r < 0 || r >= a.rows())
        throw IndexError("gather_rows: row " + std::to_string(r) + " out of " + a.shape_str());
      for (int j = 0; j < a.cols(); ++j) out(i, j) = a(r, j);
    }
    return out;
  }
  H slice_cols(const H& a, int c0, int c1) const {
    if (c0 < 0 || c1 > a.cols() || c0 >= c1) throw ParamError("slice_cols: invalid range");
    Mat out(a.rows(), c1 - c0);
    for (int i = 0; i < a.rows(); ++i)
      for (int j = c0; j < c1; ++j) out(i, j - c0) = a(i, j);
    return out;
  }
  H hcat(const H& a, const H& b) const {
    if (a.rows() != b.rows()) throw ShapeError("hcat: row counts differ");
    Mat out(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
      for (int j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
    }
    return out;
  }
  H sigmoid(const H& a) const { return faseg::sigmoid(a); }
};

struct TapeCtx {
  ad::Tape* tape;
  using H = ad::NodeId;

  H leaf(Mat m) const { return tape->leaf(std::move(m)); }
  const Mat& val(H h) const { return tape->value(h); }
  H matmul(H a, H b) const { return tape->matmul(a, b); }
  H transpose(H a) const { return tape->transpose(a); }
  H add(H a, H b) const { return tape->add(a, b); }
  H add_const(H a, const Mat& c) const { return tape->add_const(a, c); }
  H scale(H a, double s) const { return tape->scale(a, s); }
  H softmax_rows(H a) const { return tape->softmax_rows(a); }
  H mlp2(H x, H w1, H b1, H w2, H b2) const { return tape->mlp2(x, w1, b1, w2, b2); }
  H gather_rows(H a, const std::vector<int>& rows) const { return tape->gather_rows(a, rows); }
  H slice_cols(H a, int c0, int c1) const { return tape->slice_cols(a, c0, c1); }
  H hcat(H a, H b) const { return tape->hcat(a, b); }
  H sigmoid(H a) const { return tape->sigmoid(a); }
};

/// Handle bundle for two-layer MLP parameters.
template <class Ctx>
struct Mlp2H {
  typename Ctx::H w1, b1, w2, b2;
};

template <class Ctx>
Mlp2H<Ctx> lift(Ctx& cx, const Mlp2Params& p) {
  return {cx.leaf(p.w1), cx.leaf(p.b1), cx.leaf(p.w2), cx.leaf(p.b2)};
}

template <class Ctx>
typename Ctx::H apply_mlp2(Ctx& cx, const typename Ctx::H& x, const Mlp2H<Ctx>& p) {
  return cx.mlp2(x, p.w1, p.b1, p.w2, p.b2);
}

}  // namespace faseg
