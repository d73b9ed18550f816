#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "faseg/matrix.hpp"
#include "faseg/rng.hpp"

namespace faseg {

/// C[i][j] = sum_t A[i][t]*B[t][j], accumulated in ascending t order so
/// repeated runs are bit-identical.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b);

/// Row softmax with per-row max subtraction. -inf entries are mask
/// sentinels and map to exactly 0. A row of only -inf throws
/// DegenerateRowError; NaN or +inf anywhere throws ParamError.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& x);

/// Two-layer MLP parameters. Biases are 1-row matrices.
struct Mlp2Params {
  Mat w1, b1, w2, b2;

  /// w1 = w2 = I, zero biases: the MLP is the identity on nonnegative input.
  static Mlp2Params identity(int d);
  /// Exact identity on all inputs via x = relu(x) - relu(-x); hidden width 2d.
  static Mlp2Params exact_identity(int d);
  static Mlp2Params zeros(int d_in, int d_hidden, int d_out);
  static Mlp2Params seeded(int d_in, int d_hidden, int d_out, Rng& rng, double range = 0.02);

  int d_in() const { return w1.rows(); }
  int d_hidden() const { return w1.cols(); }
  int d_out() const { return w2.cols(); }
};

/// relu(x*w1 + b1)*w2 + b2, relu elementwise.
Mat mlp2(const Mat& x, const Mlp2Params& p);

/// mlp2 plus the pre-activation hidden matrix (x*w1 + b1). The tape needs
/// the hidden state for the backward rule; both paths share this function
/// so their arithmetic is identical.
std::pair<Mat, Mat> mlp2_forward(const Mat& x, const Mat& w1, const Mat& b1, const Mat& w2,
                                 const Mat& b2);

/// Per-row bilinear resize of flattened h_l x w_l maps to h_h x w_h.
/// Half-pixel centers with edge clamping:
///   src = (dst + 0.5) * (len_l / len_h) - 0.5, clamped to [0, len_l - 1].
template <typename T>
Matrix<T> bilinear_upsample(const Matrix<T>& a, int h_l, int w_l, int h_h, int w_h);

/// Depthwise 3x3 cross-correlation with zero padding of width 1.
/// `f` is (h*w) x d pixels row-major, `kernels` is d x 9 taps per channel.
template <typename T>
Matrix<T> depthwise_conv3x3(const Matrix<T>& f, int h, int w, const Matrix<T>& kernels);

/// Indices of the k largest scores, ties broken toward the lowest index,
/// returned sorted ascending.
template <typename T>
std::vector<int> topk_indices(const std::vector<T>& scores, int k);

/// Central differences (f(X+h*e) - f(X-h*e)) / (2h) per entry, f64 only.
/// Throws OracleError if f evaluates non-finite.
Mat finite_diff_grad(const std::function<double(const Mat&)>& f, const Mat& x, double h = 1e-5);

/// Elementwise logistic function.
Mat sigmoid(const Mat& x);

/// Elementwise max(x, 0).
Mat relu(const Mat& x);

}  // namespace faseg
