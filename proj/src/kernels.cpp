#include "faseg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace faseg {

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " * " + b.shape_str());
  Matrix<T> c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const T* arow = a.row(i);
    T* crow = c.row(i);
    for (int t = 0; t < a.cols(); ++t) {
      const T av = arow[t];
      const T* brow = b.row(t);
      for (int j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& x) {
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  Matrix<T> y(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const T* in = x.row(i);
    T* out = y.row(i);
    T mx = kNegInf;
    for (int j = 0; j < x.cols(); ++j) {
      const T v = in[j];
      if (std::isnan(v) || v == std::numeric_limits<T>::infinity())
        throw ParamError("softmax_rows: entry is NaN or +inf at row " + std::to_string(i));
      mx = std::max(mx, v);
    }
    if (mx == kNegInf)
      throw DegenerateRowError("softmax_rows: row " + std::to_string(i) + " is entirely -inf");
    T sum = T(0);
    for (int j = 0; j < x.cols(); ++j) {
      const T e = std::exp(in[j] - mx);  // exp(-inf) == 0 exactly
      out[j] = e;
      sum += e;
    }
    for (int j = 0; j < x.cols(); ++j) out[j] /= sum;
  }
  return y;
}

Mlp2Params Mlp2Params::identity(int d) {
  return {Mat::identity(d), Mat(1, d), Mat::identity(d), Mat(1, d)};
}

Mlp2Params Mlp2Params::exact_identity(int d) {
  Mlp2Params p = zeros(d, 2 * d, d);
  for (int i = 0; i < d; ++i) {
    p.w1(i, i) = 1.0;
    p.w1(i, d + i) = -1.0;
    p.w2(i, i) = 1.0;
    p.w2(d + i, i) = -1.0;
  }
  return p;
}

Mlp2Params Mlp2Params::zeros(int d_in, int d_hidden, int d_out) {
  return {Mat(d_in, d_hidden), Mat(1, d_hidden), Mat(d_hidden, d_out), Mat(1, d_out)};
}

Mlp2Params Mlp2Params::seeded(int d_in, int d_hidden, int d_out, Rng& rng, double range) {
  Mlp2Params p = zeros(d_in, d_hidden, d_out);
  for (Mat* m : {&p.w1, &p.b1, &p.w2, &p.b2})
    for (std::size_t i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-range, range);
  return p;
}

std::pair<Mat, Mat> mlp2_forward(const Mat& x, const Mat& w1, const Mat& b1, const Mat& w2,
                                 const Mat& b2) {
  if (x.cols() != w1.rows() || w1.cols() != b1.cols() || w1.cols() != w2.rows() ||
      w2.cols() != b2.cols() || b1.rows() != 1 || b2.rows() != 1)
    throw ShapeError("mlp2: inconsistent parameter shapes, x " + x.shape_str() + ", w1 " +
                     w1.shape_str() + ", b1 " + b1.shape_str() + ", w2 " + w2.shape_str() +
                     ", b2 " + b2.shape_str());
  Mat hidden = matmul(x, w1);
  for (int i = 0; i < hidden.rows(); ++i)
    for (int j = 0; j < hidden.cols(); ++j) hidden(i, j) += b1(0, j);
  Mat act = relu(hidden);
  Mat out = matmul(act, w2);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += b2(0, j);
  return {std::move(out), std::move(hidden)};
}

Mat mlp2(const Mat& x, const Mlp2Params& p) {
  return mlp2_forward(x, p.w1, p.b1, p.w2, p.b2).first;
}

template <typename T>
Matrix<T> bilinear_upsample(const Matrix<T>& a, int h_l, int w_l, int h_h, int w_h) {
  if (h_l <= 0 || w_l <= 0 || h_h <= 0 || w_h <= 0)
    throw ShapeError("bilinear_upsample: zero-sized grid");
  if (a.cols() != h_l * w_l)
    throw ShapeError("bilinear_upsample: row length " + std::to_string(a.cols()) +
                     " != " + std::to_string(h_l) + "*" + std::to_string(w_l));
  if (h_h < h_l || w_h < w_l) throw ParamError("bilinear_upsample: target smaller than source");

  // Per-axis source coordinates and interpolation weights, computed once.
  struct Tap {
    int lo, hi;
    T w_hi;
  };
  auto make_taps = [](int len_l, int len_h) {
    std::vector<Tap> taps(len_h);
    for (int d = 0; d < len_h; ++d) {
      double s = (d + 0.5) * (static_cast<double>(len_l) / len_h) - 0.5;
      s = std::min(std::max(s, 0.0), static_cast<double>(len_l - 1));
      const int lo = static_cast<int>(std::floor(s));
      const int hi = std::min(lo + 1, len_l - 1);
      taps[d] = {lo, hi, static_cast<T>(s - lo)};
    }
    return taps;
  };
  const auto ty = make_taps(h_l, h_h);
  const auto tx = make_taps(w_l, w_h);

  Matrix<T> out(a.rows(), h_h * w_h);
  for (int r = 0; r < a.rows(); ++r) {
    const T* src = a.row(r);
    T* dst = out.row(r);
    for (int y = 0; y < h_h; ++y) {
      const Tap& py = ty[y];
      for (int x = 0; x < w_h; ++x) {
        const Tap& px = tx[x];
        const T v00 = src[py.lo * w_l + px.lo];
        const T v01 = src[py.lo * w_l + px.hi];
        const T v10 = src[py.hi * w_l + px.lo];
        const T v11 = src[py.hi * w_l + px.hi];
        const T top = v00 + (v01 - v00) * px.w_hi;
        const T bot = v10 + (v11 - v10) * px.w_hi;
        dst[y * w_h + x] = top + (bot - top) * py.w_hi;
      }
    }
  }
  return out;
}

template <typename T>
Matrix<T> depthwise_conv3x3(const Matrix<T>& f, int h, int w, const Matrix<T>& kernels) {
  if (f.rows() != h * w)
    throw ShapeError("depthwise_conv3x3: feature rows " + std::to_string(f.rows()) +
                     " != " + std::to_string(h) + "*" + std::to_string(w));
  if (kernels.rows() != f.cols() || kernels.cols() != 9)
    throw ShapeError("depthwise_conv3x3: kernels " + kernels.shape_str() + " != " +
                     std::to_string(f.cols()) + "x9");
  const int d = f.cols();
  Matrix<T> out(f.rows(), d);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T* dst = out.row(y * w + x);
      for (int dy = -1; dy <= 1; ++dy) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = x + dx;
          if (sx < 0 || sx >= w) continue;
          const T* src = f.row(sy * w + sx);
          const int tap = (dy + 1) * 3 + (dx + 1);
          for (int c = 0; c < d; ++c) dst[c] += src[c] * kernels(c, tap);
        }
      }
    }
  }
  return out;
}

template <typename T>
std::vector<int> topk_indices(const std::vector<T>& scores, int k) {
  const int l = static_cast<int>(scores.size());
  if (k < 1 || k > l)
    throw ParamError("topk_indices: k = " + std::to_string(k) + " out of [1, " +
                     std::to_string(l) + "]");
  for (const T v : scores)
    if (!std::isfinite(v)) throw ParamError("topk_indices: non-finite score");
  std::vector<int> order(l);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // ties toward the lowest index
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

Mat finite_diff_grad(const std::function<double(const Mat&)>& f, const Mat& x, double h) {
  Mat grad(x.rows(), x.cols());
  Mat probe = x;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double fp = f(probe);
      probe(i, j) = orig - h;
      const double fm = f(probe);
      probe(i, j) = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw OracleError("finite_diff_grad: non-finite evaluation at entry (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
      grad(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return grad;
}

Mat sigmoid(const Mat& x) {
  Mat y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
  return y;
}

Mat relu(const Mat& x) {
  Mat y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = std::max(x.data()[i], 0.0);
  return y;
}

template Matrix<float> matmul(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> matmul(const Matrix<double>&, const Matrix<double>&);
template Matrix<float> softmax_rows(const Matrix<float>&);
template Matrix<double> softmax_rows(const Matrix<double>&);
template Matrix<float> bilinear_upsample(const Matrix<float>&, int, int, int, int);
template Matrix<double> bilinear_upsample(const Matrix<double>&, int, int, int, int);
template Matrix<float> depthwise_conv3x3(const Matrix<float>&, int, int, const Matrix<float>&);
template Matrix<double> depthwise_conv3x3(const Matrix<double>&, int, int, const Matrix<double>&);
template std::vector<int> topk_indices(const std::vector<float>&, int);
template std::vector<int> topk_indices(const std::vector<double>&, int);

}  // namespace faseg
