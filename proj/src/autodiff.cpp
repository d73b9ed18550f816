#include "faseg/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace faseg::ad {

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

const Tape::Node& Tape::at(NodeId id) const {
  if (id < 0 || id >= size()) throw ParamError("tape: node id " + std::to_string(id) + " out of range");
  return nodes_[static_cast<std::size_t>(id)];
}

const Mat& Tape::value(NodeId id) const { return at(id).value; }

NodeId Tape::leaf(Mat value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kMatMul;
  n.in[0] = a;
  n.in[1] = b;
  n.value = faseg::matmul(value(a), value(b));
  return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
  Node n;
  n.op = Op::kTranspose;
  n.in[0] = a;
  n.value = faseg::transpose(value(a));
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kAdd;
  n.in[0] = a;
  n.in[1] = b;
  n.value = faseg::add(value(a), value(b));
  return push(std::move(n));
}

NodeId Tape::add_const(NodeId a, Mat c) {
  require_same_shape(value(a), c, "add_const");
  Node n;
  n.op = Op::kAddConst;
  n.in[0] = a;
  n.value = Mat(c.rows(), c.cols());
  for (std::size_t i = 0; i < c.size(); ++i) n.value.data()[i] = value(a).data()[i] + c.data()[i];
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double s) {
  Node n;
  n.op = Op::kScale;
  n.in[0] = a;
  n.s = s;
  n.value = faseg::scale(value(a), s);
  return push(std::move(n));
}

NodeId Tape::softmax_rows(NodeId a) {
  Node n;
  n.op = Op::kSoftmaxRows;
  n.in[0] = a;
  n.value = faseg::softmax_rows(value(a));
  return push(std::move(n));
}

NodeId Tape::mlp2(NodeId x, NodeId w1, NodeId b1, NodeId w2, NodeId b2) {
  Node n;
  n.op = Op::kMlp2;
  n.in[0] = x;
  n.in[1] = w1;
  n.in[2] = b1;
  n.in[3] = w2;
  n.in[4] = b2;
  auto [out, hidden] = mlp2_forward(value(x), value(w1), value(b1), value(w2), value(b2));
  n.value = std::move(out);
  n.aux = std::move(hidden);
  return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> rows) {
  const Mat& src = value(a);
  for (int r : rows)
    if (r < 0 || r >= src.rows())
      throw IndexError("gather_rows: row " + std::to_string(r) + " out of " + src.shape_str());
  Node n;
  n.op = Op::kGatherRows;
  n.in[0] = a;
  n.value = Mat(static_cast<int>(rows.size()), src.cols());
  for (int i = 0; i < n.value.rows(); ++i)
    for (int j = 0; j < src.cols(); ++j) n.value(i, j) = src(rows[static_cast<std::size_t>(i)], j);
  n.rows = std::move(rows);
  return push(std::move(n));
}

NodeId Tape::slice_cols(NodeId a, int c0, int c1) {
  const Mat& src = value(a);
  if (c0 < 0 || c1 > src.cols() || c0 >= c1)
    throw ParamError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") invalid for " + src.shape_str());
  Node n;
  n.op = Op::kSliceCols;
  n.in[0] = a;
  n.c0 = c0;
  n.c1 = c1;
  n.value = Mat(src.rows(), c1 - c0);
  for (int i = 0; i < src.rows(); ++i)
    for (int j = c0; j < c1; ++j) n.value(i, j - c0) = src(i, j);
  return push(std::move(n));
}

NodeId Tape::hcat(NodeId a, NodeId b) {
  const Mat& ma = value(a);
  const Mat& mb = value(b);
  if (ma.rows() != mb.rows())
    throw ShapeError("hcat: row counts differ, " + ma.shape_str() + " vs " + mb.shape_str());
  Node n;
  n.op = Op::kHcat;
  n.in[0] = a;
  n.in[1] = b;
  n.value = Mat(ma.rows(), ma.cols() + mb.cols());
  for (int i = 0; i < ma.rows(); ++i) {
    for (int j = 0; j < ma.cols(); ++j) n.value(i, j) = ma(i, j);
    for (int j = 0; j < mb.cols(); ++j) n.value(i, ma.cols() + j) = mb(i, j);
  }
  n.c0 = ma.cols();
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.in[0] = a;
  n.value = faseg::sigmoid(value(a));
  return push(std::move(n));
}

namespace {

void accumulate(std::vector<Mat>& grads, NodeId id, const Mat& contribution) {
  Mat& g = grads[static_cast<std::size_t>(id)];
  if (g.rows() != contribution.rows() || g.cols() != contribution.cols())
    g = Mat(contribution.rows(), contribution.cols());
  for (std::size_t i = 0; i < contribution.size(); ++i) g.data()[i] += contribution.data()[i];
}

}  // namespace

std::vector<Mat> Tape::backward(NodeId out, const Mat& seed_grad) const {
  const Mat& out_val = value(out);
  if (!(seed_grad.rows() == out_val.rows() && seed_grad.cols() == out_val.cols()))
    throw ShapeError("backward: seed " + seed_grad.shape_str() + " vs output " + out_val.shape_str());

  std::vector<Mat> grads(nodes_.size());
  grads[static_cast<std::size_t>(out)] = seed_grad;

  for (NodeId id = out; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Mat& g = grads[static_cast<std::size_t>(id)];
    if (g.empty()) continue;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul: {
        const Mat& a = value(n.in[0]);
        const Mat& b = value(n.in[1]);
        accumulate(grads, n.in[0], faseg::matmul(g, faseg::transpose(b)));
        accumulate(grads, n.in[1], faseg::matmul(faseg::transpose(a), g));
        break;
      }
      case Op::kTranspose:
        accumulate(grads, n.in[0], faseg::transpose(g));
        break;
      case Op::kAdd:
        accumulate(grads, n.in[0], g);
        accumulate(grads, n.in[1], g);
        break;
      case Op::kAddConst:
        accumulate(grads, n.in[0], g);
        break;
      case Op::kScale:
        accumulate(grads, n.in[0], faseg::scale(g, n.s));
        break;
      case Op::kSoftmaxRows: {
        // dX = Y .* (dY - rowsum(dY .* Y)); exact zeros where Y is zero.
        const Mat& y = n.value;
        Mat dx(y.rows(), y.cols());
        for (int i = 0; i < y.rows(); ++i) {
          double dot = 0.0;
          for (int j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
          for (int j = 0; j < y.cols(); ++j) dx(i, j) = y(i, j) * (g(i, j) - dot);
        }
        accumulate(grads, n.in[0], dx);
        break;
      }
      case Op::kMlp2: {
        const Mat& x = value(n.in[0]);
        const Mat& w1 = value(n.in[1]);
        const Mat& w2 = value(n.in[3]);
        const Mat& hidden = n.aux;  // pre-activation
        const Mat act = faseg::relu(hidden);
        Mat d_act = faseg::matmul(g, faseg::transpose(w2));
        Mat d_w2 = faseg::matmul(faseg::transpose(act), g);
        Mat d_b2(1, g.cols());
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) d_b2(0, j) += g(i, j);
        Mat d_hidden(d_act.rows(), d_act.cols());
        for (int i = 0; i < d_act.rows(); ++i)
          for (int j = 0; j < d_act.cols(); ++j)
            d_hidden(i, j) = hidden(i, j) > 0.0 ? d_act(i, j) : 0.0;
        Mat d_b1(1, d_hidden.cols());
        for (int i = 0; i < d_hidden.rows(); ++i)
          for (int j = 0; j < d_hidden.cols(); ++j) d_b1(0, j) += d_hidden(i, j);
        accumulate(grads, n.in[0], faseg::matmul(d_hidden, faseg::transpose(w1)));
        accumulate(grads, n.in[1], faseg::matmul(faseg::transpose(x), d_hidden));
        accumulate(grads, n.in[2], d_b1);
        accumulate(grads, n.in[3], d_w2);
        accumulate(grads, n.in[4], d_b2);
        break;
      }
      case Op::kGatherRows: {
        const Mat& src = value(n.in[0]);
        Mat scatter(src.rows(), src.cols());
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) scatter(n.rows[static_cast<std::size_t>(i)], j) += g(i, j);
        accumulate(grads, n.in[0], scatter);
        break;
      }
      case Op::kSliceCols: {
        const Mat& src = value(n.in[0]);
        Mat pad(src.rows(), src.cols());
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) pad(i, n.c0 + j) = g(i, j);
        accumulate(grads, n.in[0], pad);
        break;
      }
      case Op::kHcat: {
        const Mat& a = value(n.in[0]);
        const Mat& b = value(n.in[1]);
        Mat ga(a.rows(), a.cols());
        Mat gb(b.rows(), b.cols());
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < a.cols(); ++j) ga(i, j) = g(i, j);
          for (int j = 0; j < b.cols(); ++j) gb(i, j) = g(i, a.cols() + j);
        }
        accumulate(grads, n.in[0], ga);
        accumulate(grads, n.in[1], gb);
        break;
      }
      default:
        throw UnsupportedOpError("backward: node " + std::to_string(id) +
                                 " has no backward rule");
    }
  }
  return grads;
}

}  // namespace faseg::ad
