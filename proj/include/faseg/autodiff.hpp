#pragma once

#include <vector>

#include "faseg/kernels.hpp"

namespace faseg::ad {

using NodeId = int;

/// Append-only tape of primitive applications. Each node stores its
/// forward value plus whatever the backward rule needs; backward()
/// replays the recorded primitives in exact reverse application order
/// and accumulates gradients for every reachable node.
///
/// A tape belongs to one logical execution thread; it is movable but
/// never shared concurrently.
class Tape {
 public:
  NodeId leaf(Mat value);
  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  /// Adds a constant offset; entries may be exactly -inf (mask sentinel).
  NodeId add_const(NodeId a, Mat c);
  NodeId scale(NodeId a, double s);
  NodeId softmax_rows(NodeId a);
  NodeId mlp2(NodeId x, NodeId w1, NodeId b1, NodeId w2, NodeId b2);
  /// Gathers rows at fixed indices; backward scatters gradients back to the
  /// source positions and leaves zeros elsewhere.
  NodeId gather_rows(NodeId a, std::vector<int> rows);
  NodeId slice_cols(NodeId a, int c0, int c1);
  NodeId hcat(NodeId a, NodeId b);
  /// Forward-only; reaching it during backward throws UnsupportedOpError.
  NodeId sigmoid(NodeId a);

  const Mat& value(NodeId id) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Reverse-mode accumulation from `out` seeded with `seed_grad` (same
  /// shape as value(out)). Returns one gradient per node id; nodes no
  /// gradient reached hold empty matrices.
  std::vector<Mat> backward(NodeId out, const Mat& seed_grad) const;

 private:
  enum class Op {
    kLeaf,
    kMatMul,
    kTranspose,
    kAdd,
    kAddConst,
    kScale,
    kSoftmaxRows,
    kMlp2,
    kGatherRows,
    kSliceCols,
    kHcat,
    kSigmoid,
  };

  struct Node {
    Op op;
    NodeId in[5] = {-1, -1, -1, -1, -1};
    Mat value;
    Mat aux;      // mlp2: pre-activation hidden state
    std::vector<int> rows;
    int c0 = 0, c1 = 0;
    double s = 0.0;
  };

  NodeId push(Node n);
  const Node& at(NodeId id) const;

  std::vector<Node> nodes_;
};

}  // namespace faseg::ad
