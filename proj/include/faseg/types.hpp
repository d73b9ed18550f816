#pragma once

#include <string>
#include <vector>

#include "faseg/matrix.hpp"

namespace faseg {

enum class PeKind { kSinusoidal, kLearnableAbsolute, kConditional };

/// One pyramid level of image features: an h x w grid of d-dim vectors,
/// pixels flattened row-major.
struct FeatureMap {
  int h = 0, w = 0, d = 0;
  Mat data;  // (h*w) x d

  FeatureMap() = default;
  FeatureMap(int h_, int w_, int d_, Mat data_) : h(h_), w(w_), d(d_), data(std::move(data_)) {
    if (data.rows() != h * w || data.cols() != d)
      throw ShapeError("FeatureMap: data " + data.shape_str() + " does not match " +
                       std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(d));
  }
};

/// Per-pixel positional vectors for one scale.
struct PosEncoding {
  int h = 0, w = 0, d = 0;
  PeKind kind = PeKind::kSinusoidal;
  Mat data;  // (h*w) x d

  PosEncoding() = default;
  PosEncoding(int h_, int w_, int d_, PeKind kind_, Mat data_)
      : h(h_), w(w_), d(d_), kind(kind_), data(std::move(data_)) {
    if (data.rows() != h * w || data.cols() != d)
      throw ShapeError("PosEncoding: data " + data.shape_str() + " does not match grid");
  }
};

/// N object queries, each split into a content part and a positional part.
struct QueryState {
  int n = 0, d = 0;
  Mat content;     // n x d
  Mat positional;  // n x d

  QueryState() = default;
  QueryState(Mat content_, Mat positional_)
      : n(content_.rows()), d(content_.cols()), content(std::move(content_)),
        positional(std::move(positional_)) {
    require_same_shape(content, positional, "QueryState");
  }
};

/// Row-stochastic cross-attention score matrix over an h x w grid.
struct AttnScores {
  int n = 0, h = 0, w = 0;
  Mat data;  // n x (h*w)

  AttnScores() = default;
  AttnScores(int h_, int w_, Mat data_) : n(data_.rows()), h(h_), w(w_), data(std::move(data_)) {
    if (data.cols() != h * w)
      throw ShapeError("AttnScores: " + data.shape_str() + " does not cover " +
                       std::to_string(h) + "x" + std::to_string(w));
    validate_stochastic(1e-6);
  }

  void validate_stochastic(double tol) const {
    for (int i = 0; i < data.rows(); ++i) {
      double sum = 0.0;
      for (int j = 0; j < data.cols(); ++j) {
        if (data(i, j) < 0.0) throw ParamError("AttnScores: negative entry in row " + std::to_string(i));
        sum += data(i, j);
      }
      if (std::abs(sum - 1.0) > tol)
        throw ParamError("AttnScores: row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
};

/// Strictly increasing set of pixel indices into an h x w row-major grid.
struct PixelIndexSet {
  int grid_h = 0, grid_w = 0;
  std::vector<int> indices;

  PixelIndexSet() = default;
  PixelIndexSet(int gh, int gw, std::vector<int> idx)
      : grid_h(gh), grid_w(gw), indices(std::move(idx)) {
    if (indices.empty()) throw ParamError("PixelIndexSet: empty set");
    int prev = -1;
    for (int v : indices) {
      if (v <= prev) throw IndexError("PixelIndexSet: indices not strictly increasing");
      if (v < 0 || v >= grid_h * grid_w)
        throw IndexError("PixelIndexSet: index " + std::to_string(v) + " outside " +
                         std::to_string(grid_h) + "x" + std::to_string(grid_w));
      prev = v;
    }
  }

  int size() const { return static_cast<int>(indices.size()); }
};

/// Per-query foreground probabilities over an h x w grid.
struct MaskPrediction {
  int h = 0, w = 0;
  Mat probs;  // n x (h*w), entries in [0,1]
  double threshold = 0.5;

  MaskPrediction() = default;
  MaskPrediction(int h_, int w_, Mat probs_, double threshold_ = 0.5)
      : h(h_), w(w_), probs(std::move(probs_)), threshold(threshold_) {
    if (probs.cols() != h * w)
      throw ShapeError("MaskPrediction: " + probs.shape_str() + " does not cover grid");
    if (!(threshold > 0.0 && threshold < 1.0))
      throw ParamError("MaskPrediction: threshold must lie in (0,1)");
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double v = probs.data()[i];
      if (!(v >= 0.0 && v <= 1.0))
        throw ParamError("MaskPrediction: probability outside [0,1]");
    }
  }

  /// Foreground test, pinned as prob >= threshold.
  bool foreground(int query, int pixel) const { return probs(query, pixel) >= threshold; }
};

}  // namespace faseg
