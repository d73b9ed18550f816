#pragma once

#include <cstdint>

#include "faseg/kernels.hpp"
#include "faseg/types.hpp"

namespace faseg {

/// Parameters of the dynamic focus-aware positional query generator:
/// a learnable bias (initialized like the plain learnable positional
/// queries) and a small two-layer MLP.
struct DfpqParams {
  Mat bias;  // n x d
  Mlp2Params mlp;

  static DfpqParams identity(int n, int d);
  static DfpqParams seeded(int n, int d, int d_hidden, Rng& rng);
};

/// Next-block positional queries: mlp(a_prev * kp_prev + bias).
/// a_prev rows must sum to 1 within 1e-6.
Mat dfpq_next(const AttnScores& a_prev, const PosEncoding& kp_prev, const DfpqParams& params);

/// Raw overload over the attended encoding rows; used when the preceding
/// block attended a gathered subset rather than a full grid.
Mat dfpq_next(const Mat& a_prev, const Mat& kp_rows, const DfpqParams& params);

/// Row-stochastic pooling matrix from a binarized mask: row n carries
/// 1/|mask_n| over foreground pixels, or 1/(h*w) everywhere when the mask
/// row is empty (fallback, counted).
Mat mask_pooling_matrix(const MaskPrediction& m, int* fallback_count);

/// First-block positional queries: average-pool the positional encodings
/// over each query's predicted foreground mask, then mlp(pooled + bias).
Mat dfpq_bootstrap(const MaskPrediction& m0, const PosEncoding& kp, const DfpqParams& params,
                   int* fallback_count = nullptr);

/// Seeded learnable positional queries (uniform [-0.02, 0.02]).
Mat pq_learnable(int n, int d, std::uint64_t seed);

/// Anchors at the cell centers of a ceil(sqrt(n)) x ceil(n/rows) grid over
/// the unit square, row-major, sinusoidally encoded.
Mat pq_grid_anchor(int n, int d, int h, int w);

/// Sinusoidal encoding of each query's thresholded-mask center of mass over
/// pixel centers; empty masks map to the grid center (counted).
Mat pq_dynamic_anchor(const MaskPrediction& m, int d, int* fallback_count = nullptr);

/// Raw masked average of the positional encodings (no bias, no MLP).
Mat pq_dynamic_foreground(const MaskPrediction& m, const PosEncoding& kp,
                          int* fallback_count = nullptr);

}  // namespace faseg
