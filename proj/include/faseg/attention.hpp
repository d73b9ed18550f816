#pragma once

#include <cstdint>
#include <vector>

#include "faseg/types.hpp"

namespace faseg {

struct AttnResult {
  Mat out;            // n x d
  AttnScores scores;  // head-averaged
  int mask_fallbacks = 0;
};

/// Dense cross-attention: per head, softmax((Qc+Qp)(Kc+Kp)^T / sqrt(d/heads))
/// applied to V = Kc. No extra projections; the returned scores are the
/// head average.
AttnResult cross_attention(const QueryState& q, const FeatureMap& kc, const PosEncoding& kp,
                           int heads);

/// Cross-attention with logits forced to -inf outside each query's predicted
/// foreground. The mask must already live on the attention grid. Queries
/// whose mask row is entirely background fall back to the unmasked row
/// (counted in mask_fallbacks).
AttnResult masked_attention(const QueryState& q, const FeatureMap& kc, const PosEncoding& kp,
                            const MaskPrediction& m, int heads);

/// 0 / -inf additive logit offset from a grid-aligned mask; all-background
/// rows become all-zero rows (dense fallback) and are counted.
Mat masked_logit_offset(const MaskPrediction& m, int* fallback_count);

/// Bilinearly upsample the low-resolution scores to h_h x w_h, sum them over
/// the query axis, and take the top-k pixels (ties toward the lowest index).
PixelIndexSet select_omega(const AttnScores& a_l, int h_h, int w_h, int k);

struct HrcaResult {
  Mat out;            // n x d
  Mat sparse_scores;  // n x |omega|, rows sum to 1 over omega
};

/// High-resolution cross-attention restricted to the pixel set omega:
/// gathers K = Kc+Kp and V = Kc rows at omega and runs the dense logic on
/// the shortened sequence.
HrcaResult hrca(const QueryState& q, const FeatureMap& kc_h, const PosEncoding& kp_h,
                const PixelIndexSet& omega, int heads);

/// k distinct indices sampled without replacement from a seeded generator,
/// returned sorted (baseline for omega selection).
PixelIndexSet random_omega(int h, int w, int k, std::uint64_t seed);

/// Nearest-neighbor resize of per-query mask probabilities to a new grid
/// (binary masks stay binary). Source pixel: floor((d+0.5)*len_src/len_dst).
MaskPrediction resize_mask_nearest(const MaskPrediction& m, int h_dst, int w_dst);

// Plain forward kernels, templated so the benchmark can run f32. The f64
// instantiation matches cross_attention/hrca arithmetic.
template <typename T>
struct AttnForward {
  Matrix<T> out;
  Matrix<T> scores;
};

template <typename T>
AttnForward<T> attn_forward(const Matrix<T>& q_full, const Matrix<T>& k_full, const Matrix<T>& v,
                            int heads);

template <typename T>
std::vector<int> select_omega_flat(const Matrix<T>& a_l, int h_l, int w_l, int h_h, int w_h,
                                   int k);

}  // namespace faseg
