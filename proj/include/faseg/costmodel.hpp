#pragma once

#include <cstdint>
#include <string>

namespace faseg {

/// Analytic FLOP terms for one cross-attention evaluation, under pinned
/// conventions: 2 FLOPs per multiply-add in matmuls, 3 FLOPs per element
/// for softmax (exp, running sum, divide), 8 FLOPs per upsampled element
/// (4 taps, multiply + add each), 1 FLOP per top-k comparison with
/// ceil(log2 L) comparisons per element, and 0 FLOPs for gathers (pure
/// data movement, reported as bytes instead).
struct CostTerms {
  long long score_matmul = 0;
  long long softmax = 0;
  long long aggregate_matmul = 0;
  long long upsample = 0;
  long long topk = 0;
  long long gather = 0;

  long long total() const {
    return score_matmul + softmax + aggregate_matmul + upsample + topk + gather;
  }
  /// score + softmax + aggregate: the terms the sparse variant shrinks.
  long long core() const { return score_matmul + softmax + aggregate_matmul; }
};

struct CostReport {
  std::string kind;  // "dense" or "hrca"
  long long n = 0, hw = 0, d = 0;
  long long k = 0, hw_low = 0;  // hrca only
  int bytes_per_elem = 8;
  CostTerms flops;
  long long attn_matrix_bytes = 0;  // n * seq * bytes_per_elem
  long long gather_bytes = 0;       // hrca: K' and V' rows moved
};

/// Dense cross-attention at sequence length hw.
CostReport flops_dense_xattn(long long n, long long hw, long long d, int bytes_per_elem = 8);

/// Omega-restricted cross-attention: dense terms at sequence length k, plus
/// the selection pipeline (upsample to hw_h, top-k over hw_h) and gather
/// traffic from hw_l-scale scores.
CostReport flops_hrca(long long n, long long hw_h, long long k, long long d, long long hw_l,
                      int bytes_per_elem = 8);

/// Attention-matrix footprint in bytes.
long long attn_memory(long long n, long long hw, int bytes_per_elem);

}  // namespace faseg
