#include "faseg/costmodel.hpp"

#include "faseg/error.hpp"

namespace faseg {

namespace {

void check_positive(long long v, const char* name) {
  if (v < 1) throw ParamError(std::string(name) + " must be positive");
}

long long ceil_log2(long long v) {
  long long bits = 0;
  long long pow = 1;
  while (pow < v) {
    pow *= 2;
    ++bits;
  }
  return bits;
}

}  // namespace

CostReport flops_dense_xattn(long long n, long long hw, long long d, int bytes_per_elem) {
  check_positive(n, "n");
  check_positive(hw, "hw");
  check_positive(d, "d");
  CostReport r;
  r.kind = "dense";
  r.n = n;
  r.hw = hw;
  r.d = d;
  r.bytes_per_elem = bytes_per_elem;
  r.flops.score_matmul = 2 * n * hw * d;
  r.flops.softmax = 3 * n * hw;
  r.flops.aggregate_matmul = 2 * n * hw * d;
  r.attn_matrix_bytes = attn_memory(n, hw, bytes_per_elem);
  return r;
}

CostReport flops_hrca(long long n, long long hw_h, long long k, long long d, long long hw_l,
                      int bytes_per_elem) {
  check_positive(n, "n");
  check_positive(hw_h, "hw_h");
  check_positive(d, "d");
  check_positive(hw_l, "hw_l");
  if (k < 1 || k > hw_h) throw ParamError("flops_hrca: k out of [1, hw_h]");
  CostReport r;
  r.kind = "hrca";
  r.n = n;
  r.hw = hw_h;
  r.d = d;
  r.k = k;
  r.hw_low = hw_l;
  r.bytes_per_elem = bytes_per_elem;
  r.flops.score_matmul = 2 * n * k * d;
  r.flops.softmax = 3 * n * k;
  r.flops.aggregate_matmul = 2 * n * k * d;
  r.flops.upsample = 8 * n * hw_h;
  r.flops.topk = hw_h * ceil_log2(hw_h);
  r.flops.gather = 0;
  r.attn_matrix_bytes = attn_memory(n, k, bytes_per_elem);
  r.gather_bytes = 2 * k * d * bytes_per_elem;  // K' and V' rows
  return r;
}

long long attn_memory(long long n, long long hw, int bytes_per_elem) {
  check_positive(n, "n");
  check_positive(hw, "hw");
  check_positive(bytes_per_elem, "bytes_per_elem");
  return n * hw * bytes_per_elem;
}

}  // namespace faseg
