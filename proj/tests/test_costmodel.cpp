#include <doctest.h>

#include "faseg/costmodel.hpp"
#include "faseg/error.hpp"
#include "faseg/rng.hpp"

using namespace faseg;

TEST_CASE("dense terms at unit size") {
  const CostReport r = flops_dense_xattn(1, 1, 1);
  CHECK(r.flops.score_matmul == 2);
  CHECK(r.flops.softmax == 3);
  CHECK(r.flops.aggregate_matmul == 2);
  CHECK(r.flops.total() == 7);
}

TEST_CASE("dense total at n=100, hw=128*128, d=256") {
  const CostReport r = flops_dense_xattn(100, 128 * 128, 256);
  // Independent arithmetic route: factor the shared n*hw term.
  const long long n_hw = 100LL * 16384LL;
  const long long want = n_hw * (2 * 256) + n_hw * 3 + n_hw * (2 * 256);
  CHECK(want == 1682636800LL);
  CHECK(r.flops.total() == want);
}

TEST_CASE("doubling hw doubles every dense term") {
  const CostReport a = flops_dense_xattn(7, 50, 9);
  const CostReport b = flops_dense_xattn(7, 100, 9);
  CHECK(b.flops.score_matmul == 2 * a.flops.score_matmul);
  CHECK(b.flops.softmax == 2 * a.flops.softmax);
  CHECK(b.flops.aggregate_matmul == 2 * a.flops.aggregate_matmul);
}

TEST_CASE("hrca with k = hw matches the dense core terms") {
  const CostReport d = flops_dense_xattn(5, 64, 16);
  const CostReport h = flops_hrca(5, 64, 64, 16, 4);
  CHECK(h.flops.score_matmul == d.flops.score_matmul);
  CHECK(h.flops.softmax == d.flops.softmax);
  CHECK(h.flops.aggregate_matmul == d.flops.aggregate_matmul);
}

TEST_CASE("core ratio is exactly hw/k when k divides hw") {
  const CostReport d = flops_dense_xattn(10, 1024, 32);
  const CostReport h = flops_hrca(10, 1024, 32, 32, 64);
  CHECK(d.flops.core() % h.flops.core() == 0);
  CHECK(d.flops.core() / h.flops.core() == 32);
}

TEST_CASE("reference configuration: 512x512 input, divisor-4 grid, |omega| = hw/32") {
  const long long hw_h = 128LL * 128LL;  // 512/4 per axis
  const long long k = hw_h / 32;
  CHECK(k == 512);
  const CostReport d = flops_dense_xattn(100, hw_h, 256);
  const CostReport h = flops_hrca(100, hw_h, k, 256, 16 * 16);
  CHECK(d.flops.core() / h.flops.core() == 32);
  CHECK(d.flops.core() % h.flops.core() == 0);
  CHECK(h.flops.total() > 0);
}

TEST_CASE("attention memory accounting") {
  CHECK(attn_memory(1, 1, 8) == 8);
  CHECK(attn_memory(100, 16384, 4) == 6553600);
  const long long dense = attn_memory(64, 4096, 8);
  const long long sparse = attn_memory(64, 4096 / 32, 8);
  CHECK(dense == 32 * sparse);
  CHECK_THROWS_AS(attn_memory(0, 4, 8), ParamError);
}

TEST_CASE("totals always equal the sum of terms") {
  Rng rng(61);
  for (int rep = 0; rep < 100; ++rep) {
    const long long n = 1 + rng.below(64);
    const long long hw = 1 + rng.below(5000);
    const long long d = 1 + rng.below(128);
    const long long k = 1 + rng.below(static_cast<int>(hw));
    const CostReport a = flops_dense_xattn(n, hw, d);
    CHECK(a.flops.total() ==
          a.flops.score_matmul + a.flops.softmax + a.flops.aggregate_matmul);
    const CostReport b = flops_hrca(n, hw, k, d, hw);
    CHECK(b.flops.total() == b.flops.score_matmul + b.flops.softmax + b.flops.aggregate_matmul +
                                 b.flops.upsample + b.flops.topk + b.flops.gather);
    CHECK(b.flops.gather == 0);
    CHECK(b.gather_bytes == 2 * k * d * 8);
  }
}

TEST_CASE("cost grows monotonically in every size argument") {
  Rng rng(62);
  for (int rep = 0; rep < 100; ++rep) {
    const long long n = 1 + rng.below(32);
    const long long hw = 2 + rng.below(2000);
    const long long d = 1 + rng.below(64);
    const long long base = flops_dense_xattn(n, hw, d).flops.total();
    CHECK(flops_dense_xattn(n + 1, hw, d).flops.total() >= base);
    CHECK(flops_dense_xattn(n, hw + 1, d).flops.total() >= base);
    CHECK(flops_dense_xattn(n, hw, d + 1).flops.total() >= base);

    const long long k = 1 + rng.below(static_cast<int>(hw) - 1);
    const long long hbase = flops_hrca(n, hw, k, d, hw).flops.total();
    CHECK(flops_hrca(n, hw, k + 1, d, hw).flops.total() >= hbase);
    CHECK(flops_hrca(n + 1, hw, k, d, hw).flops.total() >= hbase);
  }
}

TEST_CASE("hrca parameter validation") {
  CHECK_THROWS_AS(flops_hrca(1, 16, 17, 4, 4), ParamError);
  CHECK_THROWS_AS(flops_hrca(1, 16, 0, 4, 4), ParamError);
}
