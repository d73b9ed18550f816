#include "faseg/gradcheck.hpp"

#include <functional>
#include <limits>

#include "faseg/detail/decoder_ops.hpp"

namespace faseg {

namespace {

Mat random_mat(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// Builds a graph from the given inputs; returns the output node and the leaf
// id of every input (in order).
using Builder =
    std::function<ad::NodeId(ad::Tape&, const std::vector<Mat>&, std::vector<ad::NodeId>&)>;

struct Harness {
  const GradCheckOptions& opts;
  std::vector<GradCheckCase> cases;
  bool fault_pending;

  explicit Harness(const GradCheckOptions& o) : opts(o), fault_pending(o.inject_fault) {}

  void check(const std::string& name, const std::vector<Mat>& inputs,
             const std::vector<std::string>& input_names, const Builder& build) {
    ad::Tape tape;
    std::vector<ad::NodeId> leaves;
    const ad::NodeId out = build(tape, inputs, leaves);
    const Mat& out_val = tape.value(out);
    const Mat seed(out_val.rows(), out_val.cols(), 1.0);
    const std::vector<Mat> grads = tape.backward(out, seed);

    for (std::size_t i = 0; i < inputs.size(); ++i) {
      Mat analytic = grads[static_cast<std::size_t>(leaves[i])];
      if (analytic.empty()) analytic = Mat(inputs[i].rows(), inputs[i].cols());
      if (fault_pending && !analytic.empty()) {
        analytic.data()[0] += 0.01;
        fault_pending = false;
      }
      const Mat numeric = finite_diff_grad(
          [&](const Mat& x) {
            std::vector<Mat> probe = inputs;
            probe[i] = x;
            ad::Tape t2;
            std::vector<ad::NodeId> ids;
            return sum_entries(t2.value(build(t2, probe, ids)));
          },
          inputs[i], opts.step);
      const double rel = max_rel_diff(analytic, numeric);
      cases.push_back({name + "/d_" + input_names[i], rel, rel <= opts.tolerance});
    }
  }
};

}  // namespace

std::vector<GradCheckCase> run_gradient_suite(const GradCheckOptions& opts) {
  Harness h(opts);
  Rng rng(20240917);

  // --- primitives ---------------------------------------------------------
  {
    std::vector<Mat> in = {random_mat(3, 4, rng), random_mat(4, 2, rng)};
    h.check("matmul", in, {"a", "b"}, [](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0]), t.leaf(x[1])};
      return t.matmul(ids[0], ids[1]);
    });
  }
  {
    std::vector<Mat> in = {random_mat(3, 4, rng)};
    const Mat mix = random_mat(3, 2, rng);
    h.check("transpose", in, {"a"}, [mix](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0])};
      return t.matmul(t.transpose(ids[0]), t.leaf(mix));
    });
  }
  {
    std::vector<Mat> in = {random_mat(3, 3, rng), random_mat(3, 3, rng)};
    h.check("add", in, {"a", "b"}, [](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0]), t.leaf(x[1])};
      return t.add(ids[0], ids[1]);
    });
  }
  {
    std::vector<Mat> in = {random_mat(2, 5, rng)};
    const Mat offset = random_mat(2, 5, rng);
    h.check("add_const", in, {"a"}, [offset](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0])};
      return t.add_const(ids[0], offset);
    });
  }
  {
    std::vector<Mat> in = {random_mat(4, 3, rng)};
    h.check("scale", in, {"a"}, [](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0])};
      return t.scale(ids[0], 0.37);
    });
  }
  {
    std::vector<Mat> in = {random_mat(3, 5, rng)};
    const Mat mix = random_mat(5, 2, rng);
    h.check("softmax_rows", in, {"x"}, [mix](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0])};
      return t.matmul(t.softmax_rows(ids[0]), t.leaf(mix));
    });
  }
  {
    // Softmax with -inf mask sentinels: gradients stay zero at masked slots.
    std::vector<Mat> in = {random_mat(3, 5, rng)};
    Mat offset(3, 5);
    offset(0, 1) = offset(0, 4) = offset(2, 0) = -std::numeric_limits<double>::infinity();
    const Mat mix = random_mat(5, 2, rng);
    h.check("softmax_rows_masked", in, {"x"},
            [offset, mix](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              ids = {t.leaf(x[0])};
              return t.matmul(t.softmax_rows(t.add_const(ids[0], offset)), t.leaf(mix));
            });
  }
  {
    std::vector<Mat> in = {random_mat(3, 4, rng), random_mat(4, 5, rng), random_mat(1, 5, rng),
                           random_mat(5, 4, rng), random_mat(1, 4, rng)};
    h.check("mlp2", in, {"x", "w1", "b1", "w2", "b2"},
            [](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              ids = {t.leaf(x[0]), t.leaf(x[1]), t.leaf(x[2]), t.leaf(x[3]), t.leaf(x[4])};
              return t.mlp2(ids[0], ids[1], ids[2], ids[3], ids[4]);
            });
  }
  {
    // Duplicate row index exercises scatter accumulation.
    std::vector<Mat> in = {random_mat(5, 3, rng)};
    const std::vector<int> rows = {0, 2, 2, 4};
    const Mat mix = random_mat(3, 2, rng);
    h.check("gather_rows", in, {"a"},
            [rows, mix](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              ids = {t.leaf(x[0])};
              return t.matmul(t.gather_rows(ids[0], rows), t.leaf(mix));
            });
  }
  {
    std::vector<Mat> in = {random_mat(3, 6, rng)};
    const Mat mix = random_mat(3, 2, rng);
    h.check("slice_cols", in, {"a"}, [mix](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0])};
      return t.matmul(t.slice_cols(ids[0], 1, 4), t.leaf(mix));
    });
  }
  {
    std::vector<Mat> in = {random_mat(3, 2, rng), random_mat(3, 3, rng)};
    const Mat mix = random_mat(5, 2, rng);
    h.check("hcat", in, {"a", "b"}, [mix](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
      ids = {t.leaf(x[0]), t.leaf(x[1])};
      return t.matmul(t.hcat(ids[0], ids[1]), t.leaf(mix));
    });
  }

  // --- dynamic positional-query path --------------------------------------
  {
    const int n = 3, hw = 8, d = 4;
    std::vector<Mat> in = {random_mat(n, hw, rng, 0.0, 1.0), random_mat(hw, d, rng),
                           random_mat(n, d, rng),  random_mat(d, d, rng),
                           random_mat(1, d, rng),  random_mat(d, d, rng),
                           random_mat(1, d, rng)};
    h.check("dfpq_next", in, {"a_prev", "kp", "bias", "w1", "b1", "w2", "b2"},
            [](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              TapeCtx cx{&t};
              for (const Mat& m : x) ids.push_back(t.leaf(m));
              detail::DfpqH<TapeCtx> p{ids[2], {ids[3], ids[4], ids[5], ids[6]}};
              return detail::dfpq_core(cx, ids[0], ids[1], p);
            });
  }

  // --- attention variants --------------------------------------------------
  const int n = 3, hw = 12, d = 8, heads = 2;
  const Mat kc = random_mat(hw, d, rng);
  const Mat kp = random_mat(hw, d, rng);
  {
    std::vector<Mat> in = {random_mat(n, d, rng), random_mat(n, d, rng)};
    h.check("cross_attention", in, {"q_content", "q_positional"},
            [&](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              TapeCtx cx{&t};
              ids = {t.leaf(x[0]), t.leaf(x[1])};
              auto q_full = cx.add(ids[0], ids[1]);
              auto k_full = cx.add(cx.leaf(kc), cx.leaf(kp));
              auto r = detail::attn_core(cx, q_full, k_full, cx.leaf(kc), heads, nullptr);
              return r.out;
            });
  }
  {
    // Masked attention: row 1 is restricted, row 2 falls back to dense.
    Mat offset(n, hw);
    for (int p = 0; p < hw; ++p)
      if (p % 3 != 0) offset(1, p) = -std::numeric_limits<double>::infinity();
    std::vector<Mat> in = {random_mat(n, d, rng), random_mat(n, d, rng)};
    h.check("masked_attention", in, {"q_content", "q_positional"},
            [&, offset](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              TapeCtx cx{&t};
              ids = {t.leaf(x[0]), t.leaf(x[1])};
              auto q_full = cx.add(ids[0], ids[1]);
              auto k_full = cx.add(cx.leaf(kc), cx.leaf(kp));
              auto r = detail::attn_core(cx, q_full, k_full, cx.leaf(kc), heads, &offset);
              return r.out;
            });
  }
  {
    const std::vector<int> omega = {1, 4, 5, 9};
    std::vector<Mat> in = {random_mat(n, d, rng), random_mat(n, d, rng)};
    h.check("hrca", in, {"q_content", "q_positional"},
            [&, omega](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              TapeCtx cx{&t};
              ids = {t.leaf(x[0]), t.leaf(x[1])};
              auto q_full = cx.add(ids[0], ids[1]);
              auto k_full = cx.gather_rows(cx.add(cx.leaf(kc), cx.leaf(kp)), omega);
              auto v = cx.gather_rows(cx.leaf(kc), omega);
              auto r = detail::attn_core(cx, q_full, k_full, v, heads, nullptr);
              return r.out;
            });
  }
  {
    // Composed: dynamic positional queries feeding cross-attention.
    const int cn = 3, chw = 9, cd = 8;
    const Mat ckc = random_mat(chw, cd, rng);
    const Mat ckp = random_mat(chw, cd, rng);
    const Mat a_prev = softmax_rows(random_mat(cn, chw, rng));
    std::vector<Mat> in = {random_mat(cn, cd, rng), random_mat(cn, cd, rng),
                           random_mat(cd, cd, rng), random_mat(1, cd, rng),
                           random_mat(cd, cd, rng), random_mat(1, cd, rng)};
    h.check("dfpq_cross_attention", in, {"content", "bias", "w1", "b1", "w2", "b2"},
            [&, a_prev](ad::Tape& t, const std::vector<Mat>& x, auto& ids) {
              TapeCtx cx{&t};
              for (const Mat& m : x) ids.push_back(t.leaf(m));
              detail::DfpqH<TapeCtx> p{ids[1], {ids[2], ids[3], ids[4], ids[5]}};
              auto q_pos = detail::dfpq_core(cx, cx.leaf(a_prev), cx.leaf(ckp), p);
              auto q_full = cx.add(ids[0], q_pos);
              auto k_full = cx.add(cx.leaf(ckc), cx.leaf(ckp));
              auto r = detail::attn_core(cx, q_full, k_full, cx.leaf(ckc), 2, nullptr);
              return r.out;
            });
  }

  // --- end to end: final mask logits w.r.t. every positional-query bias ----
  {
    DecoderConfig cfg;
    cfg.base_h = cfg.base_w = 32;
    cfg.num_queries = 2;
    cfg.channels = 4;
    cfg.heads = 1;
    cfg.rounds = 1;
    cfg.seed = 11;
    const FeaturePyramid pyr =
        synth_pyramid(cfg.base_h, cfg.base_w, cfg.channels, cfg.seed, cfg.noise_sigma);
    const DecoderWeights weights = DecoderWeights::seeded(cfg);

    ad::Tape tape;
    detail::DecoderRun<TapeCtx> run(TapeCtx{&tape}, cfg, pyr, weights);
    run.run();
    const Mat& logits = tape.value(run.final_logits());
    const Mat seed_grad(logits.rows(), logits.cols(), 1.0);
    const std::vector<Mat> grads = tape.backward(run.final_logits(), seed_grad);

    for (int p = 0; p < cfg.blocks_per_round(); ++p) {
      Mat analytic = grads[static_cast<std::size_t>(run.weight_handles().dfpq[p].bias)];
      if (analytic.empty()) analytic = Mat(cfg.num_queries, cfg.channels);
      const Mat numeric = finite_diff_grad(
          [&](const Mat& b) {
            DecoderWeights probe = weights;
            probe.dfpq[static_cast<std::size_t>(p)].bias = b;
            const RunTrace trace = run_faseg(cfg, pyr, probe);
            return sum_entries(trace.final_mask_logits);
          },
          weights.dfpq[static_cast<std::size_t>(p)].bias, opts.step);
      const double rel = max_rel_diff(analytic, numeric);
      h.cases.push_back({"end_to_end/d_dfpq_bias_" + std::to_string(p), rel, rel <= opts.tolerance});
    }
  }

  return h.cases;
}

}  // namespace faseg
