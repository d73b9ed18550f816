#pragma once

#include <map>
#include <utility>
#include <vector>

#include "faseg/attention.hpp"
#include "faseg/decoder.hpp"
#include "faseg/detail/attn_ops.hpp"
#include "faseg/detail/query_ops.hpp"
#include "faseg/posenc.hpp"

namespace faseg::detail {

namespace seedtag {
constexpr std::uint64_t kInitialContent = 1;
constexpr std::uint64_t kLearnableQp = 2;
constexpr std::uint64_t kPeg = 3;
constexpr std::uint64_t kDfpq = 10;        // + block position
constexpr std::uint64_t kCrossProj = 30;   // + block position
constexpr std::uint64_t kSelfProj = 50;    // + block position
constexpr std::uint64_t kFfn = 70;         // + block position
constexpr std::uint64_t kMaskEmbed = 90;
constexpr std::uint64_t kPyramidBase = 100;
constexpr std::uint64_t kPyramidNoise = 110;  // + divisor
constexpr std::uint64_t kPeLearnable = 200;   // + divisor
}  // namespace seedtag

template <class Ctx>
struct WeightsH {
  typename Ctx::H initial_content{};
  typename Ctx::H learnable_qp{};
  std::vector<DfpqH<Ctx>> dfpq;
  std::vector<Mlp2H<Ctx>> cross_proj, self_proj, ffn;
  Mlp2H<Ctx> mask_embed{};
};

template <class Ctx>
WeightsH<Ctx> lift_weights(Ctx& cx, const DecoderWeights& w) {
  WeightsH<Ctx> h;
  h.initial_content = cx.leaf(w.initial_content);
  h.learnable_qp = cx.leaf(w.learnable_qp);
  for (const auto& p : w.dfpq) h.dfpq.push_back({cx.leaf(p.bias), lift(cx, p.mlp)});
  for (const auto& p : w.cross_proj) h.cross_proj.push_back(lift(cx, p));
  for (const auto& p : w.self_proj) h.self_proj.push_back(lift(cx, p));
  for (const auto& p : w.ffn) h.ffn.push_back(lift(cx, p));
  h.mask_embed = lift(cx, w.mask_embed);
  return h;
}

/// Scores and the encodings they refer to, carried from block t-1 to t for
/// the dynamic positional-query chain.
template <class Ctx>
struct BlockChain {
  typename Ctx::H scores{};
  typename Ctx::H kp_rows{};
};

/// Constant inputs of one block step.
template <class Ctx>
struct BlockEnv {
  const DecoderConfig* cfg = nullptr;
  const WeightsH<Ctx>* w = nullptr;
  const FeatureMap* feat = nullptr;  // this block's scale
  typename Ctx::H kc{};
  typename Ctx::H kp{};
  typename Ctx::H k_full{};          // kc + kp, lifted once per scale
  const FeatureMap* mask_feat = nullptr;  // finest scale, mask-head target
  typename Ctx::H mask_e{};
  typename Ctx::H mask_kp{};         // finest-grid encodings (pooling basis)
  const Mat* grid_anchor = nullptr;  // cached anchors when that variant is active
  int position = 0;
  int round = 0;
  int block_index = 0;
  int divisor = 0;
  bool is_hrca = false;
  const PixelIndexSet* omega = nullptr;
};

template <class Ctx>
struct BlockStepOut {
  typename Ctx::H content{};
  typename Ctx::H q_pos{};
  BlockChain<Ctx> chain;
  BlockRecord record;
};

/// One decoder block over either evaluation context. Composition order:
/// positional queries, (masked) cross-attention or the omega-restricted
/// variant, residual projection, query self-attention, feed-forward.
template <class Ctx>
BlockStepOut<Ctx> block_step(Ctx& cx, typename Ctx::H content, const BlockEnv<Ctx>& env,
                             const BlockChain<Ctx>* prev) {
  const DecoderConfig& cfg = *env.cfg;

  BlockRecord rec;
  rec.index = env.block_index;
  rec.divisor = env.divisor;
  rec.round = env.round;
  rec.position = env.position;
  rec.grid_h = env.feat->h;
  rec.grid_w = env.feat->w;
  rec.content_in = cx.val(content);

  // Auxiliary mask prediction from the content queries at block entry.
  auto m_logits =
      cx.matmul(apply_mlp2(cx, content, env.w->mask_embed), cx.transpose(env.mask_e));
  auto m_probs = cx.sigmoid(m_logits);
  MaskPrediction mask(env.mask_feat->h, env.mask_feat->w, cx.val(m_probs), cfg.mask_threshold);
  rec.mask = mask;

  // Positional queries for this block.
  typename Ctx::H q_pos{};
  switch (cfg.pq_variant) {
    case PqVariant::kLearnable:
      q_pos = env.w->learnable_qp;
      rec.qp_source = "learnable";
      break;
    case PqVariant::kGridAnchor:
      q_pos = cx.leaf(*env.grid_anchor);
      rec.qp_source = "grid_anchor";
      break;
    case PqVariant::kDynamicAnchor: {
      int fb = 0;
      q_pos = cx.leaf(pq_dynamic_anchor(mask, cfg.channels, &fb));
      rec.pool_fallbacks = fb;
      rec.qp_source = "dynamic_anchor";
      break;
    }
    case PqVariant::kDynamicForeground: {
      int fb = 0;
      q_pos = cx.matmul(cx.leaf(mask_pooling_matrix(mask, &fb)), env.mask_kp);
      rec.pool_fallbacks = fb;
      rec.qp_source = "dynamic_foreground";
      break;
    }
    case PqVariant::kDfpq: {
      const DfpqH<Ctx>& pr = env.w->dfpq[static_cast<std::size_t>(env.position)];
      if (env.round < cfg.dfpq_start_round) {
        q_pos = env.w->learnable_qp;
        rec.qp_source = "learnable_fallback";
      } else if (prev != nullptr) {
        q_pos = dfpq_core(cx, prev->scores, prev->kp_rows, pr);
        rec.qp_source = "dfpq";
      } else {
        int fb = 0;
        auto pooled = cx.matmul(cx.leaf(mask_pooling_matrix(mask, &fb)), env.mask_kp);
        q_pos = apply_mlp2(cx, cx.add(pooled, pr.bias), pr.mlp);
        rec.pool_fallbacks = fb;
        rec.qp_source = "dfpq_bootstrap";
      }
      break;
    }
  }
  rec.q_pos = cx.val(q_pos);

  // Cross-attention over this block's sequence.
  auto q_full = cx.add(content, q_pos);
  typename Ctx::H k_full{}, v{}, kp_rows{};
  Mat offset;
  bool use_offset = false;
  if (env.is_hrca) {
    if (env.omega == nullptr) throw ConfigError("hrca block requires an omega set");
    rec.omega = *env.omega;
    k_full = cx.gather_rows(env.k_full, env.omega->indices);
    v = cx.gather_rows(env.kc, env.omega->indices);
    kp_rows = cx.gather_rows(env.kp, env.omega->indices);
  } else {
    k_full = env.k_full;
    v = env.kc;
    kp_rows = env.kp;
    if (cfg.attn_variant == AttnVariant::kMasked) {
      const MaskPrediction grid_mask = resize_mask_nearest(mask, env.feat->h, env.feat->w);
      int fb = 0;
      offset = masked_logit_offset(grid_mask, &fb);
      rec.mask_fallbacks = fb;
      use_offset = true;
    }
  }
  auto attn = attn_core(cx, q_full, k_full, v, cfg.heads, use_offset ? &offset : nullptr);
  content = cx.add(content,
                   apply_mlp2(cx, attn.out, env.w->cross_proj[static_cast<std::size_t>(env.position)]));

  // Query self-attention; positional part enters both sides, values are the
  // content queries themselves.
  auto qk = cx.add(content, q_pos);
  auto self = attn_core(cx, qk, qk, content, cfg.heads, nullptr);
  content = cx.add(content,
                   apply_mlp2(cx, self.out, env.w->self_proj[static_cast<std::size_t>(env.position)]));

  // Feed-forward with residual.
  content =
      cx.add(content, apply_mlp2(cx, content, env.w->ffn[static_cast<std::size_t>(env.position)]));

  rec.scores = cx.val(attn.scores);
  rec.kp_rows = cx.val(kp_rows);

  BlockStepOut<Ctx> out;
  out.content = content;
  out.q_pos = q_pos;
  out.chain = BlockChain<Ctx>{attn.scores, kp_rows};
  out.record = std::move(rec);
  return out;
}

/// Full decoder run over either context: `rounds` passes over the scale
/// schedule, each optionally followed by one omega-restricted block at the
/// finest scale.
template <class Ctx>
class DecoderRun {
 public:
  DecoderRun(Ctx cx, const DecoderConfig& cfg, const FeaturePyramid& pyr, const DecoderWeights& w)
      : cx_(cx), cfg_(cfg), pyr_(pyr) {
    cfg_.validate();
    wh_ = lift_weights(cx_, w);

    std::vector<int> divisors = cfg_.scale_divisors;
    if (cfg_.hrca_enabled) divisors.push_back(cfg_.hrca_divisor);
    mask_divisor_ = pyr_.finest_divisor();
    divisors.push_back(mask_divisor_);
    for (int dv : divisors) {
      if (levels_.count(dv)) continue;
      const FeatureMap& f = pyr_.at(dv);
      Level lvl;
      lvl.feat = &f;
      lvl.pe = make_pos_encoding(cfg_.pe_kind, f, w.peg,
                                 derive_seed(cfg_.seed, seedtag::kPeLearnable + static_cast<std::uint64_t>(dv)));
      lvl.kc = cx_.leaf(f.data);
      lvl.kp = cx_.leaf(lvl.pe.data);
      lvl.k_full = cx_.add(lvl.kc, lvl.kp);
      levels_.emplace(dv, std::move(lvl));
    }
    if (cfg_.pq_variant == PqVariant::kGridAnchor) {
      const FeatureMap& finest = pyr_.at(mask_divisor_);
      grid_anchor_ = pq_grid_anchor(cfg_.num_queries, cfg_.channels, finest.h, finest.w);
    }
    content_ = wh_.initial_content;
  }

  void run() {
    int block_index = 0;
    for (int r = 0; r < cfg_.rounds; ++r) {
      for (std::size_t p = 0; p < cfg_.scale_divisors.size(); ++p) {
        step(cfg_.scale_divisors[p], static_cast<int>(p), r, block_index++, nullptr);
      }
      if (cfg_.hrca_enabled) {
        const PixelIndexSet omega = pick_omega();
        step(cfg_.hrca_divisor, static_cast<int>(cfg_.scale_divisors.size()), r, block_index++,
             &omega);
      }
    }
    const Level& mask_lvl = levels_.at(mask_divisor_);
    final_logits_ =
        cx_.matmul(apply_mlp2(cx_, content_, wh_.mask_embed), cx_.transpose(mask_lvl.kc));
    trace_.final_mask_logits = cx_.val(final_logits_);
    trace_.finest_h = mask_lvl.feat->h;
    trace_.finest_w = mask_lvl.feat->w;
  }

  RunTrace take_trace() { return std::move(trace_); }
  const RunTrace& trace() const { return trace_; }
  typename Ctx::H final_logits() const { return final_logits_; }
  typename Ctx::H content() const { return content_; }
  const WeightsH<Ctx>& weight_handles() const { return wh_; }

 private:
  struct Level {
    const FeatureMap* feat = nullptr;
    PosEncoding pe;
    typename Ctx::H kc{};
    typename Ctx::H kp{};
    typename Ctx::H k_full{};
  };

  void step(int divisor, int position, int round, int block_index, const PixelIndexSet* omega) {
    const Level& lvl = levels_.at(divisor);
    const Level& mask_lvl = levels_.at(mask_divisor_);
    BlockEnv<Ctx> env;
    env.cfg = &cfg_;
    env.w = &wh_;
    env.feat = lvl.feat;
    env.kc = lvl.kc;
    env.kp = lvl.kp;
    env.k_full = lvl.k_full;
    env.mask_feat = mask_lvl.feat;
    env.mask_e = mask_lvl.kc;
    env.mask_kp = mask_lvl.kp;
    env.grid_anchor = grid_anchor_.empty() ? nullptr : &grid_anchor_;
    env.position = position;
    env.round = round;
    env.block_index = block_index;
    env.divisor = divisor;
    env.is_hrca = omega != nullptr;
    env.omega = omega;
    auto out = block_step(cx_, content_, env, have_chain_ ? &chain_ : nullptr);
    content_ = out.content;
    chain_ = out.chain;
    have_chain_ = true;
    trace_.blocks.push_back(std::move(out.record));
  }

  PixelIndexSet pick_omega() const {
    const BlockRecord* src = nullptr;
    for (auto it = trace_.blocks.rbegin(); it != trace_.blocks.rend(); ++it) {
      if (it->divisor == cfg_.omega_source_divisor && !it->omega.has_value()) {
        src = &*it;
        break;
      }
    }
    if (src == nullptr)
      throw ConfigError("omega_source_divisor " + std::to_string(cfg_.omega_source_divisor) +
                        " has produced no scores yet");
    const Level& lvl = levels_.at(cfg_.hrca_divisor);
    const int k = (lvl.feat->h * lvl.feat->w) / cfg_.omega_divisor;
    const AttnScores source(src->grid_h, src->grid_w, src->scores);
    return select_omega(source, lvl.feat->h, lvl.feat->w, k);
  }

  Ctx cx_;
  DecoderConfig cfg_;
  const FeaturePyramid& pyr_;
  WeightsH<Ctx> wh_;
  std::map<int, Level> levels_;
  int mask_divisor_ = 0;
  Mat grid_anchor_;
  typename Ctx::H content_{};
  typename Ctx::H final_logits_{};
  BlockChain<Ctx> chain_;
  bool have_chain_ = false;
  RunTrace trace_;
};

}  // namespace faseg::detail
