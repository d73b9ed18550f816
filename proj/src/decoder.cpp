#include "faseg/decoder.hpp"

#include <algorithm>
#include <cstring>

#include "faseg/detail/decoder_ops.hpp"

namespace faseg {

std::string to_string(PqVariant v) {
  switch (v) {
    case PqVariant::kLearnable: return "learnable";
    case PqVariant::kGridAnchor: return "grid_anchor";
    case PqVariant::kDynamicAnchor: return "dynamic_anchor";
    case PqVariant::kDynamicForeground: return "dynamic_foreground";
    case PqVariant::kDfpq: return "dfpq";
  }
  return "?";
}

std::string to_string(AttnVariant v) {
  return v == AttnVariant::kDense ? "dense" : "masked";
}

std::string to_string(PeKind k) {
  switch (k) {
    case PeKind::kSinusoidal: return "sinusoidal";
    case PeKind::kLearnableAbsolute: return "learnable_absolute";
    case PeKind::kConditional: return "conditional";
  }
  return "?";
}

PqVariant parse_pq_variant(const std::string& s) {
  for (PqVariant v : {PqVariant::kLearnable, PqVariant::kGridAnchor, PqVariant::kDynamicAnchor,
                      PqVariant::kDynamicForeground, PqVariant::kDfpq})
    if (to_string(v) == s) return v;
  throw ConfigError("pq_variant: unknown value '" + s + "'");
}

AttnVariant parse_attn_variant(const std::string& s) {
  if (s == "dense") return AttnVariant::kDense;
  if (s == "masked") return AttnVariant::kMasked;
  throw ConfigError("attn_variant: unknown value '" + s + "'");
}

PeKind parse_pe_kind(const std::string& s) {
  for (PeKind k : {PeKind::kSinusoidal, PeKind::kLearnableAbsolute, PeKind::kConditional})
    if (to_string(k) == s) return k;
  throw ConfigError("pe_kind: unknown value '" + s + "'");
}

namespace {
bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

void DecoderConfig::validate() const {
  if (num_queries < 1) throw ConfigError("num_queries must be >= 1");
  if (channels < 1) throw ConfigError("channels must be >= 1");
  if (heads < 1 || channels % heads != 0)
    throw ConfigError("heads must divide channels (channels " + std::to_string(channels) +
                      ", heads " + std::to_string(heads) + ")");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (scale_divisors.empty()) throw ConfigError("scale_divisors must not be empty");
  int max_div = 0;
  for (int dv : scale_divisors) {
    if (!power_of_two(dv)) throw ConfigError("scale_divisors entries must be positive powers of two");
    max_div = std::max(max_div, dv);
  }
  if (hrca_enabled) {
    if (!power_of_two(hrca_divisor)) throw ConfigError("hrca_divisor must be a positive power of two");
    max_div = std::max(max_div, hrca_divisor);
    if (omega_divisor < 1) throw ConfigError("omega_divisor must be >= 1");
    if (std::find(scale_divisors.begin(), scale_divisors.end(), omega_source_divisor) ==
        scale_divisors.end())
      throw ConfigError("omega_source_divisor must be one of scale_divisors");
  }
  if (base_h < 1 || base_w < 1 || base_h % max_div != 0 || base_w % max_div != 0)
    throw ConfigError("base_height/base_width must be positive and divisible by " +
                      std::to_string(max_div));
  if (hrca_enabled) {
    const int hw = (base_h / hrca_divisor) * (base_w / hrca_divisor);
    if (hw / omega_divisor < 1)
      throw ConfigError("omega_divisor too large: floor(" + std::to_string(hw) + "/" +
                        std::to_string(omega_divisor) + ") < 1");
  }
  if (!(mask_threshold > 0.0 && mask_threshold < 1.0))
    throw ConfigError("mask_threshold must lie in (0,1)");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (dfpq_start_round < 0) throw ConfigError("dfpq_start_round must be >= 0");
  if (mlp_hidden < 0) throw ConfigError("mlp_hidden must be >= 0");
  const bool needs_sinusoidal = pe_kind == PeKind::kSinusoidal ||
                                pq_variant == PqVariant::kGridAnchor ||
                                pq_variant == PqVariant::kDynamicAnchor;
  if (needs_sinusoidal && channels % 4 != 0)
    throw ConfigError("channels must be divisible by 4 for sinusoidal encodings");
}

const FeatureMap& FeaturePyramid::at(int divisor) const {
  auto it = levels.find(divisor);
  if (it == levels.end())
    throw ConfigError("pyramid has no level at divisor " + std::to_string(divisor));
  return it->second;
}

int FeaturePyramid::finest_divisor() const {
  if (levels.empty()) throw ConfigError("pyramid is empty");
  return levels.begin()->first;
}

FeaturePyramid synth_pyramid(int base_h, int base_w, int d, std::uint64_t seed,
                             double noise_sigma) {
  const std::vector<int> divisors = {32, 16, 8, 4};
  if (base_h < 32 || base_w < 32 || base_h % 32 != 0 || base_w % 32 != 0)
    throw ParamError("synth_pyramid: base size must be divisible by 32");

  const int h32 = base_h / 32, w32 = base_w / 32;
  Rng base_rng(derive_seed(seed, detail::seedtag::kPyramidBase));
  Mat coarse(h32 * w32, d);
  for (std::size_t i = 0; i < coarse.size(); ++i) coarse.data()[i] = base_rng.normal();

  // Channels become rows so the flattened-map resize kernel applies per channel.
  const Mat coarse_t = transpose(coarse);

  FeaturePyramid pyr;
  pyr.divisors = divisors;
  for (int dv : divisors) {
    const int h = base_h / dv, w = base_w / dv;
    Mat data;
    if (dv == 32) {
      data = coarse;
    } else {
      data = transpose(bilinear_upsample(coarse_t, h32, w32, h, w));
      if (noise_sigma > 0.0) {
        Rng noise(derive_seed(seed, detail::seedtag::kPyramidNoise + static_cast<std::uint64_t>(dv)));
        for (std::size_t i = 0; i < data.size(); ++i) data.data()[i] += noise.normal(0.0, noise_sigma);
      }
    }
    pyr.levels.emplace(dv, FeatureMap(h, w, d, std::move(data)));
  }
  return pyr;
}

DecoderWeights DecoderWeights::seeded(const DecoderConfig& cfg) {
  using namespace detail::seedtag;
  const int n = cfg.num_queries, d = cfg.channels, dh = cfg.hidden();
  DecoderWeights w;
  w.initial_content = pq_learnable(n, d, derive_seed(cfg.seed, kInitialContent));
  w.learnable_qp = pq_learnable(n, d, derive_seed(cfg.seed, kLearnableQp));
  w.peg = peg_kernels(d, derive_seed(cfg.seed, kPeg));
  const int positions = cfg.blocks_per_round();
  for (int p = 0; p < positions; ++p) {
    const auto tag = static_cast<std::uint64_t>(p);
    Rng rd(derive_seed(cfg.seed, kDfpq + tag));
    w.dfpq.push_back(DfpqParams::seeded(n, d, dh, rd));
    Rng rc(derive_seed(cfg.seed, kCrossProj + tag));
    w.cross_proj.push_back(Mlp2Params::seeded(d, dh, d, rc));
    Rng rs(derive_seed(cfg.seed, kSelfProj + tag));
    w.self_proj.push_back(Mlp2Params::seeded(d, dh, d, rs));
    Rng rf(derive_seed(cfg.seed, kFfn + tag));
    w.ffn.push_back(Mlp2Params::seeded(d, dh, d, rf));
  }
  Rng rm(derive_seed(cfg.seed, kMaskEmbed));
  w.mask_embed = Mlp2Params::seeded(d, dh, d, rm);
  return w;
}

Mat mask_logits(const Mat& qc, const FeatureMap& e, const Mlp2Params& embed) {
  if (qc.cols() != embed.d_in() || embed.d_out() != e.d)
    throw ShapeError("mask_logits: channel mismatch, queries " + qc.shape_str() + ", embed " +
                     std::to_string(embed.d_in()) + "->" + std::to_string(embed.d_out()) +
                     ", features d=" + std::to_string(e.d));
  return matmul(mlp2(qc, embed), transpose(e.data));
}

MaskPrediction mask_head(const Mat& qc, const FeatureMap& e, const Mlp2Params& embed,
                         double threshold) {
  return MaskPrediction(e.h, e.w, sigmoid(mask_logits(qc, e, embed)), threshold);
}

PosEncoding make_pos_encoding(PeKind kind, const FeatureMap& f, const Mat& peg,
                              std::uint64_t seed) {
  switch (kind) {
    case PeKind::kSinusoidal: return sinusoidal_pe(f.h, f.w, f.d);
    case PeKind::kLearnableAbsolute: return learnable_pe(f.h, f.w, f.d, seed);
    case PeKind::kConditional: return conditional_pe(f, peg);
  }
  throw ParamError("make_pos_encoding: unknown kind");
}

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
}

void hash_mat(std::uint64_t& h, const Mat& m) {
  const int dims[2] = {m.rows(), m.cols()};
  hash_bytes(h, dims, sizeof dims);
  hash_bytes(h, m.data(), m.size() * sizeof(double));
}

}  // namespace

std::uint64_t trace_hash(const RunTrace& t) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const BlockRecord& b : t.blocks) {
    const int meta[6] = {b.index, b.divisor, b.round, b.position, b.mask_fallbacks, b.pool_fallbacks};
    hash_bytes(h, meta, sizeof meta);
    hash_bytes(h, b.qp_source.data(), b.qp_source.size());
    hash_mat(h, b.scores);
    hash_mat(h, b.kp_rows);
    hash_mat(h, b.q_pos);
    hash_mat(h, b.content_in);
    hash_mat(h, b.mask.probs);
    if (b.omega.has_value())
      hash_bytes(h, b.omega->indices.data(), b.omega->indices.size() * sizeof(int));
  }
  hash_mat(h, t.final_mask_logits);
  return h;
}

BlockStepResult decoder_block(const QueryState& state, const FeatureMap& feat,
                              const PosEncoding& pe, const DecoderConfig& cfg,
                              const DecoderWeights& w, int position, int round, int block_index,
                              const FeatureMap& mask_feat, const PosEncoding& mask_pe,
                              const BlockRecord* prev, const PixelIndexSet* omega) {
  if (position < 0 || position >= cfg.blocks_per_round())
    throw ConfigError("decoder_block: position out of schedule");
  PlainCtx cx;
  auto wh = detail::lift_weights(cx, w);
  detail::BlockEnv<PlainCtx> env;
  env.cfg = &cfg;
  env.w = &wh;
  env.feat = &feat;
  env.kc = cx.leaf(feat.data);
  env.kp = cx.leaf(pe.data);
  env.k_full = cx.add(env.kc, env.kp);
  env.mask_feat = &mask_feat;
  env.mask_e = cx.leaf(mask_feat.data);
  env.mask_kp = cx.leaf(mask_pe.data);
  Mat anchors;
  if (cfg.pq_variant == PqVariant::kGridAnchor) {
    anchors = pq_grid_anchor(cfg.num_queries, cfg.channels, mask_feat.h, mask_feat.w);
    env.grid_anchor = &anchors;
  }
  env.position = position;
  env.round = round;
  env.block_index = block_index;
  env.divisor = omega != nullptr
                    ? cfg.hrca_divisor
                    : cfg.scale_divisors[static_cast<std::size_t>(position)];
  env.is_hrca = omega != nullptr;
  env.omega = omega;

  detail::BlockChain<PlainCtx> chain;
  if (prev != nullptr) {
    chain.scores = cx.leaf(prev->scores);
    chain.kp_rows = cx.leaf(prev->kp_rows);
  }
  auto out = detail::block_step(cx, cx.leaf(state.content), env, prev != nullptr ? &chain : nullptr);
  return {QueryState(out.content, out.q_pos), std::move(out.record)};
}

RunTrace run_faseg(const DecoderConfig& cfg, const FeaturePyramid& pyr, const DecoderWeights& w) {
  detail::DecoderRun<PlainCtx> run(PlainCtx{}, cfg, pyr, w);
  run.run();
  return run.take_trace();
}

RunTrace run_faseg(const DecoderConfig& cfg) {
  const FeaturePyramid pyr =
      synth_pyramid(cfg.base_h, cfg.base_w, cfg.channels, cfg.seed, cfg.noise_sigma);
  const DecoderWeights w = DecoderWeights::seeded(cfg);
  return run_faseg(cfg, pyr, w);
}

}  // namespace faseg
