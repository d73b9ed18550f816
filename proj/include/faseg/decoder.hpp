#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faseg/queries.hpp"
#include "faseg/types.hpp"

namespace faseg {

enum class PqVariant { kLearnable, kGridAnchor, kDynamicAnchor, kDynamicForeground, kDfpq };
enum class AttnVariant { kDense, kMasked };

std::string to_string(PqVariant v);
std::string to_string(AttnVariant v);
std::string to_string(PeKind k);
PqVariant parse_pq_variant(const std::string& s);
AttnVariant parse_attn_variant(const std::string& s);
PeKind parse_pe_kind(const std::string& s);

struct DecoderConfig {
  int base_h = 64, base_w = 64;
  int num_queries = 8;
  int channels = 16;
  int heads = 2;
  int rounds = 3;
  std::vector<int> scale_divisors = {32, 16, 8};
  bool hrca_enabled = true;
  int hrca_divisor = 4;
  int omega_divisor = 32;         // |omega| = floor(H*W / omega_divisor) at the hrca grid
  int omega_source_divisor = 32;  // scale whose scores seed omega selection
  PqVariant pq_variant = PqVariant::kDfpq;
  AttnVariant attn_variant = AttnVariant::kMasked;
  PeKind pe_kind = PeKind::kConditional;
  int dfpq_start_round = 0;  // rounds before this use the learnable fallback
  double mask_threshold = 0.5;
  double noise_sigma = 0.01;
  int mlp_hidden = 0;  // 0 means = channels
  std::uint64_t seed = 7;

  int blocks_per_round() const {
    return static_cast<int>(scale_divisors.size()) + (hrca_enabled ? 1 : 0);
  }
  int hidden() const { return mlp_hidden > 0 ? mlp_hidden : channels; }
  void validate() const;  // throws ConfigError
};

struct FeaturePyramid {
  std::vector<int> divisors;  // descending, e.g. {32, 16, 8, 4}
  std::map<int, FeatureMap> levels;

  const FeatureMap& at(int divisor) const;
  int finest_divisor() const;
};

/// Deterministic stand-in for a backbone + pixel decoder: a seeded random
/// field at the coarsest scale, bilinearly upsampled to finer scales, plus
/// seeded per-scale noise of the given sigma.
FeaturePyramid synth_pyramid(int base_h, int base_w, int d, std::uint64_t seed,
                             double noise_sigma = 0.01);

/// All frozen parameters of one run, derived from the config seed.
struct DecoderWeights {
  Mat initial_content;  // n x d
  Mat learnable_qp;     // n x d, shared across blocks
  std::vector<DfpqParams> dfpq;      // one per block position, reused across rounds
  std::vector<Mlp2Params> cross_proj;
  std::vector<Mlp2Params> self_proj;
  std::vector<Mlp2Params> ffn;
  Mlp2Params mask_embed;  // shared auxiliary mask head
  Mat peg;                // d x 9 depthwise kernels for conditional encodings

  static DecoderWeights seeded(const DecoderConfig& cfg);
};

/// Per-query mask logits: mlp2(qc) dotted with every pixel embedding of `e`.
Mat mask_logits(const Mat& qc, const FeatureMap& e, const Mlp2Params& embed);
MaskPrediction mask_head(const Mat& qc, const FeatureMap& e, const Mlp2Params& embed,
                         double threshold = 0.5);

/// Positional encodings for one pyramid level under the configured family.
PosEncoding make_pos_encoding(PeKind kind, const FeatureMap& f, const Mat& peg,
                              std::uint64_t seed);

struct BlockRecord {
  int index = 0;     // global block index within the run
  int divisor = 0;   // feature scale of this block
  int round = 0;
  int position = 0;  // block position within the round
  std::string qp_source;
  int grid_h = 0, grid_w = 0;
  Mat scores;      // n x (grid or |omega|), head-averaged, row-stochastic
  Mat kp_rows;     // positional encodings the scores refer to
  Mat q_pos;       // positional queries used by this block
  Mat content_in;  // content queries at block entry
  MaskPrediction mask;  // prediction (finest grid) available to this block
  std::optional<PixelIndexSet> omega;
  int mask_fallbacks = 0;
  int pool_fallbacks = 0;
};

struct RunTrace {
  std::vector<BlockRecord> blocks;
  Mat final_mask_logits;  // n x (finest grid)
  int finest_h = 0, finest_w = 0;
};

/// FNV-1a over every recorded value; equal hashes on repeated runs certify
/// bit-identical traces.
std::uint64_t trace_hash(const RunTrace& t);

struct BlockStepResult {
  QueryState state;  // content updated; positional = the q_pos this block used
  BlockRecord record;
};

/// One decoder block: positional-query generation, (masked) cross-attention
/// or HRCA, residual projection, query self-attention, and feed-forward.
/// `prev` supplies the preceding block's scores/encodings for the dynamic
/// query chain; `omega` must be set exactly for HRCA blocks.
BlockStepResult decoder_block(const QueryState& state, const FeatureMap& feat,
                              const PosEncoding& pe, const DecoderConfig& cfg,
                              const DecoderWeights& w, int position, int round, int block_index,
                              const FeatureMap& mask_feat, const PosEncoding& mask_pe,
                              const BlockRecord* prev, const PixelIndexSet* omega);

/// Full run: `rounds` passes over the scale schedule plus, when enabled, one
/// HRCA block per round at the finest scale.
RunTrace run_faseg(const DecoderConfig& cfg, const FeaturePyramid& pyr, const DecoderWeights& w);
RunTrace run_faseg(const DecoderConfig& cfg);

}  // namespace faseg
