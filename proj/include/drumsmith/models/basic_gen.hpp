#pragma once

#include <span>
#include <vector>

#include "drumsmith/config.hpp"
#include "drumsmith/models/common.hpp"
#include "drumsmith/nn/layers.hpp"
#include "drumsmith/tokenizer.hpp"

namespace drumsmith {

// Transformer seq2seq: MA pianoroll into the encoder, shifted PA tokens into
// the causally masked decoder, 18-way logits out.
class BasicDrumGen {
 public:
  // learned start-of-sequence embedding row; never a model output
  static constexpr int kBosId = tokens::kVocabSize;

  BasicDrumGen(const BasicGenOptions& opt, uint64_t seed);

  // enc_out [B, 352, D]
  nn::Var<float> encode(std::span<const MASample> mas) const;

  // logits [B, L, vocab]; all dec_inputs rows must share one length (pad
  // with kBosId and mask those targets out of the loss)
  nn::Var<float> decode_logits(const nn::Var<float>& enc_out,
                               const std::vector<std::vector<int>>& dec_inputs) const;

  nn::Var<float> forward(std::span<const MASample> mas,
                         const std::vector<std::vector<int>>& dec_inputs) const;

  nn::ParamRegistry<float>& params() { return params_; }
  const BasicGenOptions& options() const { return opt_; }

 private:
  friend class BasicGenSampler;

  BasicGenOptions opt_;
  nn::FeatureEmbedder<float> ma_embed_;
  nn::Var<float> token_table_;  // [vocab+1, D], row 18 = BOS
  nn::PositionEncoder<float> token_pos_;
  std::vector<nn::EncoderBlock<float>> enc_;
  std::vector<nn::DecoderBlock<float>> dec_;
  nn::Dense<float> out_;
  nn::ParamRegistry<float> params_;
};

// Incremental decoder with per-layer key/value caches; one encoder pass,
// O(context) work per emitted token. Mirrors BasicDrumGen::forward exactly.
class BasicGenSampler {
 public:
  BasicGenSampler(const BasicDrumGen& model, const MASample& ma, int max_len);

  // feed the previously emitted token (BOS first); returns logits over the
  // 18-token vocabulary at the current position
  const std::vector<float>& step(int token_id);

  int position() const { return pos_; }

 private:
  struct LayerCache {
    std::vector<float> self_k, self_v;    // [t, inner], grows per step
    std::vector<float> cross_k, cross_v;  // [352, inner]
  };

  void attend(const float* q, const float* k_cache, const float* v_cache, int t_len,
              std::vector<float>& ctx) const;

  const BasicDrumGen& model_;
  int max_len_ = 0;
  int pos_ = 0;
  std::vector<float> enc_out_;    // [352, D]
  std::vector<float> positions_;  // [max_len, D]
  std::vector<LayerCache> layers_;
  std::vector<float> logits_;
  std::vector<float> x_, scratch_a_, scratch_b_, scratch_c_;
};

}  // namespace drumsmith
