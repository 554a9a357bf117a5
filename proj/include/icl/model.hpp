#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icl/tokenizer.hpp"

namespace icl {

struct ModelHandle {
  std::string model_id;
  int num_layers = 0;
  int hidden_dim = 0;
  int vocab_size = 0;
};

struct GptConfig {
  int n_layer = 0;
  int n_embd = 0;
  int n_head = 0;
  int n_ctx = 0;
  int n_vocab = 0;
  float ln_eps = 1e-5f;
};

// All linear weights stored row-major as (out, in); y = W x + b.
struct GptLayerWeights {
  std::vector<float> ln1_g, ln1_b;
  std::vector<float> qkv_w, qkv_b;            // (3d, d): q rows, then k, then v
  std::vector<float> attn_proj_w, attn_proj_b;  // (d, d)
  std::vector<float> ln2_g, ln2_b;
  std::vector<float> mlp_fc_w, mlp_fc_b;      // (4d, d)
  std::vector<float> mlp_proj_w, mlp_proj_b;  // (d, 4d)
};

struct GptWeights {
  GptConfig config;
  std::vector<float> wte;  // (n_vocab, d); tied output head
  std::vector<float> wpe;  // (n_ctx, d)
  std::vector<float> lnf_g, lnf_b;
  std::vector<GptLayerWeights> layers;
};

struct CaptureRequest {
  std::vector<int> positions;
  std::vector<int> attention_layers;  // 1-based block indices; may be empty
};

struct CaptureResult {
  int num_layers = 0;
  int hidden_dim = 0;
  int vocab_size = 0;
  int seq_len = 0;
  std::vector<int> positions;  // sorted, deduplicated
  // (layer in 1..num_layers, position) -> post-block residual state
  std::map<std::pair<int, int>, std::vector<float>> hidden;
  // (layer, query position) -> head-averaged attention over prompt positions
  std::map<std::pair<int, int>, std::vector<float>> attention_rows;
  std::vector<float> final_logits;  // next-token scores at the last position

  const std::vector<float>& hidden_at(int layer, int position) const;
  const std::vector<float>& attention_at(int layer, int position) const;
};

// Read-only row-major view of the tied output head; rows are token ids.
struct UnembeddingMatrix {
  int rows = 0;
  int cols = 0;
  const float* data = nullptr;

  std::span<const float> row(int token_id) const {
    return {data + static_cast<size_t>(token_id) * cols, static_cast<size_t>(cols)};
  }
};

// Deterministic CPU forward pass for a GPT-2 style causal LM (pre-norm
// blocks, learned positions, exact-erf GELU, tied unembedding).
class GptModel {
 public:
  GptModel(GptWeights weights, Tokenizer tokenizer, std::string model_id);
  static GptModel load(const std::string& path);  // .iclmodel container

  const ModelHandle& handle() const { return handle_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const GptConfig& config() const { return w_.config; }

  TokenSequence tokenize(const std::string& text) const;
  std::string detokenize(std::span<const int> ids) const;

  CaptureResult forward_capture(const TokenSequence& prompt, const CaptureRequest& req) const;
  UnembeddingMatrix unembedding() const;

  // final-norm hook: the projection E expects ln_f-normalized states
  std::vector<float> apply_final_norm(std::span<const float> h) const;
  // apply_final_norm then E; the logit-lens projection of one hidden state
  std::vector<float> project_to_vocab(std::span<const float> h) const;

  std::span<const float> input_embedding(int token_id) const;

 private:
  GptWeights w_;
  Tokenizer tokenizer_;
  ModelHandle handle_;
  // single in-flight forward pass; owned indirectly to keep the model movable
  std::unique_ptr<std::mutex> forward_mutex_ = std::make_unique<std::mutex>();
};

}  // namespace icl
