#pragma once

#include <string>
#include <utility>
#include <vector>

#include "icl/model.hpp"
#include "icl/rng.hpp"

namespace icl_test {

inline std::string repo_path(const std::string& rel) {
  return std::string(ICL_REPO_DIR) + "/" + rel;
}

inline std::vector<std::string> toy_words() {
  return {" France", " Paris", " Italy", " Rome", " capital", " red", " Apple",
          "Word", "Label", "Sentence", " foo", " bar", " color"};
}

// small deterministic model for shape, parity, and serialization tests
inline icl::GptModel make_toy_model(int n_layer = 2, uint64_t seed = 7) {
  icl::GptConfig c;
  c.n_layer = n_layer;
  c.n_embd = 8;
  c.n_head = 2;
  c.n_ctx = 64;
  icl::Tokenizer tok(toy_words());
  c.n_vocab = tok.vocab_size();

  icl::StableRng rng(seed);
  auto fill = [&](std::vector<float>& v, size_t n, double scale) {
    v.resize(n);
    for (auto& f : v) f = static_cast<float>((rng.real01() - 0.5) * 2.0 * scale);
  };
  const size_t d = static_cast<size_t>(c.n_embd);

  icl::GptWeights w;
  w.config = c;
  fill(w.wte, static_cast<size_t>(c.n_vocab) * d, 0.5);
  fill(w.wpe, static_cast<size_t>(c.n_ctx) * d, 0.1);
  auto fill_ln = [&](std::vector<float>& g, std::vector<float>& b) {
    fill(g, d, 0.2);
    for (auto& f : g) f += 1.0f;
    fill(b, d, 0.1);
  };
  fill_ln(w.lnf_g, w.lnf_b);
  w.layers.resize(static_cast<size_t>(n_layer));
  for (auto& l : w.layers) {
    fill_ln(l.ln1_g, l.ln1_b);
    fill(l.qkv_w, 3 * d * d, 0.35);
    fill(l.qkv_b, 3 * d, 0.05);
    fill(l.attn_proj_w, d * d, 0.35);
    fill(l.attn_proj_b, d, 0.05);
    fill_ln(l.ln2_g, l.ln2_b);
    fill(l.mlp_fc_w, 4 * d * d, 0.3);
    fill(l.mlp_fc_b, 4 * d, 0.05);
    fill(l.mlp_proj_w, 4 * d * d, 0.3);
    fill(l.mlp_proj_b, d, 0.05);
  }
  return icl::GptModel(std::move(w), std::move(tok), "toy-" + std::to_string(n_layer));
}

}  // namespace icl_test
