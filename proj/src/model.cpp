#include "icl/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>

namespace icl {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;

const std::vector<float>& CaptureResult::hidden_at(int layer, int position) const {
  auto it = hidden.find({layer, position});
  if (it == hidden.end())
    throw std::out_of_range("capture: no hidden state for layer " + std::to_string(layer) +
                            " position " + std::to_string(position));
  return it->second;
}

const std::vector<float>& CaptureResult::attention_at(int layer, int position) const {
  auto it = attention_rows.find({layer, position});
  if (it == attention_rows.end())
    throw std::out_of_range("capture: attention not captured at layer " + std::to_string(layer) +
                            " position " + std::to_string(position));
  return it->second;
}

namespace {

void check_size(const std::vector<float>& v, size_t want, const char* name) {
  if (v.size() != want)
    throw std::invalid_argument(std::string("model weights: ") + name + " has " +
                                std::to_string(v.size()) + " values, expected " +
                                std::to_string(want));
}

// rowwise layer norm, biased variance, matching the exported training graph
void layer_norm(const RowMat& x, const std::vector<float>& g, const std::vector<float>& b,
                float eps, RowMat& out) {
  const auto d = x.cols();
  out.resize(x.rows(), d);
  Eigen::Map<const Eigen::RowVectorXf> gv(g.data(), d);
  Eigen::Map<const Eigen::RowVectorXf> bv(b.data(), d);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    float mean = x.row(r).mean();
    Eigen::RowVectorXf c = x.row(r).array() - mean;
    float var = c.squaredNorm() / static_cast<float>(d);
    out.row(r) = (c.array() / std::sqrt(var + eps)).matrix().cwiseProduct(gv) + bv;
  }
}

inline float gelu_erf(float x) {
  return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752440f));
}

}  // namespace

GptModel::GptModel(GptWeights weights, Tokenizer tokenizer, std::string model_id)
    : w_(std::move(weights)), tokenizer_(std::move(tokenizer)) {
  const GptConfig& c = w_.config;
  if (c.n_layer <= 0 || c.n_embd <= 0 || c.n_head <= 0 || c.n_ctx <= 0 || c.n_vocab <= 0)
    throw std::invalid_argument("model config: all dimensions must be positive");
  if (c.n_embd % c.n_head != 0)
    throw std::invalid_argument("model config: n_embd must divide evenly into heads");
  if (tokenizer_.vocab_size() != c.n_vocab)
    throw std::invalid_argument("model config: tokenizer vocab " +
                                std::to_string(tokenizer_.vocab_size()) +
                                " != n_vocab " + std::to_string(c.n_vocab));
  const size_t d = static_cast<size_t>(c.n_embd);
  check_size(w_.wte, static_cast<size_t>(c.n_vocab) * d, "wte");
  check_size(w_.wpe, static_cast<size_t>(c.n_ctx) * d, "wpe");
  check_size(w_.lnf_g, d, "lnf_g");
  check_size(w_.lnf_b, d, "lnf_b");
  if (w_.layers.size() != static_cast<size_t>(c.n_layer))
    throw std::invalid_argument("model weights: wrong layer count");
  for (const auto& l : w_.layers) {
    check_size(l.ln1_g, d, "ln1_g");
    check_size(l.ln1_b, d, "ln1_b");
    check_size(l.qkv_w, 3 * d * d, "qkv_w");
    check_size(l.qkv_b, 3 * d, "qkv_b");
    check_size(l.attn_proj_w, d * d, "attn_proj_w");
    check_size(l.attn_proj_b, d, "attn_proj_b");
    check_size(l.ln2_g, d, "ln2_g");
    check_size(l.ln2_b, d, "ln2_b");
    check_size(l.mlp_fc_w, 4 * d * d, "mlp_fc_w");
    check_size(l.mlp_fc_b, 4 * d, "mlp_fc_b");
    check_size(l.mlp_proj_w, 4 * d * d, "mlp_proj_w");
    check_size(l.mlp_proj_b, d, "mlp_proj_b");
  }
  handle_ = {std::move(model_id), c.n_layer, c.n_embd, c.n_vocab};
}

TokenSequence GptModel::tokenize(const std::string& text) const {
  return tokenizer_.tokenize(text);
}

std::string GptModel::detokenize(std::span<const int> ids) const {
  return tokenizer_.detokenize(ids);
}

UnembeddingMatrix GptModel::unembedding() const {
  return {w_.config.n_vocab, w_.config.n_embd, w_.wte.data()};
}

std::span<const float> GptModel::input_embedding(int token_id) const {
  if (token_id < 0 || token_id >= w_.config.n_vocab)
    throw std::out_of_range("input_embedding: token id out of range");
  return {w_.wte.data() + static_cast<size_t>(token_id) * w_.config.n_embd,
          static_cast<size_t>(w_.config.n_embd)};
}

std::vector<float> GptModel::apply_final_norm(std::span<const float> h) const {
  const int d = w_.config.n_embd;
  if (static_cast<int>(h.size()) != d)
    throw std::invalid_argument("apply_final_norm: wrong vector length");
  RowMat x(1, d);
  std::copy(h.begin(), h.end(), x.data());
  RowMat out;
  layer_norm(x, w_.lnf_g, w_.lnf_b, w_.config.ln_eps, out);
  return std::vector<float>(out.data(), out.data() + d);
}

std::vector<float> GptModel::project_to_vocab(std::span<const float> h) const {
  std::vector<float> n = apply_final_norm(h);
  const int d = w_.config.n_embd;
  const int v = w_.config.n_vocab;
  ConstMap E(w_.wte.data(), v, d);
  Eigen::Map<const Eigen::VectorXf> nv(n.data(), d);
  Eigen::VectorXf logits = E * nv;
  return std::vector<float>(logits.data(), logits.data() + v);
}

CaptureResult GptModel::forward_capture(const TokenSequence& prompt,
                                        const CaptureRequest& req) const {
  std::lock_guard<std::mutex> lock(*forward_mutex_);
  const GptConfig& c = w_.config;
  const int n = static_cast<int>(prompt.token_ids.size());
  if (n == 0) throw std::invalid_argument("forward_capture: empty prompt");
  if (n > c.n_ctx)
    throw std::invalid_argument("forward_capture: prompt length " + std::to_string(n) +
                                " exceeds context " + std::to_string(c.n_ctx));
  for (int id : prompt.token_ids)
    if (id < 0 || id >= c.n_vocab)
      throw std::out_of_range("forward_capture: token id out of range");

  std::set<int> positions(req.positions.begin(), req.positions.end());
  for (int p : positions)
    if (p < 0 || p >= n)
      throw std::out_of_range("forward_capture: position " + std::to_string(p) +
                              " out of range for prompt of length " + std::to_string(n));
  std::set<int> attn_layers(req.attention_layers.begin(), req.attention_layers.end());
  for (int l : attn_layers)
    if (l < 1 || l > c.n_layer)
      throw std::out_of_range("forward_capture: capture layer " + std::to_string(l) +
                              " out of range [1, " + std::to_string(c.n_layer) + "]");

  CaptureResult res;
  res.num_layers = c.n_layer;
  res.hidden_dim = c.n_embd;
  res.vocab_size = c.n_vocab;
  res.seq_len = n;
  res.positions.assign(positions.begin(), positions.end());

  const int d = c.n_embd;
  const int nh = c.n_head;
  const int dh = d / nh;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

  RowMat x(n, d);
  for (int t = 0; t < n; ++t) {
    const float* tok = w_.wte.data() + static_cast<size_t>(prompt.token_ids[t]) * d;
    const float* pos = w_.wpe.data() + static_cast<size_t>(t) * d;
    for (int j = 0; j < d; ++j) x(t, j) = tok[j] + pos[j];
  }

  RowMat normed, attn_out(n, d), probs;
  for (int li = 0; li < c.n_layer; ++li) {
    const GptLayerWeights& lw = w_.layers[li];
    const int layer = li + 1;
    const bool keep_attn = attn_layers.count(layer) > 0;

    layer_norm(x, lw.ln1_g, lw.ln1_b, c.ln_eps, normed);
    ConstMap Wqkv(lw.qkv_w.data(), 3 * d, d);
    Eigen::Map<const Eigen::RowVectorXf> bqkv(lw.qkv_b.data(), 3 * d);
    RowMat qkv = normed * Wqkv.transpose();
    qkv.rowwise() += bqkv;

    RowMat attn_mean;
    if (keep_attn) attn_mean = RowMat::Zero(n, n);
    for (int h = 0; h < nh; ++h) {
      auto Q = qkv.block(0, h * dh, n, dh);
      auto K = qkv.block(0, d + h * dh, n, dh);
      auto V = qkv.block(0, 2 * d + h * dh, n, dh);
      RowMat scores = (Q * K.transpose()) * scale;
      probs.resize(n, n);
      for (int r = 0; r < n; ++r) {
        // causal: token r attends to positions 0..r
        float m = scores.row(r).head(r + 1).maxCoeff();
        Eigen::RowVectorXf e = (scores.row(r).head(r + 1).array() - m).exp();
        float z = e.sum();
        probs.row(r).head(r + 1) = e / z;
        if (r + 1 < n) probs.row(r).tail(n - r - 1).setZero();
      }
      if (keep_attn) attn_mean += probs;
      attn_out.block(0, h * dh, n, dh).noalias() = probs * V;
    }
    if (keep_attn) {
      attn_mean /= static_cast<float>(nh);
      for (int p : positions) {
        std::vector<float> row(attn_mean.row(p).data(), attn_mean.row(p).data() + n);
        res.attention_rows[{layer, p}] = std::move(row);
      }
    }

    ConstMap Wproj(lw.attn_proj_w.data(), d, d);
    Eigen::Map<const Eigen::RowVectorXf> bproj(lw.attn_proj_b.data(), d);
    x.noalias() += attn_out * Wproj.transpose();
    x.rowwise() += bproj;

    layer_norm(x, lw.ln2_g, lw.ln2_b, c.ln_eps, normed);
    ConstMap Wfc(lw.mlp_fc_w.data(), 4 * d, d);
    Eigen::Map<const Eigen::RowVectorXf> bfc(lw.mlp_fc_b.data(), 4 * d);
    RowMat hdn = normed * Wfc.transpose();
    hdn.rowwise() += bfc;
    for (Eigen::Index i = 0; i < hdn.size(); ++i) hdn.data()[i] = gelu_erf(hdn.data()[i]);
    ConstMap Wmp(lw.mlp_proj_w.data(), d, 4 * d);
    Eigen::Map<const Eigen::RowVectorXf> bmp(lw.mlp_proj_b.data(), d);
    x.noalias() += hdn * Wmp.transpose();
    x.rowwise() += bmp;

    for (int p : positions) {
      std::vector<float> state(x.row(p).data(), x.row(p).data() + d);
      res.hidden[{layer, p}] = std::move(state);
    }
  }

  layer_norm(x, w_.lnf_g, w_.lnf_b, c.ln_eps, normed);
  ConstMap E(w_.wte.data(), c.n_vocab, d);
  Eigen::VectorXf logits = E * normed.row(n - 1).transpose();
  res.final_logits.assign(logits.data(), logits.data() + c.n_vocab);
  return res;
}

}  // namespace icl
