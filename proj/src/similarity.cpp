#include "icl/similarity.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "icl/model.hpp"

namespace icl {

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal_punct(unsigned char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '\'': case '"': case ')': case ']': case '}':
      return true;
    default:
      return false;
  }
}

// lowercase words, whitespace split (including the UTF-8 ideographic and
// no-break spaces), terminal punctuation stripped
std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && is_terminal_punct(static_cast<unsigned char>(cur.back())))
      cur.pop_back();
    if (!cur.empty()) words.push_back(cur);
    cur.clear();
  };
  for (size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    bool space = is_space_byte(c);
    if (!space && c == 0xC2 && i + 1 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0xA0) {  // U+00A0
      space = true;
      ++i;
    }
    if (!space && c == 0xE3 && i + 2 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        static_cast<unsigned char>(text[i + 2]) == 0x80) {  // U+3000
      space = true;
      i += 2;
    }
    if (space) {
      flush();
    } else {
      cur += static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
    }
  }
  flush();
  return words;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("cosine: embedding size mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double lexical_similarity(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("lexical_similarity: empty input");
  std::map<std::string, int> ca, cb;
  for (const std::string& w : words_of(a)) ++ca[w];
  for (const std::string& w : words_of(b)) ++cb[w];
  long min_sum = 0, max_sum = 0;
  for (const auto& [w, n] : ca) {
    auto it = cb.find(w);
    int m = it == cb.end() ? 0 : it->second;
    min_sum += std::min(n, m);
    max_sum += std::max(n, m);
  }
  for (const auto& [w, m] : cb)
    if (ca.find(w) == ca.end()) max_sum += m;
  if (max_sum == 0) return 0.0;
  return static_cast<double>(min_sum) / static_cast<double>(max_sum);
}

MeanInputEmbedder::MeanInputEmbedder(const GptModel& model)
    : model_(model), dim_(model.handle().hidden_dim) {
  const UnembeddingMatrix wte = model.unembedding();
  const int v = wte.rows;
  const int d = wte.cols;
  using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> E(wte.data, v, d);

  Eigen::RowVectorXf mu = E.colwise().mean();
  mean_.assign(mu.data(), mu.data() + d);

  RowMat centered = E.rowwise() - mu;
  Eigen::MatrixXf cov =
      (centered.transpose() * centered).cast<float>() / static_cast<float>(v - 1);
  cov += Eigen::MatrixXf::Identity(d, d) * 1e-4f;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXf> eig(cov);
  Eigen::VectorXf inv_sqrt = eig.eigenvalues().cwiseMax(1e-8f).cwiseSqrt().cwiseInverse();
  // Zero the dominant principal components (eigenvalues ascend, so the tail):
  // token-type clusters share large offsets along them, which whitening alone
  // rescales but cannot remove, leaving same-type items at cosine ~1.
  const int drop = std::min(kDroppedComponents, d > 1 ? d - 1 : 0);
  for (int i = d - drop; i < d; ++i) inv_sqrt(i) = 0.0f;
  Eigen::MatrixXf W =
      eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  whitener_.resize(static_cast<size_t>(d) * d);
  Eigen::Map<RowMat>(whitener_.data(), d, d) = W;
}

std::vector<float> MeanInputEmbedder::embed(const std::string& text) const {
  TokenSequence seq = model_.tokenize(text);
  if (seq.token_ids.empty()) throw std::runtime_error("embed: text tokenizes to nothing");
  Eigen::VectorXf acc = Eigen::VectorXf::Zero(dim_);
  for (int id : seq.token_ids) {
    std::span<const float> row = model_.input_embedding(id);
    acc += Eigen::Map<const Eigen::VectorXf>(row.data(), dim_);
  }
  acc /= static_cast<float>(seq.token_ids.size());
  acc -= Eigen::Map<const Eigen::VectorXf>(mean_.data(), dim_);
  using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> W(whitener_.data(), dim_, dim_);
  Eigen::VectorXf out = W * acc;
  return std::vector<float>(out.data(), out.data() + dim_);
}

double semantic_similarity(const std::string& a, const std::string& b,
                           const Embedder& embedder) {
  if (a.empty() || b.empty()) throw std::invalid_argument("semantic_similarity: empty input");
  return cosine(embedder.embed(a), embedder.embed(b));
}

SimilarityScore score_pair(const std::string& a, const std::string& b,
                           const Embedder* embedder) {
  SimilarityScore s;
  s.lexical = lexical_similarity(a, b);
  s.semantic = embedder ? semantic_similarity(a, b, *embedder) : 0.0;
  s.combined = std::max(s.lexical, std::clamp(s.semantic, 0.0, 1.0));
  return s;
}

DemoSimilarity demo_similarity(const std::string& test, const PromptSpec& spec,
                               const Embedder* embedder) {
  DemoSimilarity out;
  for (const Example& demo : spec.demos) {
    SimilarityScore s = score_pair(test, demo.input_text, embedder);
    out.prompt_max = std::max(out.prompt_max, s.combined);
    out.per_demo.push_back(s);
  }
  return out;
}

}  // namespace icl
