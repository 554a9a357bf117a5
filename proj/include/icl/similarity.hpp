#pragma once

#include <string>
#include <vector>

#include "icl/prompt.hpp"

namespace icl {

class GptModel;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<float> embed(const std::string& text) const = 0;
};

// Default embedder: mean-pooled input embeddings of the backend model,
// whitened against the embedding matrix and with the dominant principal
// components removed, so cosines are not saturated by the shared offsets of
// token-type clusters in a small trained vocabulary.
class MeanInputEmbedder : public Embedder {
 public:
  // principal components zeroed by the whitener, largest-eigenvalue first
  static constexpr int kDroppedComponents = 8;

  explicit MeanInputEmbedder(const GptModel& model);
  std::vector<float> embed(const std::string& text) const override;

 private:
  const GptModel& model_;
  std::vector<float> mean_;       // embedding-matrix mean
  std::vector<float> whitener_;   // (d, d) row-major ZCA transform
  int dim_ = 0;
};

struct SimilarityScore {
  double lexical = 0.0;   // [0, 1]
  double semantic = 0.0;  // [-1, 1]
  double combined = 0.0;  // max(lexical, semantic clipped to [0, 1])
};

// multiset Jaccard over lowercase word tokens, split on whitespace with
// terminal punctuation stripped
double lexical_similarity(const std::string& a, const std::string& b);

// cosine over embedder outputs
double semantic_similarity(const std::string& a, const std::string& b, const Embedder& embedder);

// embedder may be null, in which case semantic is reported as 0
SimilarityScore score_pair(const std::string& a, const std::string& b, const Embedder* embedder);

struct DemoSimilarity {
  std::vector<SimilarityScore> per_demo;
  double prompt_max = 0.0;  // 0 by convention for empty-demo specs
};

DemoSimilarity demo_similarity(const std::string& test, const PromptSpec& spec,
                               const Embedder* embedder);

}  // namespace icl
