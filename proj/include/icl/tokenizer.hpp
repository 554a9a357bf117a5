#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace icl {

struct TokenSequence {
  std::vector<int> token_ids;
  std::string surface;  // original text; detokenize gives normalize(surface)
};

// Greedy longest-match tokenizer over a fixed vocabulary, with raw-byte
// fallback. Ids [0, 256) are the single-byte tokens; word tokens follow in
// vocabulary order. Detokenization is plain concatenation.
class Tokenizer {
 public:
  Tokenizer() = default;
  explicit Tokenizer(std::vector<std::string> words);

  int vocab_size() const { return 256 + static_cast<int>(words_.size()); }
  bool empty() const { return words_.empty(); }

  // canonical normalization applied before matching: trailing spaces are
  // stripped, so a prompt ending "Label: " ends at the ":" token
  static std::string normalize(const std::string& text);

  TokenSequence tokenize(const std::string& text) const;
  // byte offset of each token's first byte within normalize(text)
  TokenSequence tokenize_with_offsets(const std::string& text,
                                      std::vector<size_t>* offsets) const;
  std::string detokenize(std::span<const int> ids) const;
  std::string token_text(int id) const;
  int find(const std::string& token) const;  // -1 when absent

  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  size_t max_token_len_ = 1;
};

}  // namespace icl
