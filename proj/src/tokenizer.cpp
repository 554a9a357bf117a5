#include "icl/tokenizer.hpp"

#include <stdexcept>

namespace icl {

Tokenizer::Tokenizer(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (size_t i = 0; i < words_.size(); ++i) {
    const std::string& w = words_[i];
    if (w.empty()) throw std::invalid_argument("Tokenizer: empty word token");
    auto [it, fresh] = index_.emplace(w, 256 + static_cast<int>(i));
    if (!fresh) throw std::invalid_argument("Tokenizer: duplicate word token: " + w);
    if (w.size() > max_token_len_) max_token_len_ = w.size();
  }
}

std::string Tokenizer::normalize(const std::string& text) {
  size_t end = text.size();
  while (end > 0 && text[end - 1] == ' ') --end;
  return text.substr(0, end);
}

TokenSequence Tokenizer::tokenize(const std::string& text) const {
  return tokenize_with_offsets(text, nullptr);
}

TokenSequence Tokenizer::tokenize_with_offsets(const std::string& text,
                                               std::vector<size_t>* offsets) const {
  if (text.empty()) throw std::invalid_argument("tokenize: empty input");
  std::string norm = normalize(text);
  if (norm.empty()) throw std::invalid_argument("tokenize: input is all spaces");
  TokenSequence seq;
  seq.surface = text;
  if (offsets) offsets->clear();
  size_t i = 0;
  while (i < norm.size()) {
    size_t best = 0;
    int id = -1;
    size_t cap = std::min(max_token_len_, norm.size() - i);
    for (size_t len = cap; len >= 1; --len) {
      auto it = index_.find(norm.substr(i, len));
      if (it != index_.end()) {
        best = len;
        id = it->second;
        break;
      }
    }
    if (id < 0) {  // raw byte fallback
      best = 1;
      id = static_cast<unsigned char>(norm[i]);
    }
    seq.token_ids.push_back(id);
    if (offsets) offsets->push_back(i);
    i += best;
  }
  return seq;
}

std::string Tokenizer::detokenize(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out += token_text(id);
  return out;
}

std::string Tokenizer::token_text(int id) const {
  if (id < 0 || id >= vocab_size())
    throw std::out_of_range("token_text: id " + std::to_string(id) + " out of range");
  if (id < 256) return std::string(1, static_cast<char>(static_cast<unsigned char>(id)));
  return words_[static_cast<size_t>(id - 256)];
}

int Tokenizer::find(const std::string& token) const {
  if (token.size() == 1) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    return static_cast<unsigned char>(token[0]);
  }
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

}  // namespace icl
