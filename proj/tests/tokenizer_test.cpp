#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "icl/rng.hpp"
#include "icl/tokenizer.hpp"

using icl::StableRng;
using icl::Tokenizer;
using icl::TokenSequence;

TEST_CASE("byte tokens occupy ids 0..255 and words follow in order") {
  Tokenizer tok({" cap", " capital", "Label"});
  CHECK(tok.vocab_size() == 259);
  CHECK(tok.find(" cap") == 256);
  CHECK(tok.find(" capital") == 257);
  CHECK(tok.find("Label") == 258);
  CHECK(tok.find("L") == static_cast<int>('L'));
  CHECK(tok.find(" missing") == -1);
  CHECK(tok.token_text(256) == " cap");
  CHECK(tok.token_text(static_cast<int>('x')) == "x");
}

TEST_CASE("construction rejects duplicate and empty words") {
  CHECK_THROWS_AS(Tokenizer({" a", " a"}), std::invalid_argument);
  CHECK_THROWS_AS(Tokenizer({""}), std::invalid_argument);
}

TEST_CASE("greedy longest match wins over shorter prefixes") {
  Tokenizer tok({" cap", " capital", " capitals"});
  TokenSequence seq = tok.tokenize(" capital");
  REQUIRE(seq.token_ids.size() == 1);
  CHECK(seq.token_ids[0] == tok.find(" capital"));

  seq = tok.tokenize(" capitals");
  REQUIRE(seq.token_ids.size() == 1);
  CHECK(seq.token_ids[0] == tok.find(" capitals"));

  seq = tok.tokenize(" capX");
  CHECK(seq.token_ids == std::vector<int>{tok.find(" cap"), static_cast<int>('X')});
}

TEST_CASE("unknown bytes fall back to single-byte tokens") {
  Tokenizer tok({" hi"});
  TokenSequence seq = tok.tokenize("q hi\xc3\xa9");
  CHECK(seq.token_ids == std::vector<int>{static_cast<int>('q'), tok.find(" hi"), 0xc3, 0xa9});
  CHECK(tok.detokenize(seq.token_ids) == "q hi\xc3\xa9");
}

TEST_CASE("normalization strips trailing spaces only") {
  CHECK(Tokenizer::normalize("Label:  ") == "Label:");
  CHECK(Tokenizer::normalize("  a b ") == "  a b");
  CHECK(Tokenizer::normalize("a\n") == "a\n");
  CHECK(Tokenizer::normalize("x") == "x");
}

TEST_CASE("empty input is rejected") {
  Tokenizer tok({" a"});
  CHECK_THROWS_AS(tok.tokenize(""), std::invalid_argument);
  CHECK_THROWS_AS(tok.tokenize("   "), std::invalid_argument);
}

TEST_CASE("round trip: decode of encode reproduces the normalized input") {
  Tokenizer tok({" France", " Paris", "Word", "Label", " the", "ing", " a"});
  StableRng rng(41);
  std::vector<std::string> pieces = {" France", " Paris", "Word", "Label:", " the",
                                     "ing", " a", "\n", "?", " 7", "\xc3\xa9"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) text += pieces[rng.below(pieces.size())];
    if (Tokenizer::normalize(text).empty()) continue;
    TokenSequence seq = tok.tokenize(text);
    CHECK(tok.detokenize(seq.token_ids) == Tokenizer::normalize(text));
    CHECK(seq.surface == text);
  }
}

TEST_CASE("tokenize is deterministic across calls") {
  Tokenizer tok({" France", " Paris", "Label"});
  TokenSequence a = tok.tokenize("Label: France Paris");
  TokenSequence b = tok.tokenize("Label: France Paris");
  CHECK(a.token_ids == b.token_ids);
}

TEST_CASE("offsets point at each token's first byte of the normalized text") {
  Tokenizer tok({" France", "Word", "Label"});
  std::vector<size_t> offsets;
  std::string text = "Word: France ";
  TokenSequence seq = tok.tokenize_with_offsets(text, &offsets);
  std::string norm = Tokenizer::normalize(text);
  REQUIRE(offsets.size() == seq.token_ids.size());
  size_t expected = 0;
  for (size_t i = 0; i < offsets.size(); ++i) {
    CHECK(offsets[i] == expected);
    expected += tok.token_text(seq.token_ids[i]).size();
  }
  CHECK(expected == norm.size());
}
