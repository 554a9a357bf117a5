#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/rng.hpp"
#include "icl/tokenizer.hpp"

namespace icl {

class Embedder;

struct Example {
  std::string input_text;
  std::string label_text;
};

struct LabelSpace {
  std::vector<std::string> labels;  // ordered, no duplicates, >= 2 entries

  static LabelSpace from_labels(std::vector<std::string> labels);
  bool contains(const std::string& label) const;
};

struct Markers {
  std::string input_marker = "Sentence:";
  std::string label_marker = "Label:";
};

struct PromptSpec {
  std::string instruction;  // empty means none
  std::vector<Example> demos;
  Markers markers;
  std::string test_input;
  uint64_t seed = 0;  // provenance only; carried through serialization

  int k() const { return static_cast<int>(demos.size()); }
};

struct TripletCorpusEntry {
  Example test_sample;
  Example semantic;  // same gold label as test_sample
  Example lexical;   // different label
  Example baseline;
};

// throws when payloads are empty, contain newlines, or contain a marker
// string; markers must be non-empty and distinct
void validate_spec(const PromptSpec& spec);

// per demo: "<input_marker> <input>\n<label_marker> <label>\n"; instruction
// first when present; the final block ends with the bare label marker and a
// single trailing space
std::string render(const PromptSpec& spec);

struct RenderedSpec {
  std::string text;
  // [begin, end) byte range of each demo's label within text
  std::vector<std::pair<size_t, size_t>> label_ranges;
};

RenderedSpec render_with_anchors(const PromptSpec& spec);

// inverse of render for marker-free payloads
PromptSpec parse_rendered(const std::string& text, const Markers& markers);

struct DissimilarityCap {
  double lexical = 0.2;
  double semantic = 0.5;
};

// k dissimilar demos sampled from pool, order seeded; pool entries whose
// lexical or semantic similarity to test_input reaches the cap are excluded
// (semantic only when an embedder is supplied)
PromptSpec build_standard(const std::vector<Example>& pool, const std::string& test_input,
                          int k, uint64_t seed, const Markers& markers,
                          const DissimilarityCap& cap = {}, const Embedder* embedder = nullptr);

enum class InsertMode { correct, incorrect };

struct SimilarInsertion {
  PromptSpec spec;
  std::string inserted_label;
  int position = -1;  // demo slot index the copy landed in
};

// inserts the test sample itself as a demo at a seeded slot; correct mode
// labels it with gold, incorrect mode draws uniformly from the non-gold labels
SimilarInsertion insert_similar_test(const PromptSpec& spec, const std::string& gold_label,
                                     const LabelSpace& space, InsertMode mode, StableRng& rng);

// fresh independent uniform label for every demo; inputs and order unchanged
PromptSpec randomize_labels(const PromptSpec& spec, const std::vector<std::string>& labels,
                            StableRng& rng);

// one demo per label class, order seeded; labels form a permutation of the
// label space
PromptSpec build_label_coverage(const std::vector<std::pair<std::string, Example>>& examples_by_label,
                                const std::string& test_input, const Markers& markers,
                                uint64_t order_seed);

// repeats copies each of lexical/semantic/baseline labeled "l"/"s"/"b",
// interleaved by seed, then the test block
PromptSpec build_triplet_prompt(const TripletCorpusEntry& entry, int repeats, uint64_t order_seed,
                                const Markers& markers);

// replace semantics: the new instruction supersedes any existing one
PromptSpec prepend_instruction(const PromptSpec& spec, const std::string& instruction);

struct LabelPositions {
  std::vector<int> demo_label_positions;  // final sub-token of each demo label
  int final_position = -1;                // the bare label-marker query token
};

// measurement anchors within tokens = tok.tokenize(render(spec))
LabelPositions locate_label_positions(const PromptSpec& spec, const TokenSequence& tokens,
                                      const Tokenizer& tok);

nlohmann::json spec_to_json(const PromptSpec& spec);
PromptSpec spec_from_json(const nlohmann::json& j);

}  // namespace icl
