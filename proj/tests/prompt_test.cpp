#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "icl/prompt.hpp"
#include "icl/rng.hpp"
#include "icl/similarity.hpp"
#include "icl/tokenizer.hpp"

using icl::Example;
using icl::LabelSpace;
using icl::Markers;
using icl::PromptSpec;
using icl::StableRng;
using icl::Tokenizer;

namespace {

const Markers kWordMarkers{"Word:", "Label:"};

PromptSpec capitals_spec() {
  PromptSpec spec;
  spec.markers = kWordMarkers;
  spec.demos = {{"France", "Paris"}};
  spec.test_input = "Italy";
  return spec;
}

std::vector<Example> word_pool() {
  return {{"France", "Paris"},   {"Italy", "Rome"},      {"Japan", "Tokyo"},
          {"Canada", "Ottawa"},  {"Germany", "Berlin"},  {"Spain", "Madrid"},
          {"Norway", "Oslo"},    {"Peru", "Lima"},       {"Kenya", "Nairobi"},
          {"Chile", "Santiago"}, {"Poland", "Warsaw"},   {"Egypt", "Cairo"}};
}

}  // namespace

TEST_CASE("rendering matches the fixed demo-block layout") {
  CHECK(icl::render(capitals_spec()) == "Word: France\nLabel: Paris\nWord: Italy\nLabel: ");

  PromptSpec with_instruction = icl::prepend_instruction(
      capitals_spec(), "Answer with the capital city of the given country.");
  CHECK(icl::render(with_instruction) ==
        "Answer with the capital city of the given country.\n"
        "Word: France\nLabel: Paris\nWord: Italy\nLabel: ");

  PromptSpec zero_shot;
  zero_shot.markers = kWordMarkers;
  zero_shot.test_input = "Italy";
  CHECK(icl::render(zero_shot) == "Word: Italy\nLabel: ");
}

TEST_CASE("render anchors delimit exactly the demo labels") {
  PromptSpec spec = capitals_spec();
  spec.demos.push_back({"Japan", "Tokyo"});
  icl::RenderedSpec r = icl::render_with_anchors(spec);
  REQUIRE(r.label_ranges.size() == 2);
  for (size_t i = 0; i < r.label_ranges.size(); ++i) {
    auto [begin, end] = r.label_ranges[i];
    CHECK(r.text.substr(begin, end - begin) == spec.demos[i].label_text);
  }
}

TEST_CASE("specs with invalid markers or payloads are rejected") {
  PromptSpec spec = capitals_spec();

  spec.markers = {"Word:", "Word:"};
  CHECK_THROWS_AS(icl::validate_spec(spec), std::invalid_argument);
  spec.markers = {"Word", "Word:"};  // prefix of the other
  CHECK_THROWS_AS(icl::validate_spec(spec), std::invalid_argument);
  spec.markers = {"", "Label:"};
  CHECK_THROWS_AS(icl::validate_spec(spec), std::invalid_argument);
  spec.markers = {"Wo\nrd:", "Label:"};
  CHECK_THROWS_AS(icl::validate_spec(spec), std::invalid_argument);

  spec = capitals_spec();
  spec.test_input = "";
  CHECK_THROWS_AS(icl::validate_spec(spec), std::invalid_argument);

  spec = capitals_spec();
  spec.demos[0].input_text = "Fra\nnce";
  CHECK_THROWS_AS(icl::validate_spec(spec), std::invalid_argument);

  spec = capitals_spec();
  spec.demos[0].label_text = "see Label: above";
  CHECK_THROWS_AS(icl::validate_spec(spec), std::invalid_argument);

  CHECK_NOTHROW(icl::validate_spec(capitals_spec()));
}

TEST_CASE("parse of render restores the spec") {
  PromptSpec spec = capitals_spec();
  spec.demos.push_back({"Japan", "Tokyo"});
  spec.instruction = "Two lines of\ninstruction text.";

  PromptSpec back = icl::parse_rendered(icl::render(spec), spec.markers);
  CHECK(back.instruction == spec.instruction);
  CHECK(back.test_input == spec.test_input);
  REQUIRE(back.demos.size() == spec.demos.size());
  for (size_t i = 0; i < back.demos.size(); ++i) {
    CHECK(back.demos[i].input_text == spec.demos[i].input_text);
    CHECK(back.demos[i].label_text == spec.demos[i].label_text);
  }

  CHECK_THROWS_AS(icl::parse_rendered("no markers here at all", kWordMarkers),
                  std::invalid_argument);
  CHECK_THROWS_AS(icl::parse_rendered("Word: France\nLabel: Paris", kWordMarkers),
                  std::invalid_argument);  // ends on a filled label
}

TEST_CASE("label space construction rejects degenerate spaces") {
  LabelSpace space = LabelSpace::from_labels({"A", "B", "C"});
  CHECK(space.labels == std::vector<std::string>{"A", "B", "C"});
  CHECK(space.contains("B"));
  CHECK(!space.contains("D"));
  CHECK_THROWS_AS(LabelSpace::from_labels({"A", "B", "A", "C"}), std::invalid_argument);
  CHECK_THROWS_AS(LabelSpace::from_labels({"A", "A"}), std::invalid_argument);
  CHECK_THROWS_AS(LabelSpace::from_labels({"A", ""}), std::invalid_argument);
  CHECK_THROWS_AS(LabelSpace::from_labels({"only"}), std::invalid_argument);
}

TEST_CASE("standard prompts draw k dissimilar demos deterministically") {
  std::vector<Example> pool = word_pool();
  pool.push_back({"Italy", "Rome"});  // exact test match must be excluded

  PromptSpec a = icl::build_standard(pool, "Italy", 4, 9, kWordMarkers);
  PromptSpec b = icl::build_standard(pool, "Italy", 4, 9, kWordMarkers);
  PromptSpec c = icl::build_standard(pool, "Italy", 4, 10, kWordMarkers);

  CHECK(a.k() == 4);
  CHECK(icl::render(a) == icl::render(b));
  CHECK(icl::render(a) != icl::render(c));
  for (const Example& d : a.demos) {
    CHECK(d.input_text != "Italy");
    CHECK(icl::lexical_similarity(d.input_text, "Italy") < icl::DissimilarityCap{}.lexical);
  }

  CHECK_THROWS_AS(icl::build_standard(pool, "Italy", 100, 9, kWordMarkers),
                  std::runtime_error);
}

TEST_CASE("similar-test insertion plants the test input with the right label") {
  LabelSpace space = LabelSpace::from_labels({"Paris", "Rome", "Tokyo", "Ottawa"});
  PromptSpec base = icl::build_standard(word_pool(), "Italy", 3, 5, kWordMarkers);

  StableRng rng_correct(77);
  icl::SimilarInsertion correct =
      icl::insert_similar_test(base, "Rome", space, icl::InsertMode::correct, rng_correct);
  CHECK(correct.spec.k() == 4);
  CHECK(correct.inserted_label == "Rome");
  CHECK(correct.spec.demos[static_cast<size_t>(correct.position)].input_text == "Italy");
  CHECK(correct.spec.demos[static_cast<size_t>(correct.position)].label_text == "Rome");

  std::map<int, int> slot_counts;
  std::map<std::string, int> label_counts;
  StableRng rng(123);
  for (int t = 0; t < 1000; ++t) {
    icl::SimilarInsertion ins =
        icl::insert_similar_test(base, "Rome", space, icl::InsertMode::incorrect, rng);
    CHECK(ins.inserted_label != "Rome");
    ++slot_counts[ins.position];
    ++label_counts[ins.inserted_label];
  }
  REQUIRE(slot_counts.size() == 4);  // k+1 slots
  for (const auto& [slot, count] : slot_counts) {
    (void)slot;
    CHECK(count > 180);  // uniform expectation 250
    CHECK(count < 320);
  }
  REQUIRE(label_counts.size() == 3);  // all non-gold labels drawn
  for (const auto& [label, count] : label_counts) {
    (void)label;
    CHECK(count > 250);  // uniform expectation 333
    CHECK(count < 420);
  }
}

TEST_CASE("label randomization draws uniformly and leaves inputs alone") {
  PromptSpec base = icl::build_standard(word_pool(), "Italy", 6, 3, kWordMarkers);
  std::vector<std::string> labels = {"A", "B", "C"};

  StableRng rng(3);
  std::map<std::string, int> counts;
  for (int t = 0; t < 500; ++t) {
    PromptSpec randomized = icl::randomize_labels(base, labels, rng);
    REQUIRE(randomized.k() == base.k());
    for (int i = 0; i < base.k(); ++i) {
      CHECK(randomized.demos[static_cast<size_t>(i)].input_text ==
            base.demos[static_cast<size_t>(i)].input_text);
      ++counts[randomized.demos[static_cast<size_t>(i)].label_text];
    }
  }
  // 3000 draws over three labels; expectation 1000 each
  REQUIRE(counts.size() == 3);
  for (const std::string& l : labels) {
    CHECK(counts[l] > 850);
    CHECK(counts[l] < 1150);
  }

  PromptSpec empty;
  empty.markers = kWordMarkers;
  empty.test_input = "Italy";
  CHECK_THROWS_AS(icl::randomize_labels(empty, labels, rng), std::invalid_argument);
  CHECK_THROWS_AS(icl::randomize_labels(base, {}, rng), std::invalid_argument);
}

TEST_CASE("coverage prompts hold one demo per label in seeded order") {
  std::vector<std::pair<std::string, Example>> by_label = {
      {"joy", {"I smiled all day", "joy"}},
      {"sadness", {"I cried after the call", "sadness"}},
      {"anger", {"He slammed the door", "anger"}},
      {"fear", {"The hallway felt wrong", "fear"}}};

  PromptSpec a = icl::build_label_coverage(by_label, "A new message arrived", {}, 11);
  PromptSpec b = icl::build_label_coverage(by_label, "A new message arrived", {}, 11);
  CHECK(icl::render(a) == icl::render(b));
  REQUIRE(a.k() == 4);

  std::multiset<std::string> seen;
  for (const Example& d : a.demos) seen.insert(d.label_text);
  CHECK(seen == std::multiset<std::string>{"anger", "fear", "joy", "sadness"});

  bool some_order_differs = false;
  for (uint64_t s = 0; s < 8 && !some_order_differs; ++s)
    some_order_differs =
        icl::render(icl::build_label_coverage(by_label, "A new message arrived", {}, s)) !=
        icl::render(a);
  CHECK(some_order_differs);

  by_label.push_back({"joy", {"Another joyful one", "joy"}});
  CHECK_THROWS_AS(icl::build_label_coverage(by_label, "x", {}, 0), std::invalid_argument);
}

TEST_CASE("triplet prompts interleave l/s/b copies") {
  icl::TripletCorpusEntry entry;
  entry.test_sample = {"The plot was moving and well acted", "positive"};
  entry.semantic = {"A touching story told with real skill", "positive"};
  entry.lexical = {"The plot was moving and well acted poorly", "negative"};
  entry.baseline = {"The delivery van arrived before noon", "positive"};

  PromptSpec spec = icl::build_triplet_prompt(entry, 3, 21, {});
  CHECK(spec.k() == 9);
  CHECK(spec.test_input == entry.test_sample.input_text);

  std::multiset<std::string> labels;
  std::map<std::string, std::string> label_to_input;
  for (const Example& d : spec.demos) {
    labels.insert(d.label_text);
    label_to_input[d.label_text] = d.input_text;
  }
  CHECK(labels == std::multiset<std::string>{"b", "b", "b", "l", "l", "l", "s", "s", "s"});
  CHECK(label_to_input["l"] == entry.lexical.input_text);
  CHECK(label_to_input["s"] == entry.semantic.input_text);
  CHECK(label_to_input["b"] == entry.baseline.input_text);

  CHECK(icl::build_triplet_prompt(entry, 1, 0, {}).k() == 3);
  CHECK_THROWS_AS(icl::build_triplet_prompt(entry, 0, 0, {}), std::invalid_argument);
}

TEST_CASE("instruction prepending replaces any existing instruction") {
  PromptSpec spec = capitals_spec();
  PromptSpec once = icl::prepend_instruction(spec, "First.");
  PromptSpec twice = icl::prepend_instruction(once, "Second.");
  CHECK(twice.instruction == "Second.");
  CHECK(icl::render(twice).rfind("Second.\nWord:", 0) == 0);
  CHECK_THROWS_AS(icl::prepend_instruction(spec, ""), std::invalid_argument);
}

TEST_CASE("label positions land on each label's final sub-token") {
  Tokenizer tok({" France", " Paris", " Italy", " Japan", " Tokyo", "Word", "Label"});
  PromptSpec spec = capitals_spec();
  spec.demos.push_back({"Japan", "Tokyo"});

  icl::TokenSequence tokens = tok.tokenize(icl::render(spec));
  icl::LabelPositions anchors = icl::locate_label_positions(spec, tokens, tok);

  REQUIRE(anchors.demo_label_positions.size() == 2);
  CHECK(tok.token_text(tokens.token_ids[static_cast<size_t>(anchors.demo_label_positions[0])]) ==
        " Paris");
  CHECK(tok.token_text(tokens.token_ids[static_cast<size_t>(anchors.demo_label_positions[1])]) ==
        " Tokyo");
  CHECK(anchors.final_position == static_cast<int>(tokens.token_ids.size()) - 1);
  CHECK(tok.token_text(tokens.token_ids[static_cast<size_t>(anchors.final_position)]) == ":");

  // multi-token label: " Ottawa" is out of vocabulary and ends in byte tokens
  PromptSpec multi = capitals_spec();
  multi.demos[0].label_text = "Ottawa";
  icl::TokenSequence mt = tok.tokenize(icl::render(multi));
  icl::LabelPositions manchors = icl::locate_label_positions(multi, mt, tok);
  REQUIRE(manchors.demo_label_positions.size() == 1);
  CHECK(tok.token_text(mt.token_ids[static_cast<size_t>(manchors.demo_label_positions[0])]) ==
        "a");

  icl::TokenSequence other = tok.tokenize("Word: France");
  CHECK_THROWS_AS(icl::locate_label_positions(spec, other, tok), std::invalid_argument);
}

TEST_CASE("spec json round trip preserves every field") {
  PromptSpec spec = capitals_spec();
  spec.instruction = "Answer briefly.";
  spec.seed = 99;
  PromptSpec back = icl::spec_from_json(icl::spec_to_json(spec));
  CHECK(back.instruction == spec.instruction);
  CHECK(back.seed == spec.seed);
  CHECK(back.markers.input_marker == spec.markers.input_marker);
  CHECK(back.markers.label_marker == spec.markers.label_marker);
  CHECK(icl::render(back) == icl::render(spec));
}

TEST_CASE("fuzzed specs survive render, parse, and relocation") {
  std::vector<std::string> inputs = {"France", "Italy", "Japan", "Canada", "Germany",
                                     "Spain", "Norway", "Peru", "Kenya", "Chile"};
  std::vector<std::string> labels = {"Paris", "Rome", "Tokyo", "Ottawa", "Berlin",
                                     "Madrid", "Oslo", "Lima", "Nairobi", "Santiago"};
  StableRng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    PromptSpec spec;
    spec.markers = rng.below(2) ? kWordMarkers : Markers{"Sentence:", "Label:"};
    if (rng.below(3) == 0) spec.instruction = "Pick the matching label.";
    int k = static_cast<int>(rng.below(5));
    for (int i = 0; i < k; ++i)
      spec.demos.push_back({inputs[rng.below(inputs.size())], labels[rng.below(labels.size())]});
    spec.test_input = inputs[rng.below(inputs.size())];

    PromptSpec back = icl::parse_rendered(icl::render(spec), spec.markers);
    CHECK(icl::render(back) == icl::render(spec));
    CHECK(back.demos.size() == spec.demos.size());
  }
}
