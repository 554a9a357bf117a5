#include "icl/prompt.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "icl/similarity.hpp"

namespace icl {

LabelSpace LabelSpace::from_labels(std::vector<std::string> labels) {
  std::set<std::string> seen;
  for (const std::string& l : labels) {
    if (l.empty()) throw std::invalid_argument("label space: empty label");
    if (!seen.insert(l).second)
      throw std::invalid_argument("label space: duplicate label: " + l);
  }
  if (labels.size() < 2) throw std::invalid_argument("label space: need at least 2 labels");
  return LabelSpace{std::move(labels)};
}

bool LabelSpace::contains(const std::string& label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

namespace {

void check_payload(const std::string& text, const Markers& m, const char* what,
                   bool allow_newline = false) {
  if (text.empty()) throw std::invalid_argument(std::string("prompt spec: empty ") + what);
  if (!allow_newline && text.find('\n') != std::string::npos)
    throw std::invalid_argument(std::string("prompt spec: ") + what + " contains a newline");
  if (text.find(m.input_marker) != std::string::npos ||
      text.find(m.label_marker) != std::string::npos)
    throw std::invalid_argument(std::string("prompt spec: ") + what +
                                " contains a marker string");
}

// render and optionally record the [begin, end) byte range of each demo label
std::string render_impl(const PromptSpec& spec,
                        std::vector<std::pair<size_t, size_t>>* label_ranges) {
  std::string out;
  if (!spec.instruction.empty()) {
    out += spec.instruction;
    out += '\n';
  }
  for (const Example& demo : spec.demos) {
    out += spec.markers.input_marker;
    out += ' ';
    out += demo.input_text;
    out += '\n';
    out += spec.markers.label_marker;
    out += ' ';
    size_t begin = out.size();
    out += demo.label_text;
    if (label_ranges) label_ranges->emplace_back(begin, out.size());
    out += '\n';
  }
  out += spec.markers.input_marker;
  out += ' ';
  out += spec.test_input;
  out += '\n';
  out += spec.markers.label_marker;
  out += ' ';
  return out;
}

}  // namespace

void validate_spec(const PromptSpec& spec) {
  const Markers& m = spec.markers;
  if (m.input_marker.empty() || m.label_marker.empty())
    throw std::invalid_argument("prompt spec: empty marker");
  if (m.input_marker.find('\n') != std::string::npos ||
      m.label_marker.find('\n') != std::string::npos)
    throw std::invalid_argument("prompt spec: marker contains a newline");
  if (m.input_marker == m.label_marker ||
      m.input_marker.rfind(m.label_marker, 0) == 0 ||
      m.label_marker.rfind(m.input_marker, 0) == 0)
    throw std::invalid_argument("prompt spec: markers must be distinct and prefix-free");
  if (!spec.instruction.empty())
    check_payload(spec.instruction, m, "instruction", /*allow_newline=*/true);
  for (const Example& demo : spec.demos) {
    check_payload(demo.input_text, m, "demo input");
    check_payload(demo.label_text, m, "demo label");
  }
  check_payload(spec.test_input, m, "test input");
}

std::string render(const PromptSpec& spec) {
  validate_spec(spec);
  return render_impl(spec, nullptr);
}

RenderedSpec render_with_anchors(const PromptSpec& spec) {
  validate_spec(spec);
  RenderedSpec out;
  out.text = render_impl(spec, &out.label_ranges);
  return out;
}

PromptSpec parse_rendered(const std::string& text, const Markers& markers) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (true) {
    size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }

  const std::string input_prefix = markers.input_marker + " ";
  const std::string label_prefix = markers.label_marker + " ";
  auto strip_trailing_spaces = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };

  size_t first_input = lines.size();
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].rfind(input_prefix, 0) == 0) {
      first_input = i;
      break;
    }
  }
  if (first_input == lines.size())
    throw std::invalid_argument("parse_rendered: no input marker line found");

  PromptSpec spec;
  spec.markers = markers;
  for (size_t i = 0; i < first_input; ++i) {
    if (i) spec.instruction += '\n';
    spec.instruction += lines[i];
  }

  size_t i = first_input;
  while (i < lines.size()) {
    if (lines[i].rfind(input_prefix, 0) != 0)
      throw std::invalid_argument("parse_rendered: expected input marker at line " +
                                  std::to_string(i + 1));
    std::string input = lines[i].substr(input_prefix.size());
    if (i + 1 >= lines.size())
      throw std::invalid_argument("parse_rendered: input line without label line");
    const std::string& label_line = lines[i + 1];
    if (label_line.rfind(markers.label_marker, 0) != 0)
      throw std::invalid_argument("parse_rendered: expected label marker at line " +
                                  std::to_string(i + 2));
    std::string label = strip_trailing_spaces(label_line.substr(markers.label_marker.size()));
    if (!label.empty() && label[0] == ' ') label.erase(0, 1);
    if (i + 2 == lines.size()) {
      if (!label.empty())
        throw std::invalid_argument("parse_rendered: text does not end with a bare label marker");
      spec.test_input = input;
      return spec;
    }
    spec.demos.push_back({std::move(input), std::move(label)});
    i += 2;
  }
  throw std::invalid_argument("parse_rendered: truncated prompt");
}

PromptSpec build_standard(const std::vector<Example>& pool, const std::string& test_input,
                          int k, uint64_t seed, const Markers& markers,
                          const DissimilarityCap& cap, const Embedder* embedder) {
  if (k < 0) throw std::invalid_argument("build_standard: negative k");
  std::vector<const Example*> eligible;
  for (const Example& ex : pool) {
    if (ex.input_text == test_input) continue;
    if (lexical_similarity(ex.input_text, test_input) >= cap.lexical) continue;
    if (embedder && semantic_similarity(ex.input_text, test_input, *embedder) >= cap.semantic)
      continue;
    eligible.push_back(&ex);
  }
  if (static_cast<int>(eligible.size()) < k)
    throw std::runtime_error("build_standard: pool has only " +
                             std::to_string(eligible.size()) +
                             " dissimilar examples, need " + std::to_string(k));
  StableRng rng(seed);
  rng.shuffle(eligible);

  PromptSpec spec;
  spec.markers = markers;
  spec.test_input = test_input;
  spec.seed = seed;
  for (int i = 0; i < k; ++i) spec.demos.push_back(*eligible[static_cast<size_t>(i)]);
  validate_spec(spec);
  return spec;
}

SimilarInsertion insert_similar_test(const PromptSpec& spec, const std::string& gold_label,
                                     const LabelSpace& space, InsertMode mode, StableRng& rng) {
  std::string label;
  if (mode == InsertMode::correct) {
    label = gold_label;
  } else {
    std::vector<std::string> non_gold;
    for (const std::string& l : space.labels)
      if (l != gold_label) non_gold.push_back(l);
    if (non_gold.empty())
      throw std::invalid_argument("insert_similar_test: no label differs from gold");
    label = rng.pick(non_gold);
  }
  SimilarInsertion out;
  out.spec = spec;
  out.inserted_label = label;
  out.position = static_cast<int>(rng.below(spec.demos.size() + 1));
  out.spec.demos.insert(out.spec.demos.begin() + out.position,
                        Example{spec.test_input, label});
  validate_spec(out.spec);
  return out;
}

PromptSpec randomize_labels(const PromptSpec& spec, const std::vector<std::string>& labels,
                            StableRng& rng) {
  if (spec.demos.empty()) throw std::invalid_argument("randomize_labels: no demos");
  if (labels.empty()) throw std::invalid_argument("randomize_labels: empty label space");
  PromptSpec out = spec;
  for (Example& demo : out.demos) demo.label_text = labels[rng.below(labels.size())];
  validate_spec(out);
  return out;
}

PromptSpec build_label_coverage(
    const std::vector<std::pair<std::string, Example>>& examples_by_label,
    const std::string& test_input, const Markers& markers, uint64_t order_seed) {
  std::set<std::string> seen;
  for (const auto& [label, ex] : examples_by_label) {
    (void)ex;
    if (!seen.insert(label).second)
      throw std::invalid_argument("build_label_coverage: duplicate label: " + label);
  }
  PromptSpec spec;
  spec.markers = markers;
  spec.test_input = test_input;
  spec.seed = order_seed;
  for (const auto& [label, ex] : examples_by_label)
    spec.demos.push_back({ex.input_text, label});
  StableRng rng(order_seed);
  rng.shuffle(spec.demos);
  validate_spec(spec);
  return spec;
}

PromptSpec build_triplet_prompt(const TripletCorpusEntry& entry, int repeats, uint64_t order_seed,
                                const Markers& markers) {
  if (repeats < 1) throw std::invalid_argument("build_triplet_prompt: repeats must be >= 1");
  PromptSpec spec;
  spec.markers = markers;
  spec.test_input = entry.test_sample.input_text;
  spec.seed = order_seed;
  for (int r = 0; r < repeats; ++r) {
    spec.demos.push_back({entry.lexical.input_text, "l"});
    spec.demos.push_back({entry.semantic.input_text, "s"});
    spec.demos.push_back({entry.baseline.input_text, "b"});
  }
  StableRng rng(order_seed);
  rng.shuffle(spec.demos);
  validate_spec(spec);
  return spec;
}

PromptSpec prepend_instruction(const PromptSpec& spec, const std::string& instruction) {
  if (instruction.empty()) throw std::invalid_argument("prepend_instruction: empty instruction");
  PromptSpec out = spec;
  out.instruction = instruction;  // replace semantics
  validate_spec(out);
  return out;
}

LabelPositions locate_label_positions(const PromptSpec& spec, const TokenSequence& tokens,
                                      const Tokenizer& tok) {
  validate_spec(spec);
  std::vector<std::pair<size_t, size_t>> label_ranges;
  std::string text = Tokenizer::normalize(render_impl(spec, &label_ranges));
  if (tokens.token_ids.empty())
    throw std::invalid_argument("locate_label_positions: empty token sequence");

  // token byte spans over the normalized render
  std::vector<size_t> ends;
  ends.reserve(tokens.token_ids.size());
  size_t cursor = 0;
  for (int id : tokens.token_ids) {
    cursor += tok.token_text(id).size();
    ends.push_back(cursor);
  }
  if (cursor != text.size() || tok.detokenize(tokens.token_ids) != text)
    throw std::invalid_argument(
        "locate_label_positions: token sequence does not match the rendered prompt");

  LabelPositions out;
  out.final_position = static_cast<int>(tokens.token_ids.size()) - 1;
  for (const auto& [begin, end] : label_ranges) {
    // the token covering the label's last byte is its final sub-token
    auto it = std::upper_bound(ends.begin(), ends.end(), end - 1);
    if (it == ends.end())
      throw std::invalid_argument("locate_label_positions: label range beyond token stream");
    out.demo_label_positions.push_back(static_cast<int>(it - ends.begin()));
    (void)begin;
  }
  return out;
}

nlohmann::json spec_to_json(const PromptSpec& spec) {
  nlohmann::json demos = nlohmann::json::array();
  for (const Example& d : spec.demos)
    demos.push_back({{"input", d.input_text}, {"label", d.label_text}});
  return nlohmann::json{{"instruction", spec.instruction},
                        {"demos", demos},
                        {"input_marker", spec.markers.input_marker},
                        {"label_marker", spec.markers.label_marker},
                        {"test_input", spec.test_input},
                        {"seed", spec.seed}};
}

PromptSpec spec_from_json(const nlohmann::json& j) {
  PromptSpec spec;
  spec.instruction = j.value("instruction", "");
  spec.markers.input_marker = j.value("input_marker", "Sentence:");
  spec.markers.label_marker = j.value("label_marker", "Label:");
  spec.test_input = j.at("test_input").get<std::string>();
  spec.seed = j.value("seed", uint64_t{0});
  if (j.contains("demos"))
    for (const nlohmann::json& d : j.at("demos"))
      spec.demos.push_back({d.at("input").get<std::string>(), d.at("label").get<std::string>()});
  validate_spec(spec);
  return spec;
}

}  // namespace icl
