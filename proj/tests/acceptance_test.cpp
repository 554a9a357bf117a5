#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "icl/coordinate.hpp"
#include "icl/dataset.hpp"
#include "icl/evaluator.hpp"
#include "icl/lens.hpp"
#include "icl/model.hpp"
#include "icl/prompt.hpp"
#include "icl/rng.hpp"
#include "icl/similarity.hpp"
#include "icl/tokenizer.hpp"
#include "test_util.hpp"

using namespace icl;
using icl_test::repo_path;

namespace {

// Every criterion reports exactly one line; a FAIL line also fails the case.
void report(int index, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[criterion %2d] %s: %s%s%s\n", index, name.c_str(), ok ? "PASS" : "FAIL",
              detail.empty() ? "" : " | ", detail.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(ok, "criterion ", index, " (", name, "): ", detail);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

const GptModel& reference_model() {
  static GptModel model = [] {
    std::string path = repo_path("models/picolm-v1.iclmodel");
    REQUIRE_MESSAGE(std::filesystem::exists(path), "reference model missing: " << path);
    return GptModel::load(path);
  }();
  return model;
}

const MeanInputEmbedder& reference_embedder() {
  static MeanInputEmbedder embedder(reference_model());
  return embedder;
}

const DatasetBundle& dataset(const std::string& id) {
  static std::map<std::string, DatasetBundle> cache;
  auto it = cache.find(id);
  if (it == cache.end()) it = cache.emplace(id, load_dataset(id, repo_path("data"))).first;
  return it->second;
}

DissimilarityCap cap_for(const DatasetBundle& ds) {
  return ds.is_triplet_corpus() ? DissimilarityCap{0.6, 0.95} : DissimilarityCap{};
}

double raw_pir_of(const PromptSpec& spec, const TaskToken& token) {
  Thresholds th;
  return diagnose(spec, token, reference_model(), nullptr, th).coord.raw_pir;
}

std::vector<std::string> fuzz_words(StableRng& rng, int lo, int hi) {
  static const std::vector<std::string> bank = {
      "alpha", "bravo", "cedar", "delta", "ember", "frost", "grove", "harbor", "indigo",
      "jasper", "kestrel", "lumen", "meadow", "nectar", "onyx",  "pearl", "quartz",
      "raven", "slate",  "tundra", "umber", "velvet", "willow", "xenon", "yarrow", "zephyr"};
  int n = rng.range(lo, hi);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(bank[static_cast<size_t>(rng.below(bank.size()))]);
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

TEST_CASE("rank agreement with a brute-force sort oracle") {
  auto t0 = std::chrono::steady_clock::now();
  StableRng rng(0xAC01);
  int checked = 0, agreed = 0;
  for (int i = 0; i < 10000; ++i) {
    int n = rng.range(10, 50000);
    bool quantized = rng.below(4) == 0;  // force heavy ties in a quarter of cases
    std::vector<float> logits(static_cast<size_t>(n));
    for (auto& v : logits) {
      v = quantized ? static_cast<float>(rng.range(-8, 8)) * 0.5f
                    : static_cast<float>(rng.real01() * 20.0 - 10.0);
    }
    int target = rng.range(0, n - 1);
    std::vector<float> sorted = logits;
    std::sort(sorted.begin(), sorted.end(), std::greater<float>());
    auto pos = std::lower_bound(sorted.begin(), sorted.end(), logits[static_cast<size_t>(target)],
                                std::greater<float>());
    int oracle = static_cast<int>(pos - sorted.begin()) + 1;
    agreed += rank_of(logits, target) == oracle;
    ++checked;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(1, "rank oracle", agreed == checked && secs < 60.0,
         fmt("%d/%d vectors agree, %.1fs", agreed, checked, secs));
}

TEST_CASE("peak-inverse-rank bounds, peak attainment, and append monotonicity") {
  auto t0 = std::chrono::steady_clock::now();
  StableRng rng(0xAC02);
  bool ok = true;
  for (int i = 0; i < 10000 && ok; ++i) {
    int vocab = rng.range(2, 50000);
    int layers = rng.range(1, 40);
    RankProfile profile;
    profile.position = 0;
    for (int l = 0; l < layers; ++l) profile.ranks.push_back(rng.range(1, vocab));
    PIRValue v = pir(profile);

    int min_rank = *std::min_element(profile.ranks.begin(), profile.ranks.end());
    ok = ok && v.value >= 1.0 / vocab && v.value <= 1.0;
    ok = ok && v.peak_layer >= 1 && v.peak_layer <= layers;
    ok = ok && profile.ranks[static_cast<size_t>(v.peak_layer - 1)] == min_rank;
    ok = ok && v.value == 1.0 / min_rank;
    for (int l = 1; l < v.peak_layer; ++l)
      ok = ok && profile.ranks[static_cast<size_t>(l - 1)] > min_rank;

    RankProfile extended = profile;
    int extra = rng.range(1, 5);
    for (int l = 0; l < extra; ++l) extended.ranks.push_back(rng.range(1, vocab));
    ok = ok && pir(extended).value >= v.value;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(2, "pir properties", ok && secs < 60.0, fmt("10000 profiles, %.1fs", secs));
}

TEST_CASE("render/parse round trip and builder invariants under fuzzing") {
  auto t0 = std::chrono::steady_clock::now();
  StableRng rng(0xAC03);
  bool ok = true;
  for (int i = 0; i < 1000 && ok; ++i) {
    Markers markers = rng.below(2) ? Markers{"Word:", "Label:"} : Markers{"Sentence:", "Label:"};

    // round trip
    PromptSpec spec;
    spec.markers = markers;
    if (rng.below(2)) spec.instruction = join_words(fuzz_words(rng, 2, 6));
    int k = rng.range(0, 8);
    for (int d = 0; d < k; ++d)
      spec.demos.push_back({join_words(fuzz_words(rng, 1, 5)), join_words(fuzz_words(rng, 1, 3))});
    spec.test_input = join_words(fuzz_words(rng, 1, 5));
    PromptSpec back = parse_rendered(render(spec), markers);
    ok = ok && back.instruction == spec.instruction && back.test_input == spec.test_input &&
         back.demos.size() == spec.demos.size();
    for (size_t d = 0; ok && d < spec.demos.size(); ++d)
      ok = spec.demos[d].input_text == back.demos[d].input_text &&
           spec.demos[d].label_text == back.demos[d].label_text;

    // label-coverage permutation
    int n_labels = rng.range(2, 6);
    std::vector<std::string> labels;
    for (int l = 0; l < n_labels; ++l) labels.push_back("label" + std::to_string(l));
    LabelSpace space = LabelSpace::from_labels(labels);
    std::vector<std::pair<std::string, Example>> by_label;
    for (const auto& lab : labels)
      by_label.push_back({lab, {join_words(fuzz_words(rng, 1, 4)), lab}});
    PromptSpec cov = build_label_coverage(by_label, join_words(fuzz_words(rng, 1, 4)), markers,
                                          rng.next_u64());
    std::vector<std::string> got;
    for (const auto& d : cov.demos) got.push_back(d.label_text);
    std::sort(got.begin(), got.end());
    std::vector<std::string> want = labels;
    std::sort(want.begin(), want.end());
    ok = ok && got == want;

    // Similar(T)-incorrect inserts the test input with a non-gold label
    const std::string gold = labels[static_cast<size_t>(rng.below(labels.size()))];
    StableRng ins_rng(rng.next_u64());
    SimilarInsertion ins = insert_similar_test(cov, gold, space, InsertMode::incorrect, ins_rng);
    ok = ok && ins.inserted_label != gold && space.contains(ins.inserted_label);
    ok = ok && ins.position >= 0 && ins.position < static_cast<int>(ins.spec.demos.size());
    const Example& planted = ins.spec.demos[static_cast<size_t>(ins.position)];
    ok = ok && planted.input_text == cov.test_input && planted.label_text == ins.inserted_label;
    ok = ok && ins.spec.demos.size() == cov.demos.size() + 1;

    // triplet prompt structure: 9 demos, three of each of l/s/b
    TripletCorpusEntry entry;
    entry.test_sample = {join_words(fuzz_words(rng, 2, 5)), "gold"};
    entry.semantic = {join_words(fuzz_words(rng, 2, 5)), "gold"};
    entry.lexical = {join_words(fuzz_words(rng, 2, 5)), "offgold"};
    entry.baseline = {join_words(fuzz_words(rng, 2, 5)), "offgold"};
    PromptSpec tri = build_triplet_prompt(entry, 3, rng.next_u64(), markers);
    ok = ok && tri.demos.size() == 9 && tri.test_input == entry.test_sample.input_text;
    int nl = 0, ns = 0, nb = 0;
    for (const auto& d : tri.demos) {
      if (d.label_text == "l") ++nl, ok = ok && d.input_text == entry.lexical.input_text;
      else if (d.label_text == "s") ++ns, ok = ok && d.input_text == entry.semantic.input_text;
      else if (d.label_text == "b") ++nb, ok = ok && d.input_text == entry.baseline.input_text;
      else ok = false;
    }
    ok = ok && nl == 3 && ns == 3 && nb == 3;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(3, "prompt round trip", ok && secs < 60.0, fmt("1000 fuzz cases, %.1fs", secs));
}

TEST_CASE("one-shot pir separates correct labels from irrelevant labels") {
  const GptModel& model = reference_model();
  const DatasetBundle& ds = dataset("capitals");
  TaskToken token = resolve_task_token(model.tokenizer(), ds.task_token, ds.sub_token_policy);

  double sum_correct = 0.0, sum_irrelevant = 0.0;
  const int n = 24;
  for (int i = 0; i < n; ++i) {
    const Example& test = ds.examples[static_cast<size_t>(i)];
    const Example& demo = ds.examples[static_cast<size_t>((i + 7) % ds.examples.size())];
    PromptSpec spec;
    spec.markers = ds.markers;
    spec.demos.push_back(demo);
    spec.test_input = test.input_text;
    sum_correct += raw_pir_of(spec, token);
    spec.demos[0].label_text = i % 2 == 0 ? "foo" : "bar";
    sum_irrelevant += raw_pir_of(spec, token);
  }
  double mean_correct = sum_correct / n, mean_irrelevant = sum_irrelevant / n;
  bool ok = mean_correct >= 0.5 && mean_correct >= 10.0 * mean_irrelevant;
  report(4, "pir separation", ok,
         fmt("%d one-shot prompts: correct mean %.3f, foo/bar mean %.4f, ratio %.1fx", n,
             mean_correct, mean_irrelevant,
             mean_correct / std::max(mean_irrelevant, 1e-12)));
}

TEST_CASE("task-recognition split across word and sentence corpora") {
  const GptModel& model = reference_model();
  Thresholds th;
  auto majority_side = [&](const std::string& id, bool expect_above, std::string& detail) {
    const DatasetBundle& ds = dataset(id);
    TaskToken token = resolve_task_token(model.tokenizer(), ds.task_token, ds.sub_token_policy);
    int above = 0;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
      const Example& test = ds.examples[static_cast<size_t>(i) % ds.examples.size()];
      PromptSpec spec = build_standard(ds.examples, test.input_text, 1,
                                       mix_seed(0xAC05, static_cast<uint64_t>(i)), ds.markers,
                                       cap_for(ds), nullptr);
      above += raw_pir_of(spec, token) > th.tau_y;
    }
    int hits = expect_above ? above : n - above;
    detail += fmt("%s %d/%d %s; ", id.c_str(), hits, n, expect_above ? "above" : "below");
    return hits > n / 2;
  };
  std::string detail;
  bool ok = majority_side("capitals", true, detail);
  ok = majority_side("colors", true, detail) && ok;
  ok = majority_side("triplets-trec", false, detail) && ok;
  ok = majority_side("triplets-emo", false, detail) && ok;
  report(5, "task-recognition split", ok, detail + fmt("tau_y %.2f", th.tau_y));
}

TEST_CASE("label-coverage prompts put the most predictions on the first demo") {
  const DatasetBundle& ds = dataset("triplets-emo");
  PositionalHistogram hist = position_preference(ds, reference_model(), kDefaultSeeds, -1);
  int64_t total = hist.total();
  bool ok = total >= 100;
  std::string shares;
  for (size_t p = 0; p < hist.counts.size(); ++p) {
    if (p > 0) ok = ok && hist.counts[0] > hist.counts[p];
    shares += fmt("%s%.2f", p ? "/" : "", static_cast<double>(hist.counts[p]) / total);
  }
  report(6, "positional bias", ok,
         fmt("%lld samples, shares by position %s, other %.2f", static_cast<long long>(total),
             shares.c_str(), static_cast<double>(hist.other_count) / total));
}

TEST_CASE("planted similar-incorrect labels are copied at k=12") {
  bool ok = true;
  std::string detail;
  for (const char* id : {"triplets-trec", "triplets-emo"}) {
    const DatasetBundle& ds = dataset(id);
    double rate = copy_rate_run(ds, reference_model(), 12, kDefaultSeeds, -1);
    double baseline = 1.0 / static_cast<double>(ds.label_space.labels.size());
    ok = ok && rate >= 3.0 * baseline;
    detail += fmt("%s rate %.2f vs 3x-uniform %.2f; ", id, rate, 3.0 * baseline);
  }
  report(7, "copy rate", ok, detail);
}

TEST_CASE("one demonstration beats the instruction, extra shots add little") {
  const GptModel& model = reference_model();
  const MeanInputEmbedder& embedder = reference_embedder();
  bool ok = true;
  std::string detail;
  for (const char* id : {"capitals", "colors"}) {
    const DatasetBundle& ds = dataset(id);
    auto acc_at = [&](int shots) {
      auto builder = [&, shots](int i, const Example& ex, uint64_t seed) {
        if (shots == 0) {
          PromptSpec spec;
          spec.markers = ds.markers;
          spec.test_input = ex.input_text;
          spec.instruction = ds.instruction;
          return spec;
        }
        return build_standard(ds.examples, ex.input_text, shots,
                              mix_seed(seed, static_cast<uint64_t>(i)), ds.markers, cap_for(ds),
                              &embedder);
      };
      return accuracy(ds, builder, kDefaultSeeds, model, -1,
                      std::to_string(shots) + "_shot") .mean;
    };
    double a0 = acc_at(0), a1 = acc_at(1), a6 = acc_at(6);
    ok = ok && a1 - a0 > 0.0 && a6 - a1 < a1 - a0;
    detail += fmt("%s acc 0/1/6-shot %.2f/%.2f/%.2f; ", id, a0, a1, a6);
  }
  report(8, "diminishing returns", ok, detail);
}

TEST_CASE("the task instruction lifts pir on the case-study prompt") {
  const GptModel& model = reference_model();
  const DatasetBundle& ds = dataset("triplets-trec");
  TaskToken token = resolve_task_token(model.tokenizer(), ds.task_token, ds.sub_token_policy);

  PromptSpec spec;
  spec.markers = {"Question:", "Label:"};
  spec.demos.push_back({"Who killed Gandhi?", "Human"});
  spec.test_input = "What is a fear of shadows?";

  auto measure = [&](const PromptSpec& s) {
    TokenSequence tokens = model.tokenize(render(s));
    LabelPositions anchors = locate_label_positions(s, tokens, model.tokenizer());
    CaptureRequest req;
    req.positions = anchors.demo_label_positions;
    CaptureResult capture = model.forward_capture(tokens, req);
    return pir(rank_profile(capture, model, anchors.demo_label_positions.at(0), token));
  };
  PIRValue without = measure(spec);
  PIRValue with = measure(prepend_instruction(spec, ds.instruction));
  bool ok = with.value > without.value && with.value >= 1.0 / 20.0;
  report(9, "instruction remedy", ok,
         fmt("pir with %.3f (layer %d) vs without %.3f (layer %d)", with.value, with.peak_layer,
             without.value, without.peak_layer));
}

TEST_CASE("role tokens peak at subject, verb, object of the final label sentence") {
  const GptModel& model = reference_model();
  const DatasetBundle& ds = dataset("svo-translation");

  PromptSpec spec;
  spec.markers = ds.markers;
  for (size_t i = 0; i + 1 < ds.examples.size(); ++i) spec.demos.push_back(ds.examples[i]);
  spec.test_input = ds.examples.back().input_text;

  RenderedSpec rendered = render_with_anchors(spec);
  std::vector<size_t> offsets;
  TokenSequence tokens = model.tokenizer().tokenize_with_offsets(rendered.text, &offsets);
  auto [begin, end] = rendered.label_ranges.back();
  std::vector<int> positions;
  std::vector<std::string> texts;
  for (size_t t = 0; t < offsets.size(); ++t) {
    size_t tok_begin = offsets[t];
    size_t tok_end = t + 1 < offsets.size() ? offsets[t + 1] : rendered.text.size();
    if (tok_end > begin && tok_begin < end) {
      positions.push_back(static_cast<int>(t));
      texts.push_back(model.tokenizer().token_text(tokens.token_ids[t]));
    }
  }
  REQUIRE(!positions.empty());

  CaptureRequest req;
  req.positions = positions;
  CaptureResult capture = model.forward_capture(tokens, req);

  std::vector<int> best_pos;
  std::string detail;
  for (const char* surface : {"subject", "verb", "object"}) {
    TaskToken target = resolve_task_token(model.tokenizer(), surface);
    std::vector<PIRValue> sweep = pir_sweep(capture, model, positions, target);
    size_t best = 0;
    std::string curve;
    for (size_t i = 0; i < sweep.size(); ++i) {
      if (sweep[i].value > sweep[best].value) best = i;
      curve += fmt("%s%.3f", i ? " " : "", sweep[i].value);
    }
    best_pos.push_back(positions[best]);
    detail += fmt("%s->'%s' [%s]; ", surface, texts[best].c_str(), curve.c_str());
    std::printf("    curve %s over tokens of \"%s\": %s\n", surface,
                ds.examples[ds.examples.size() - 2].label_text.c_str(), curve.c_str());
  }
  bool ok = best_pos[0] < best_pos[1] && best_pos[1] < best_pos[2];
  report(10, "generation sweep", ok, detail);
}
