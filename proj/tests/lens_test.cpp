#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "icl/lens.hpp"
#include "icl/model.hpp"
#include "icl/rng.hpp"
#include "test_util.hpp"

using icl::PIRValue;
using icl::RankProfile;
using icl::TaskToken;
using icl_test::make_toy_model;

namespace {

// brute-force oracle: sort descending, rank = first slot whose logit equals
// the target's (ties share the best slot)
int rank_by_sort(const std::vector<float>& logits, int id) {
  std::vector<float> sorted = logits;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  auto it = std::find(sorted.begin(), sorted.end(), logits[id]);
  return static_cast<int>(it - sorted.begin()) + 1;
}

RankProfile profile_of(std::vector<int> ranks) {
  RankProfile p;
  p.target = {"x", 300, icl::SubTokenPolicy::first_subtoken};
  p.position = 0;
  p.ranks = std::move(ranks);
  return p;
}

}  // namespace

TEST_CASE("rank counts strictly greater logits only") {
  std::vector<float> logits = {3.0f, 5.0f, 5.0f, 1.0f};
  CHECK(icl::rank_of(logits, 1) == 1);
  CHECK(icl::rank_of(logits, 2) == 1);
  CHECK(icl::rank_of(logits, 0) == 3);
  CHECK(icl::rank_of(logits, 3) == 4);

  std::vector<float> flat(10, 2.5f);
  CHECK(icl::rank_of(flat, 7) == 1);

  std::vector<float> peak = {0.0f, 9.0f, 1.0f};
  CHECK(icl::rank_of(peak, 1) == 1);

  CHECK_THROWS_AS(icl::rank_of(logits, 4), std::out_of_range);
  CHECK_THROWS_AS(icl::rank_of(logits, -1), std::out_of_range);
}

TEST_CASE("rank matches the brute-force sort oracle on random vectors") {
  icl::StableRng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    size_t n = 10 + rng.below(200);
    std::vector<float> logits(n);
    for (auto& v : logits)
      v = static_cast<float>(rng.real01() * 10.0 - 5.0);
    if (trial % 3 == 0)  // force ties
      for (size_t i = 0; i + 1 < n; i += 2) logits[i + 1] = logits[i];
    int id = static_cast<int>(rng.below(n));
    CHECK(icl::rank_of(logits, id) == rank_by_sort(logits, id));
  }
}

TEST_CASE("rank is invariant under shift and positive scaling") {
  icl::StableRng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    size_t n = 5 + rng.below(50);
    std::vector<float> logits(n);
    for (auto& v : logits) v = static_cast<float>(rng.real01() * 4.0 - 2.0);
    int id = static_cast<int>(rng.below(n));
    int base = icl::rank_of(logits, id);

    std::vector<float> shifted = logits, scaled = logits;
    for (auto& v : shifted) v += 3.25f;
    for (auto& v : scaled) v *= 4.0f;
    CHECK(icl::rank_of(shifted, id) == base);
    CHECK(icl::rank_of(scaled, id) == base);
  }
}

TEST_CASE("pir picks the best reciprocal rank and the earliest peak") {
  PIRValue v = icl::pir(profile_of({5000, 12, 1, 3}));
  CHECK(v.value == 1.0);
  CHECK(v.peak_layer == 3);

  v = icl::pir(profile_of({10, 5, 4}));
  CHECK(v.value == 0.25);
  CHECK(v.peak_layer == 3);

  v = icl::pir(profile_of({7, 3, 3, 9}));
  CHECK(v.value == doctest::Approx(1.0 / 3.0));
  CHECK(v.peak_layer == 2);

  v = icl::pir(profile_of({40, 40}));
  CHECK(v.value == doctest::Approx(1.0 / 40.0));
  CHECK(v.peak_layer == 1);

  CHECK_THROWS_AS(icl::pir(profile_of({})), std::invalid_argument);
}

TEST_CASE("pir is bounded and monotone under appending layers") {
  icl::StableRng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    int vocab = 50;
    std::vector<int> ranks(1 + rng.below(8));
    for (auto& r : ranks) r = 1 + static_cast<int>(rng.below(vocab));
    PIRValue base = icl::pir(profile_of(ranks));
    CHECK(base.value >= 1.0 / vocab);
    CHECK(base.value <= 1.0);
    CHECK(ranks[base.peak_layer - 1] == *std::min_element(ranks.begin(), ranks.end()));

    std::vector<int> longer = ranks;
    longer.push_back(1 + static_cast<int>(rng.below(vocab)));
    CHECK(icl::pir(profile_of(longer)).value >= base.value);
  }
}

TEST_CASE("rank profiles match a per-layer projection done by hand") {
  icl::GptModel model = make_toy_model(2);
  icl::TokenSequence seq = model.tokenize("Word: France\nLabel: Paris");
  int last = static_cast<int>(seq.token_ids.size()) - 1;
  icl::CaptureRequest req;
  req.positions = {2, last};
  icl::CaptureResult cap = model.forward_capture(seq, req);

  TaskToken target = icl::resolve_task_token(model.tokenizer(), "capital");
  CHECK(target.token_id == model.tokenizer().find(" capital"));

  RankProfile prof = icl::rank_profile(cap, model, last, target);
  REQUIRE(prof.ranks.size() == 2);
  CHECK(prof.position == last);
  for (int layer = 1; layer <= 2; ++layer) {
    std::vector<float> logits = model.project_to_vocab(cap.hidden_at(layer, last));
    CHECK(prof.ranks[layer - 1] == rank_by_sort(logits, target.token_id));
  }

  CHECK_THROWS_AS(icl::rank_profile(cap, model, 3, target), std::out_of_range);
}

TEST_CASE("sweep at one position degenerates to pir of the profile") {
  icl::GptModel model = make_toy_model(3);
  icl::TokenSequence seq = model.tokenize("Word: Italy\nLabel: Rome");
  icl::CaptureRequest req;
  req.positions = {1, 3, 5};
  icl::CaptureResult cap = model.forward_capture(seq, req);
  TaskToken target = icl::resolve_task_token(model.tokenizer(), "capital");

  std::vector<PIRValue> one = icl::pir_sweep(cap, model, {3}, target);
  REQUIRE(one.size() == 1);
  PIRValue direct = icl::pir(icl::rank_profile(cap, model, 3, target));
  CHECK(one[0].value == direct.value);
  CHECK(one[0].peak_layer == direct.peak_layer);

  std::vector<PIRValue> three = icl::pir_sweep(cap, model, {1, 3, 5}, target);
  CHECK(three.size() == 3);
}

TEST_CASE("task tokens resolve under both sub-token policies") {
  icl::GptModel model = make_toy_model(2);
  TaskToken first = icl::resolve_task_token(model.tokenizer(), "capital",
                                            icl::SubTokenPolicy::first_subtoken);
  CHECK(first.token_id == model.tokenizer().find(" capital"));
  CHECK(first.surface == "capital");

  // "colors" is out of vocabulary, so it splits into " color" + "s"
  TaskToken head = icl::resolve_task_token(model.tokenizer(), "colors",
                                           icl::SubTokenPolicy::first_subtoken);
  CHECK(head.token_id == model.tokenizer().find(" color"));
  TaskToken tail = icl::resolve_task_token(model.tokenizer(), "colors",
                                           icl::SubTokenPolicy::last_subtoken);
  CHECK(tail.token_id == static_cast<int>('s'));
}

TEST_CASE("attention report marks label positions and their argmax") {
  icl::GptModel model = make_toy_model(3);
  icl::TokenSequence seq = model.tokenize("Word: France\nLabel: Paris\nWord: Italy\nLabel:");
  int last = static_cast<int>(seq.token_ids.size()) - 1;
  icl::CaptureRequest req;
  req.positions = {last};
  req.attention_layers = {2};
  icl::CaptureResult cap = model.forward_capture(seq, req);

  icl::AttentionRow row = icl::attention_report(cap, 2, last, {4, 6});
  CHECK(row.layer == 2);
  CHECK(row.query_position == last);
  CHECK(row.scores.size() == seq.token_ids.size());
  double sum = std::accumulate(row.scores.begin(), row.scores.end(), 0.0);
  CHECK(std::abs(sum - 1.0) <= 1e-4);
  REQUIRE(row.argmax_label_position.has_value());
  CHECK((*row.argmax_label_position == 4 || *row.argmax_label_position == 6));
  CHECK(row.scores[static_cast<size_t>(*row.argmax_label_position)] >=
        row.scores[4]);
  CHECK(row.scores[static_cast<size_t>(*row.argmax_label_position)] >=
        row.scores[6]);

  icl::AttentionRow unmarked = icl::attention_report(cap, 2, last, {});
  CHECK_FALSE(unmarked.argmax_label_position.has_value());

  CHECK_THROWS_AS(icl::attention_report(cap, 1, last, {4}), std::out_of_range);
  CHECK_THROWS_AS(icl::attention_report(cap, 2, last, {cap.seq_len}), std::out_of_range);
}

TEST_CASE("profile json carries the published record fields") {
  RankProfile p = profile_of({8, 2, 4});
  nlohmann::json j = icl::profile_to_json(p);
  CHECK(j.at("ranks").get<std::vector<int>>() == std::vector<int>{8, 2, 4});
  CHECK(j.at("pir") == 0.5);
  CHECK(j.at("peak_layer") == 2);
  CHECK(j.at("position") == 0);
  CHECK(j.at("target") == "x");
}
