#include "icl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "icl/similarity.hpp"

namespace icl {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double stdev_of(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

int effective_count(size_t available, int max_samples) {
  if (max_samples < 0) return static_cast<int>(available);
  return std::min(static_cast<int>(available), max_samples);
}

}  // namespace

Prediction predict_from_logits(std::span<const float> logits, const Tokenizer& tok) {
  if (logits.empty()) throw std::invalid_argument("predict: empty logits");
  size_t best = 0;
  for (size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;  // ties keep the lowest id
  Prediction p;
  p.top_token_id = static_cast<int>(best);
  p.top_token_text = tok.token_text(p.top_token_id);
  p.logit = logits[best];
  return p;
}

Prediction predict(const PromptSpec& spec, const GptModel& model) {
  TokenSequence tokens = model.tokenize(render(spec));
  CaptureResult capture = model.forward_capture(tokens, CaptureRequest{});
  return predict_from_logits(capture.final_logits, model.tokenizer());
}

int gold_first_subtoken(const Tokenizer& tok, const std::string& label) {
  if (label.empty()) throw std::invalid_argument("gold_first_subtoken: empty label");
  TokenSequence seq = tok.tokenize(" " + label);
  return seq.token_ids.front();
}

void write_csv(const std::string& path, const std::vector<SampleRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os << "sample_id,seed,prediction,gold,condition\n";
  for (const SampleRecord& r : records)
    os << csv_field(r.sample_id) << ',' << r.seed << ',' << csv_field(r.prediction) << ','
       << csv_field(r.gold) << ',' << csv_field(r.condition) << '\n';
  if (!os) throw std::runtime_error("write_csv: write failure on " + path);
}

AccuracyResult accuracy(const DatasetBundle& dataset, const ConditionBuilder& builder,
                        const std::vector<uint64_t>& seeds, const GptModel& model,
                        int max_samples, const std::string& condition_name,
                        std::vector<SampleRecord>* records) {
  if (dataset.examples.empty()) throw std::invalid_argument("accuracy: empty dataset");
  if (seeds.empty()) throw std::invalid_argument("accuracy: empty seed list");
  const int n = effective_count(dataset.examples.size(), max_samples);

  AccuracyResult result;
  for (uint64_t seed : seeds) {
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      const Example& ex = dataset.examples[static_cast<size_t>(i)];
      PromptSpec spec = builder(i, ex, seed);
      Prediction pred = predict(spec, model);
      int gold = gold_first_subtoken(model.tokenizer(), ex.label_text);
      if (pred.top_token_id == gold) ++correct;
      if (records)
        records->push_back({dataset.name + "#" + std::to_string(i), seed, pred.top_token_text,
                            ex.label_text, condition_name});
    }
    result.per_seed.push_back(static_cast<double>(correct) / n);
  }
  for (double a : result.per_seed) result.mean += a;
  result.mean /= static_cast<double>(result.per_seed.size());
  result.stdev = stdev_of(result.per_seed, result.mean);
  return result;
}

double copy_rate(const std::vector<CopyEvaluation>& evaluations) {
  if (evaluations.empty()) throw std::invalid_argument("copy_rate: no evaluations");
  int hits = 0;
  for (const CopyEvaluation& e : evaluations) {
    if (e.assigned_first_subtoken < 0)
      throw std::invalid_argument("copy_rate: evaluation lacks an assigned label");
    if (e.predicted_id == e.assigned_first_subtoken) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(evaluations.size());
}

double copy_rate_run(const DatasetBundle& dataset, const GptModel& model, int k,
                     const std::vector<uint64_t>& seeds, int max_samples,
                     std::vector<SampleRecord>* records) {
  if (k < 2) throw std::invalid_argument("copy_rate_run: k must be at least 2");
  const int n = effective_count(dataset.examples.size(), max_samples);
  // the packaged corpora are small, so only near-duplicates are filtered out
  // of the demo pool; the planted copy is inserted separately
  DissimilarityCap cap{0.6, 0.95};

  std::vector<CopyEvaluation> evaluations;
  for (uint64_t seed : seeds) {
    for (int i = 0; i < n; ++i) {
      const Example& ex = dataset.examples[static_cast<size_t>(i)];
      uint64_t sub = mix_seed(seed, static_cast<uint64_t>(i));
      PromptSpec spec = build_standard(dataset.examples, ex.input_text, k - 1, sub,
                                       dataset.markers, cap, nullptr);
      StableRng rng(mix_seed(sub, 0x51));
      SimilarInsertion ins =
          insert_similar_test(spec, ex.label_text, dataset.label_space, InsertMode::incorrect, rng);
      Prediction pred = predict(ins.spec, model);
      CopyEvaluation eval;
      eval.predicted_id = pred.top_token_id;
      eval.assigned_first_subtoken = gold_first_subtoken(model.tokenizer(), ins.inserted_label);
      evaluations.push_back(eval);
      if (records)
        records->push_back({dataset.name + "#" + std::to_string(i), seed, pred.top_token_text,
                            ins.inserted_label, "similar_incorrect_k" + std::to_string(k)});
    }
  }
  return copy_rate(evaluations);
}

int64_t PositionalHistogram::total() const {
  int64_t t = other_count;
  for (int64_t c : counts) t += c;
  return t;
}

void tally_position(PositionalHistogram& hist, int predicted_id,
                    const std::vector<int>& demo_label_first_ids) {
  if (hist.counts.size() < demo_label_first_ids.size())
    hist.counts.resize(demo_label_first_ids.size(), 0);
  for (size_t pos = 0; pos < demo_label_first_ids.size(); ++pos) {
    if (demo_label_first_ids[pos] == predicted_id) {
      ++hist.counts[pos];
      return;
    }
  }
  ++hist.other_count;
}

std::string label_menu_instruction(const LabelSpace& space) {
  std::string out = "Please answer with one of the following labels: ";
  for (size_t i = 0; i < space.labels.size(); ++i) {
    if (i > 0) out += i + 1 == space.labels.size() ? ", or " : ", ";
    out += space.labels[i];
  }
  out += '.';
  return out;
}

PositionalHistogram position_preference(const DatasetBundle& dataset, const GptModel& model,
                                        const std::vector<uint64_t>& seeds, int max_samples,
                                        std::vector<SampleRecord>* records) {
  const int n = effective_count(dataset.examples.size(), max_samples);
  const std::string instruction = label_menu_instruction(dataset.label_space);

  PositionalHistogram hist;
  hist.counts.resize(dataset.label_space.labels.size(), 0);
  for (uint64_t seed : seeds) {
    for (int i = 0; i < n; ++i) {
      const Example& ex = dataset.examples[static_cast<size_t>(i)];
      // per class, the exemplar least lexically similar to the test sample
      std::vector<std::pair<std::string, Example>> by_label;
      for (const std::string& label : dataset.label_space.labels) {
        const Example* best = nullptr;
        double best_sim = 2.0;
        for (const Example& cand : dataset.examples) {
          if (cand.label_text != label || cand.input_text == ex.input_text) continue;
          double sim = lexical_similarity(cand.input_text, ex.input_text);
          if (sim < best_sim) {
            best_sim = sim;
            best = &cand;
          }
        }
        if (!best)
          throw std::runtime_error("position_preference: no exemplar for label " + label);
        by_label.emplace_back(label, *best);
      }
      PromptSpec spec = build_label_coverage(by_label, ex.input_text, dataset.markers,
                                             mix_seed(seed, static_cast<uint64_t>(i)));
      spec = prepend_instruction(spec, instruction);
      Prediction pred = predict(spec, model);
      std::vector<int> label_ids;
      for (const Example& demo : spec.demos)
        label_ids.push_back(gold_first_subtoken(model.tokenizer(), demo.label_text));
      tally_position(hist, pred.top_token_id, label_ids);
      if (records)
        records->push_back({dataset.name + "#" + std::to_string(i), seed, pred.top_token_text,
                            ex.label_text, "label_coverage"});
    }
  }
  return hist;
}

LsbProportions lsb_tally(const std::vector<int>& predictions, int l_id, int s_id, int b_id) {
  if (predictions.empty()) throw std::invalid_argument("lsb_tally: no predictions");
  LsbProportions p;
  for (int id : predictions) {
    if (id == l_id)
      p.l += 1;
    else if (id == s_id)
      p.s += 1;
    else if (id == b_id)
      p.b += 1;
    else
      p.others += 1;
  }
  double n = static_cast<double>(predictions.size());
  p.l /= n;
  p.s /= n;
  p.b /= n;
  p.others /= n;
  return p;
}

LsbProportions lsb_preference(const DatasetBundle& corpus, const GptModel& model,
                              const std::vector<uint64_t>& seeds, int repeats, int max_samples,
                              std::vector<SampleRecord>* records) {
  if (corpus.triplets.empty())
    throw std::invalid_argument("lsb_preference: dataset carries no triplets");
  const int n = effective_count(corpus.triplets.size(), max_samples);
  std::vector<int> predictions;
  for (uint64_t seed : seeds) {
    for (int i = 0; i < n; ++i) {
      const TripletCorpusEntry& entry = corpus.triplets[static_cast<size_t>(i)];
      PromptSpec spec = build_triplet_prompt(entry, repeats,
                                             mix_seed(seed, static_cast<uint64_t>(i)),
                                             corpus.markers);
      Prediction pred = predict(spec, model);
      predictions.push_back(pred.top_token_id);
      if (records)
        records->push_back({corpus.name + "#" + std::to_string(i), seed, pred.top_token_text,
                            entry.test_sample.label_text, "triplet_lsb"});
    }
  }
  const Tokenizer& tok = model.tokenizer();
  return lsb_tally(predictions, gold_first_subtoken(tok, "l"), gold_first_subtoken(tok, "s"),
                   gold_first_subtoken(tok, "b"));
}

}  // namespace icl
