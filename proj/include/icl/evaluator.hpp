#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "icl/dataset.hpp"
#include "icl/model.hpp"
#include "icl/prompt.hpp"

namespace icl {

struct Prediction {
  int top_token_id = -1;
  std::string top_token_text;
  float logit = 0.0f;
};

// strict whole-vocabulary argmax; ties broken by lowest token id
Prediction predict_from_logits(std::span<const float> logits, const Tokenizer& tok);
Prediction predict(const PromptSpec& spec, const GptModel& model);

// labels are judged on their first sub-token in leading-space position
int gold_first_subtoken(const Tokenizer& tok, const std::string& label);

// one row per evaluated prompt in the emitted CSV
struct SampleRecord {
  std::string sample_id;
  uint64_t seed = 0;
  std::string prediction;
  std::string gold;
  std::string condition;
};

void write_csv(const std::string& path, const std::vector<SampleRecord>& records);

using ConditionBuilder =
    std::function<PromptSpec(int sample_index, const Example& sample, uint64_t seed)>;

struct AccuracyResult {
  double mean = 0.0;
  double stdev = 0.0;
  std::vector<double> per_seed;
};

inline const std::vector<uint64_t> kDefaultSeeds = {0, 1, 2, 3, 4};

AccuracyResult accuracy(const DatasetBundle& dataset, const ConditionBuilder& builder,
                        const std::vector<uint64_t>& seeds, const GptModel& model,
                        int max_samples, const std::string& condition_name,
                        std::vector<SampleRecord>* records = nullptr);

// one Similar(T)-incorrect evaluation: what the model said vs what was planted
struct CopyEvaluation {
  int predicted_id = -1;
  int assigned_first_subtoken = -1;
};

double copy_rate(const std::vector<CopyEvaluation>& evaluations);

// builds k-shot prompts (k includes the planted copy of the test sample with a
// non-gold label), evaluates, and tallies predictions matching the plant
double copy_rate_run(const DatasetBundle& dataset, const GptModel& model, int k,
                     const std::vector<uint64_t>& seeds, int max_samples,
                     std::vector<SampleRecord>* records = nullptr);

struct PositionalHistogram {
  std::vector<int64_t> counts;  // by demo position
  int64_t other_count = 0;

  int64_t total() const;
};

void tally_position(PositionalHistogram& hist, int predicted_id,
                    const std::vector<int>& demo_label_first_ids);

// label-coverage prompts with a range-limiting instruction; every prediction
// is binned to the demo position whose label it copies, or to other_count
PositionalHistogram position_preference(const DatasetBundle& dataset, const GptModel& model,
                                        const std::vector<uint64_t>& seeds, int max_samples,
                                        std::vector<SampleRecord>* records = nullptr);

// generic instruction restricting output to the label space, used by the
// coverage protocol; mentions no task wording
std::string label_menu_instruction(const LabelSpace& space);

struct LsbProportions {
  double l = 0.0;
  double s = 0.0;
  double b = 0.0;
  double others = 0.0;
};

LsbProportions lsb_tally(const std::vector<int>& predictions, int l_id, int s_id, int b_id);

LsbProportions lsb_preference(const DatasetBundle& corpus, const GptModel& model,
                              const std::vector<uint64_t>& seeds, int repeats = 3,
                              int max_samples = -1,
                              std::vector<SampleRecord>* records = nullptr);

}  // namespace icl
