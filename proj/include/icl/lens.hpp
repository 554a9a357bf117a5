#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/model.hpp"

namespace icl {

enum class SubTokenPolicy { first_subtoken, last_subtoken };

// A task-representative vocabulary token ("capital", "color", "question",
// "emotion", ...) resolved to the single id it carries mid-prompt, which is
// the leading-space form.
struct TaskToken {
  std::string surface;
  int token_id = -1;
  SubTokenPolicy policy = SubTokenPolicy::first_subtoken;
};

TaskToken resolve_task_token(const Tokenizer& tok, const std::string& surface,
                             SubTokenPolicy policy = SubTokenPolicy::first_subtoken);

struct RankProfile {
  TaskToken target;
  int position = -1;
  std::vector<int> ranks;  // one per layer, 1..num_layers
};

struct PIRValue {
  double value = 0.0;
  int peak_layer = -1;  // smallest layer attaining the peak
};

struct AttentionRow {
  int layer = -1;
  int query_position = -1;
  std::vector<float> scores;
  std::vector<int> label_positions;
  std::optional<int> argmax_label_position;  // absent when no labels marked
};

// rank = 1 + count of strictly greater logits; ties never penalize the target
int rank_of(std::span<const float> logits, int token_id);

// ranks[l-1] = rank_of(project(hidden[l, position]), target); the projection
// applies the model's final norm before the unembedding at every layer
RankProfile rank_profile(const CaptureResult& capture, const GptModel& model, int position,
                         const TaskToken& target);

PIRValue pir(const RankProfile& profile);

std::vector<PIRValue> pir_sweep(const CaptureResult& capture, const GptModel& model,
                                const std::vector<int>& positions, const TaskToken& target);

AttentionRow attention_report(const CaptureResult& capture, int layer, int query_position,
                              const std::vector<int>& label_positions);

nlohmann::json profile_to_json(const RankProfile& profile);

}  // namespace icl
