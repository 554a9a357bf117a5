#include "icl/lens.hpp"

#include <stdexcept>

namespace icl {

TaskToken resolve_task_token(const Tokenizer& tok, const std::string& surface,
                             SubTokenPolicy policy) {
  if (surface.empty()) throw std::invalid_argument("resolve_task_token: empty surface");
  TokenSequence ids = tok.tokenize(" " + surface);
  if (ids.token_ids.empty())
    throw std::invalid_argument("resolve_task_token: surface tokenizes to nothing");
  TaskToken t;
  t.surface = surface;
  t.policy = policy;
  t.token_id = policy == SubTokenPolicy::first_subtoken ? ids.token_ids.front()
                                                        : ids.token_ids.back();
  return t;
}

int rank_of(std::span<const float> logits, int token_id) {
  if (token_id < 0 || static_cast<size_t>(token_id) >= logits.size())
    throw std::out_of_range("rank_of: token id out of range");
  const float target = logits[static_cast<size_t>(token_id)];
  int greater = 0;
  for (float v : logits)
    if (v > target) ++greater;
  return 1 + greater;
}

RankProfile rank_profile(const CaptureResult& capture, const GptModel& model, int position,
                         const TaskToken& target) {
  if (model.handle().vocab_size != capture.vocab_size ||
      model.handle().hidden_dim != capture.hidden_dim)
    throw std::invalid_argument("rank_profile: capture does not match model shape");
  RankProfile profile;
  profile.target = target;
  profile.position = position;
  profile.ranks.reserve(static_cast<size_t>(capture.num_layers));
  for (int layer = 1; layer <= capture.num_layers; ++layer) {
    const std::vector<float>& h = capture.hidden_at(layer, position);
    std::vector<float> logits = model.project_to_vocab(h);
    profile.ranks.push_back(rank_of(logits, target.token_id));
  }
  return profile;
}

PIRValue pir(const RankProfile& profile) {
  if (profile.ranks.empty()) throw std::invalid_argument("pir: empty profile");
  PIRValue out;
  for (size_t i = 0; i < profile.ranks.size(); ++i) {
    double v = 1.0 / profile.ranks[i];
    if (v > out.value) {
      out.value = v;
      out.peak_layer = static_cast<int>(i) + 1;
    }
  }
  return out;
}

std::vector<PIRValue> pir_sweep(const CaptureResult& capture, const GptModel& model,
                                const std::vector<int>& positions, const TaskToken& target) {
  std::vector<PIRValue> out;
  out.reserve(positions.size());
  for (int p : positions) out.push_back(pir(rank_profile(capture, model, p, target)));
  return out;
}

AttentionRow attention_report(const CaptureResult& capture, int layer, int query_position,
                              const std::vector<int>& label_positions) {
  AttentionRow row;
  row.layer = layer;
  row.query_position = query_position;
  row.scores = capture.attention_at(layer, query_position);
  row.label_positions = label_positions;
  float best = -1.0f;
  for (int p : label_positions) {
    if (p < 0 || static_cast<size_t>(p) >= row.scores.size())
      throw std::out_of_range("attention_report: label position out of range");
    if (row.scores[static_cast<size_t>(p)] > best) {
      best = row.scores[static_cast<size_t>(p)];
      row.argmax_label_position = p;
    }
  }
  return row;
}

nlohmann::json profile_to_json(const RankProfile& profile) {
  PIRValue p = pir(profile);
  return nlohmann::json{{"target", profile.target.surface},
                        {"position", profile.position},
                        {"ranks", profile.ranks},
                        {"pir", p.value},
                        {"peak_layer", p.peak_layer}};
}

}  // namespace icl
