#include "icl/coordinate.hpp"

#include <algorithm>
#include <stdexcept>

#include "icl/evaluator.hpp"

namespace icl {

const char* quadrant_name(Quadrant q) {
  switch (q) {
    case Quadrant::Q1: return "Q1";
    case Quadrant::Q2: return "Q2";
    case Quadrant::Q3: return "Q3";
    case Quadrant::Q4: return "Q4";
  }
  return "?";
}

namespace {

double remap(double raw, double tau) {
  return raw >= tau ? (raw - tau) / (1.0 - tau) : (raw - tau) / tau;
}

}  // namespace

Coordinate place(double raw_pir, double raw_sim, const Thresholds& thresholds) {
  if (thresholds.tau_y <= 0.0 || thresholds.tau_y >= 1.0 || thresholds.tau_x <= 0.0 ||
      thresholds.tau_x >= 1.0)
    throw std::invalid_argument("place: thresholds must lie strictly inside (0, 1)");
  if (raw_pir <= 0.0 || raw_pir > 1.0)
    throw std::invalid_argument("place: raw_pir must lie in (0, 1]");
  if (raw_sim < 0.0 || raw_sim > 1.0)
    throw std::invalid_argument("place: raw_sim must lie in [0, 1]");

  Coordinate c;
  c.raw_pir = raw_pir;
  c.raw_sim = raw_sim;
  c.thresholds = thresholds;
  c.y = remap(raw_pir, thresholds.tau_y);
  c.x = remap(raw_sim, thresholds.tau_x);
  if (c.x > 0.0)
    c.quadrant = c.y > 0.0 ? Quadrant::Q1 : Quadrant::Q4;
  else
    c.quadrant = c.y > 0.0 ? Quadrant::Q2 : Quadrant::Q3;
  return c;
}

QuadrantReport diagnose(const PromptSpec& spec, const TaskToken& task_token,
                        const GptModel& model, const Embedder* embedder,
                        const Thresholds& thresholds) {
  if (spec.demos.empty()) throw std::invalid_argument("diagnose: spec has no demos");

  TokenSequence tokens = model.tokenize(render(spec));
  LabelPositions anchors = locate_label_positions(spec, tokens, model.tokenizer());

  CaptureRequest req;
  req.positions = anchors.demo_label_positions;
  CaptureResult capture = model.forward_capture(tokens, req);

  QuadrantReport report;
  double raw_pir = 0.0;
  for (int pos : anchors.demo_label_positions) {
    RankProfile profile = rank_profile(capture, model, pos, task_token);
    PIRValue p = pir(profile);
    raw_pir = std::max(raw_pir, p.value);
    report.profiles.push_back(std::move(profile));
    report.pirs.push_back(p);
  }
  report.similarities = demo_similarity(spec.test_input, spec, embedder);
  report.coord = place(raw_pir, report.similarities.prompt_max, thresholds);
  return report;
}

nlohmann::json report_to_json(const QuadrantReport& report) {
  nlohmann::json profiles = nlohmann::json::array();
  for (const RankProfile& p : report.profiles) profiles.push_back(profile_to_json(p));
  nlohmann::json sims = nlohmann::json::array();
  for (const SimilarityScore& s : report.similarities.per_demo)
    sims.push_back({{"lexical", s.lexical}, {"semantic", s.semantic}, {"combined", s.combined}});
  return nlohmann::json{
      {"x", report.coord.x},
      {"y", report.coord.y},
      {"quadrant", quadrant_name(report.coord.quadrant)},
      {"raw_pir", report.coord.raw_pir},
      {"raw_sim", report.coord.raw_sim},
      {"thresholds", {{"tau_y", report.coord.thresholds.tau_y},
                      {"tau_x", report.coord.thresholds.tau_x}}},
      {"evidence", {{"profiles", profiles}, {"similarities", sims}}}};
}

}  // namespace icl
