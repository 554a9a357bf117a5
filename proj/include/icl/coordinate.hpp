#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/lens.hpp"
#include "icl/model.hpp"
#include "icl/prompt.hpp"
#include "icl/similarity.hpp"

namespace icl {

struct Thresholds {
  double tau_y = 0.05;  // task-recognition cutoff on raw PIR
  double tau_x = 0.5;   // similarity cutoff on the combined score
};

enum class Quadrant { Q1, Q2, Q3, Q4 };

const char* quadrant_name(Quadrant q);

struct Coordinate {
  double x = 0.0;  // [-1, 1]
  double y = 0.0;  // [-1, 1]
  Quadrant quadrant = Quadrant::Q3;
  double raw_pir = 0.0;
  double raw_sim = 0.0;
  Thresholds thresholds;
};

// piecewise-linear remap of each raw value around its threshold; the boundary
// itself lands at 0 and is assigned by the <= rule (Q3 at the origin)
Coordinate place(double raw_pir, double raw_sim, const Thresholds& thresholds);

struct QuadrantReport {
  Coordinate coord;
  std::vector<RankProfile> profiles;       // one per demo label position
  std::vector<PIRValue> pirs;              // aligned with profiles
  DemoSimilarity similarities;
};

// raw_pir = max PIR over all demo label positions; raw_sim = prompt_max
QuadrantReport diagnose(const PromptSpec& spec, const TaskToken& task_token,
                        const GptModel& model, const Embedder* embedder,
                        const Thresholds& thresholds);

nlohmann::json report_to_json(const QuadrantReport& report);

}  // namespace icl
