#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/coordinate.hpp"

namespace icl {

struct ExperimentConfig {
  std::string experiment;  // q1, q2_shots, q2_random_labels, q3_position,
                           // q4_copy, triplets, instruction, generation_sweep,
                           // diagnose
  std::string model_path;
  std::string dataset_id;  // empty picks the experiment's default corpus
  int k = -1;              // -1 picks the experiment default
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
  Thresholds thresholds;
  std::string output_dir = "out";
  int max_samples = 200;
  std::vector<int> shot_list = {0, 1, 6, 12};
  std::string data_dir;     // empty resolves via ICL_DATA_DIR, then "data"
  std::string prompt_json;  // diagnose/pir: explicit PromptSpec file
  int sample_index = 0;     // diagnose/pir: which dataset sample to use
  int repeats = 3;          // triplets: copies of each element
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

// runs one experiment and writes summary.json, samples.csv, and plots into
// output_dir/<experiment>; returns the summary
nlohmann::json run_experiment(const ExperimentConfig& config);

}  // namespace icl
