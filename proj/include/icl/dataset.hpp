#pragma once

#include <string>
#include <vector>

#include "icl/lens.hpp"
#include "icl/prompt.hpp"

namespace icl {

struct DatasetBundle {
  std::string name;
  std::vector<Example> examples;  // for triplet corpora, the test samples
  LabelSpace label_space;
  std::string task_token;  // surface form; resolve against a tokenizer to use
  SubTokenPolicy sub_token_policy = SubTokenPolicy::first_subtoken;
  Markers markers;
  std::string instruction;  // zero-shot instruction; may be empty
  std::vector<TripletCorpusEntry> triplets;  // empty for pair datasets

  bool is_triplet_corpus() const { return !triplets.empty(); }
};

// id is a packaged dataset name (capitals, colors, triplets-sst2, ...) or a
// path to a JSON-lines file; packaged data lives in data_dir
DatasetBundle load_dataset(const std::string& id_or_path, const std::string& data_dir);

std::vector<std::string> packaged_datasets();

// data directory resolution: explicit argument, else ICL_DATA_DIR, else "data"
std::string default_data_dir();
std::string default_model_path();  // ICL_MODEL_DIR override, else "models"

}  // namespace icl
