#include "icl/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace icl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kPackaged = {
    "capitals", "colors", "triplets-sst2", "triplets-emo", "triplets-trec", "triplets-hate",
    "svo-translation"};

Example example_from_json(const json& j, const std::string& where) {
  if (!j.contains("input") || !j.contains("label"))
    throw std::runtime_error(where + ": record needs input and label fields");
  Example ex{j.at("input").get<std::string>(), j.at("label").get<std::string>()};
  if (ex.input_text.empty() || ex.label_text.empty())
    throw std::runtime_error(where + ": empty input or label");
  return ex;
}

void load_meta(DatasetBundle& bundle, const std::string& meta_path) {
  std::ifstream is(meta_path);
  if (!is) return;  // plain user corpora carry no meta file
  json meta = json::parse(is);
  bundle.name = meta.value("name", bundle.name);
  bundle.task_token = meta.value("task_token", "");
  bundle.markers.input_marker = meta.value("input_marker", bundle.markers.input_marker);
  bundle.markers.label_marker = meta.value("label_marker", bundle.markers.label_marker);
  bundle.instruction = meta.value("instruction", "");
  if (meta.value("sub_token_policy", "first_subtoken") == "last_subtoken")
    bundle.sub_token_policy = SubTokenPolicy::last_subtoken;
}

LabelSpace infer_label_space(const std::vector<Example>& examples,
                             const std::vector<TripletCorpusEntry>& triplets) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  auto add = [&](const std::string& l) {
    if (seen.insert(l).second) labels.push_back(l);
  };
  for (const Example& ex : examples) add(ex.label_text);
  for (const TripletCorpusEntry& t : triplets) {
    add(t.test_sample.label_text);
    add(t.semantic.label_text);
    add(t.lexical.label_text);
    add(t.baseline.label_text);
  }
  return LabelSpace::from_labels(std::move(labels));
}

}  // namespace

std::vector<std::string> packaged_datasets() { return kPackaged; }

std::string default_data_dir() {
  if (const char* env = std::getenv("ICL_DATA_DIR")) return env;
  return "data";
}

std::string default_model_path() {
  std::string dir = "models";
  if (const char* env = std::getenv("ICL_MODEL_DIR")) dir = env;
  return (fs::path(dir) / "picolm-v1.iclmodel").string();
}

DatasetBundle load_dataset(const std::string& id_or_path, const std::string& data_dir) {
  fs::path jsonl;
  fs::path meta;
  std::string name = id_or_path;
  if (std::find(kPackaged.begin(), kPackaged.end(), id_or_path) != kPackaged.end()) {
    fs::path dir = data_dir.empty() ? fs::path(default_data_dir()) : fs::path(data_dir);
    jsonl = dir / (id_or_path + ".jsonl");
    meta = dir / (id_or_path + ".meta.json");
  } else {
    jsonl = id_or_path;
    meta = fs::path(id_or_path).replace_extension(".meta.json");
    name = fs::path(id_or_path).stem().string();
  }

  std::ifstream is(jsonl);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + jsonl.string());

  DatasetBundle bundle;
  bundle.name = name;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string where = jsonl.string() + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(where + ": malformed record: " + e.what());
    }
    if (j.contains("test")) {
      TripletCorpusEntry entry;
      entry.test_sample = example_from_json(j.at("test"), where);
      entry.semantic = example_from_json(j.at("semantic"), where);
      entry.lexical = example_from_json(j.at("lexical"), where);
      entry.baseline = example_from_json(j.at("baseline"), where);
      if (entry.semantic.label_text != entry.test_sample.label_text)
        throw std::runtime_error(where + ": semantic example must share the test label");
      if (entry.lexical.label_text == entry.test_sample.label_text)
        throw std::runtime_error(where + ": lexical example must carry a different label");
      bundle.examples.push_back(entry.test_sample);
      bundle.triplets.push_back(std::move(entry));
    } else {
      bundle.examples.push_back(example_from_json(j, where));
    }
  }
  if (bundle.examples.empty())
    throw std::runtime_error("load_dataset: " + jsonl.string() + " holds no records");

  load_meta(bundle, meta.string());
  bundle.label_space = infer_label_space(bundle.examples, bundle.triplets);
  return bundle;
}

}  // namespace icl
