#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icl/coordinate.hpp"
#include "icl/dataset.hpp"
#include "icl/experiments.hpp"
#include "icl/trace.hpp"
#include "icl/version.hpp"

using nlohmann::json;

namespace {

struct CommonOpts {
  std::string model_path;
  std::string dataset_id;
  std::string data_dir;
  std::string config_path;
  std::string prompt_json;
  std::string out = "out";
  int k = -1;
  int sample_index = 0;
  int max_samples = 200;
  std::vector<uint64_t> seeds;
  double tau_y = icl::Thresholds{}.tau_y;
  double tau_x = icl::Thresholds{}.tau_x;
  std::vector<int> shots;
  int repeats = 3;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--model", o.model_path, "path to a .iclmodel file");
  cmd->add_option("--dataset", o.dataset_id, "packaged dataset id or JSON-lines path");
  cmd->add_option("--data-dir", o.data_dir, "dataset directory (default: $ICL_DATA_DIR or data)");
  cmd->add_option("--config", o.config_path, "JSON config file; flags override its fields");
  cmd->add_option("--prompt", o.prompt_json, "prompt spec JSON file");
  cmd->add_option("--k", o.k, "shots per prompt (-1 picks the experiment default)");
  cmd->add_option("--sample", o.sample_index, "dataset sample index for single-prompt runs");
  cmd->add_option("--seeds", o.seeds, "seed list (default 0 1 2 3 4)");
  cmd->add_option("--tau-y", o.tau_y, "task-recognition threshold on raw PIR");
  cmd->add_option("--tau-x", o.tau_x, "similarity threshold on the combined score");
  cmd->add_option("--out", o.out, "output directory (or file for trace export)");
  cmd->add_option("--max-samples", o.max_samples, "per-condition sample cap");
  cmd->add_option("--shots", o.shots, "shot list for q2_shots");
  cmd->add_option("--repeats", o.repeats, "per-element copies in triplet prompts");
}

icl::ExperimentConfig make_config(const CLI::App* cmd, const CommonOpts& o,
                                  const std::string& experiment) {
  icl::ExperimentConfig c;
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw std::runtime_error("cannot open config " + o.config_path);
    c = icl::config_from_json(json::parse(is));
  }
  if (!experiment.empty()) c.experiment = experiment;
  auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
  if (given("--model")) c.model_path = o.model_path;
  if (c.model_path.empty()) c.model_path = icl::default_model_path();
  if (given("--dataset")) c.dataset_id = o.dataset_id;
  if (given("--data-dir")) c.data_dir = o.data_dir;
  if (given("--prompt")) c.prompt_json = o.prompt_json;
  if (given("--k")) c.k = o.k;
  if (given("--sample")) c.sample_index = o.sample_index;
  if (given("--seeds")) c.seeds = o.seeds;
  if (given("--tau-y")) c.thresholds.tau_y = o.tau_y;
  if (given("--tau-x")) c.thresholds.tau_x = o.tau_x;
  if (given("--out")) c.output_dir = o.out;
  if (given("--max-samples")) c.max_samples = o.max_samples;
  if (given("--shots")) c.shot_list = o.shots;
  if (given("--repeats")) c.repeats = o.repeats;
  return c;
}

// shared prompt resolution for the single-prompt commands (pir, diagnose,
// trace export): an explicit spec file wins, otherwise a dataset sample
struct SinglePrompt {
  icl::PromptSpec spec;
  icl::TaskToken target;
};

SinglePrompt resolve_prompt(const icl::ExperimentConfig& c, const icl::GptModel& model,
                            const icl::Embedder* embedder) {
  icl::DatasetBundle ds = icl::load_dataset(c.dataset_id.empty() ? "capitals" : c.dataset_id,
                                            c.data_dir);
  SinglePrompt out;
  if (!c.prompt_json.empty()) {
    std::ifstream is(c.prompt_json);
    if (!is) throw std::runtime_error("cannot open prompt " + c.prompt_json);
    out.spec = icl::spec_from_json(json::parse(is));
  } else {
    if (c.sample_index < 0 || c.sample_index >= static_cast<int>(ds.examples.size()))
      throw std::runtime_error("sample index out of range for " + ds.name);
    const icl::Example& ex = ds.examples[static_cast<size_t>(c.sample_index)];
    int k = c.k > 0 ? c.k : 1;
    out.spec = icl::build_standard(ds.examples, ex.input_text, k,
                                   icl::mix_seed(c.seeds.at(0),
                                                 static_cast<uint64_t>(c.sample_index)),
                                   ds.markers, {}, embedder);
  }
  out.target = icl::resolve_task_token(model.tokenizer(), ds.task_token, ds.sub_token_policy);
  return out;
}

int cmd_datasets_list(const CommonOpts& o) {
  for (const std::string& id : icl::packaged_datasets()) {
    icl::DatasetBundle ds = icl::load_dataset(id, o.data_dir);
    std::cout << id << "  examples=" << ds.examples.size()
              << "  labels=" << ds.label_space.labels.size()
              << "  task_token=" << ds.task_token << "\n";
  }
  return 0;
}

int cmd_experiment(const CLI::App* cmd, const CommonOpts& o, const std::string& name) {
  icl::ExperimentConfig c = make_config(cmd, o, name);
  json summary = icl::run_experiment(c);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_pir(const CLI::App* cmd, const CommonOpts& o) {
  icl::ExperimentConfig c = make_config(cmd, o, "pir");
  icl::GptModel model = icl::GptModel::load(c.model_path);
  icl::MeanInputEmbedder embedder(model);
  SinglePrompt sp = resolve_prompt(c, model, &embedder);

  icl::TokenSequence tokens = model.tokenize(icl::render(sp.spec));
  icl::LabelPositions anchors = icl::locate_label_positions(sp.spec, tokens, model.tokenizer());
  icl::CaptureRequest req;
  req.positions = anchors.demo_label_positions;
  icl::CaptureResult capture = model.forward_capture(tokens, req);
  for (int pos : anchors.demo_label_positions) {
    icl::RankProfile profile = icl::rank_profile(capture, model, pos, sp.target);
    std::cout << icl::profile_to_json(profile).dump() << "\n";
  }
  return 0;
}

int cmd_trace_export(const CLI::App* cmd, const CommonOpts& o) {
  icl::ExperimentConfig c = make_config(cmd, o, "trace");
  icl::GptModel model = icl::GptModel::load(c.model_path);
  icl::MeanInputEmbedder embedder(model);
  SinglePrompt sp = resolve_prompt(c, model, &embedder);

  icl::TokenSequence tokens = model.tokenize(icl::render(sp.spec));
  icl::LabelPositions anchors = icl::locate_label_positions(sp.spec, tokens, model.tokenizer());
  icl::CaptureRequest req;
  req.positions = anchors.demo_label_positions;
  req.positions.push_back(anchors.final_position);
  for (int l = 1; l <= model.config().n_layer; ++l) req.attention_layers.push_back(l);
  icl::CaptureResult capture = model.forward_capture(tokens, req);

  std::string path = cmd->count("--out") > 0 ? c.output_dir : "trace.icltrace";
  icl::export_trace(capture, model.handle(), tokens, path);
  std::cout << "wrote " << path << " (" << capture.positions.size() << " positions, "
            << capture.num_layers << " layers)\n";
  return 0;
}

int cmd_diagnose(const CLI::App* cmd, const CommonOpts& o) {
  icl::ExperimentConfig c = make_config(cmd, o, "diagnose");
  icl::GptModel model = icl::GptModel::load(c.model_path);
  icl::MeanInputEmbedder embedder(model);
  SinglePrompt sp = resolve_prompt(c, model, &embedder);
  icl::QuadrantReport report = icl::diagnose(sp.spec, sp.target, model, &embedder,
                                             c.thresholds);
  std::cout << icl::report_to_json(report).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"in-context learning coordinate toolkit"};
  app.set_version_flag("--version", ICL_VERSION);
  app.require_subcommand(1);

  CommonOpts o;
  CLI::App* diagnose = app.add_subcommand("diagnose", "place one prompt on the 2D coordinate");
  CLI::App* pir = app.add_subcommand("pir", "rank profiles at a prompt's demo label positions");
  CLI::App* experiment = app.add_subcommand("experiment", "run a named experiment");
  std::string experiment_name;
  experiment->add_option("name", experiment_name,
                         "q1 | q2_shots | q2_random_labels | q3_position | q4_copy | "
                         "triplets | instruction | generation_sweep | diagnose")
      ->required();
  CLI::App* trace = app.add_subcommand("trace", "activation trace utilities");
  CLI::App* trace_export = trace->add_subcommand("export", "capture a prompt to a trace file");
  CLI::App* datasets = app.add_subcommand("datasets", "dataset utilities");
  CLI::App* datasets_list = datasets->add_subcommand("list", "list packaged datasets");
  datasets_list->add_option("--data-dir", o.data_dir, "dataset directory");

  add_common(diagnose, o);
  add_common(pir, o);
  add_common(experiment, o);
  add_common(trace_export, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*diagnose) return cmd_diagnose(diagnose, o);
    if (*pir) return cmd_pir(pir, o);
    if (*experiment) return cmd_experiment(experiment, o, experiment_name);
    if (*trace) {
      if (*trace_export) return cmd_trace_export(trace_export, o);
      std::cerr << "trace: missing subcommand (export)\n";
      return 2;
    }
    if (*datasets) {
      if (*datasets_list) return cmd_datasets_list(o);
      std::cerr << "datasets: missing subcommand (list)\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
