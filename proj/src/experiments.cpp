#include "icl/experiments.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "icl/dataset.hpp"
#include "icl/evaluator.hpp"
#include "icl/svg.hpp"
#include "icl/trace.hpp"
#include "icl/version.hpp"

namespace icl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunContext {
  ExperimentConfig config;
  GptModel model;
  MeanInputEmbedder embedder;
  fs::path out_dir;
  std::vector<SampleRecord> records;

  RunContext(const ExperimentConfig& cfg, GptModel&& m)
      : config(cfg), model(std::move(m)), embedder(model) {
    out_dir = fs::path(config.output_dir) / config.experiment;
    fs::create_directories(out_dir);
  }

  DatasetBundle dataset(const std::string& fallback) {
    std::string id = config.dataset_id.empty() ? fallback : config.dataset_id;
    return load_dataset(id, config.data_dir);
  }

  json base_summary(const DatasetBundle* ds) {
    json j{{"experiment", config.experiment},
           {"version", ICL_VERSION},
           {"model_id", model.handle().model_id},
           {"model_behavioral", true},
           {"config", config_to_json(config)}};
    if (ds) {
      j["dataset"] = ds->name;
      j["label_space"] = ds->label_space.labels;
    }
    return j;
  }

  void finish(const json& summary) {
    std::ofstream os(out_dir / "summary.json");
    if (!os) throw std::runtime_error("cannot write " + (out_dir / "summary.json").string());
    os << summary.dump(2) << "\n";
    write_csv((out_dir / "samples.csv").string(), records);
  }
};

// demos drawn from the remaining corpus entries; the packaged corpora are
// small, so sentence datasets get a looser near-duplicate cap than the
// single-word capitals/colors pools
DissimilarityCap cap_for(const DatasetBundle& ds) {
  return ds.is_triplet_corpus() ? DissimilarityCap{0.6, 0.95} : DissimilarityCap{};
}

PromptSpec standard_prompt(const DatasetBundle& ds, const Example& test, int k, uint64_t seed,
                           const Embedder* embedder) {
  return build_standard(ds.examples, test.input_text, k, seed, ds.markers, cap_for(ds),
                        embedder);
}

json run_q1(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("capitals");
  const int k = ctx.config.k > 0 ? ctx.config.k : 6;

  auto with_similar = [&](InsertMode mode) {
    return [&, mode](int i, const Example& ex, uint64_t seed) {
      uint64_t sub = mix_seed(seed, static_cast<uint64_t>(i));
      PromptSpec spec = standard_prompt(ds, ex, k - 1, sub, &ctx.embedder);
      StableRng rng(mix_seed(sub, 0x51));
      return insert_similar_test(spec, ex.label_text, ds.label_space, mode, rng).spec;
    };
  };
  auto no_similar = [&](int i, const Example& ex, uint64_t seed) {
    return standard_prompt(ds, ex, k, mix_seed(seed, static_cast<uint64_t>(i)), &ctx.embedder);
  };

  AccuracyResult correct = accuracy(ds, with_similar(InsertMode::correct), ctx.config.seeds,
                                    ctx.model, ctx.config.max_samples, "similar_correct",
                                    &ctx.records);
  AccuracyResult incorrect = accuracy(ds, with_similar(InsertMode::incorrect), ctx.config.seeds,
                                      ctx.model, ctx.config.max_samples, "similar_incorrect",
                                      &ctx.records);
  AccuracyResult none = accuracy(ds, no_similar, ctx.config.seeds, ctx.model,
                                 ctx.config.max_samples, "no_similar", &ctx.records);

  json summary = ctx.base_summary(&ds);
  summary["k"] = k;
  auto acc_json = [](const AccuracyResult& a) {
    return json{{"mean", a.mean}, {"stdev", a.stdev}, {"per_seed", a.per_seed}};
  };
  summary["accuracy"] = {{"similar_correct", acc_json(correct)},
                         {"similar_incorrect", acc_json(incorrect)},
                         {"no_similar", acc_json(none)}};
  write_bar_chart((ctx.out_dir / "q1_accuracy.svg").string(),
                  "Accuracy with and without a similar example (" + ds.name + ", k=" +
                      std::to_string(k) + ")",
                  {"similar correct", "similar incorrect", "no similar"},
                  {correct.mean, incorrect.mean, none.mean}, "accuracy");
  return summary;
}

json run_q2_shots(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("capitals");
  if (ds.instruction.empty())
    throw std::runtime_error("q2_shots: dataset " + ds.name + " has no zero-shot instruction");

  json per_shot = json::array();
  std::vector<std::string> labels;
  std::vector<double> means;
  for (int shots : ctx.config.shot_list) {
    auto builder = [&, shots](int i, const Example& ex, uint64_t seed) {
      if (shots == 0) {
        PromptSpec spec;
        spec.markers = ds.markers;
        spec.test_input = ex.input_text;
        spec.instruction = ds.instruction;
        return spec;
      }
      return standard_prompt(ds, ex, shots, mix_seed(seed, static_cast<uint64_t>(i)),
                             &ctx.embedder);
    };
    AccuracyResult acc = accuracy(ds, builder, ctx.config.seeds, ctx.model,
                                  ctx.config.max_samples, std::to_string(shots) + "_shot",
                                  &ctx.records);
    per_shot.push_back({{"shots", shots},
                        {"mean", acc.mean},
                        {"stdev", acc.stdev},
                        {"per_seed", acc.per_seed}});
    labels.push_back(std::to_string(shots));
    means.push_back(acc.mean);
  }

  json summary = ctx.base_summary(&ds);
  summary["zero_shot_uses_instruction"] = true;
  summary["accuracy_by_shots"] = per_shot;
  write_line_chart((ctx.out_dir / "q2_shots.svg").string(),
                   "Accuracy by shot count (" + ds.name + ")", labels,
                   {{"accuracy", means}}, "accuracy");
  return summary;
}

json run_q2_random_labels(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("capitals");
  const int k = ctx.config.k > 0 ? ctx.config.k : 6;

  auto correct = [&](int i, const Example& ex, uint64_t seed) {
    return standard_prompt(ds, ex, k, mix_seed(seed, static_cast<uint64_t>(i)), &ctx.embedder);
  };
  auto randomized = [&](int i, const Example& ex, uint64_t seed) {
    uint64_t sub = mix_seed(seed, static_cast<uint64_t>(i));
    PromptSpec spec = standard_prompt(ds, ex, k, sub, &ctx.embedder);
    StableRng rng(mix_seed(sub, 0x52));
    return randomize_labels(spec, ds.label_space.labels, rng);
  };

  AccuracyResult acc_correct = accuracy(ds, correct, ctx.config.seeds, ctx.model,
                                        ctx.config.max_samples, "correct_labels", &ctx.records);
  AccuracyResult acc_random = accuracy(ds, randomized, ctx.config.seeds, ctx.model,
                                       ctx.config.max_samples, "random_labels", &ctx.records);

  json summary = ctx.base_summary(&ds);
  summary["k"] = k;
  summary["accuracy"] = {
      {"correct_labels",
       {{"mean", acc_correct.mean}, {"stdev", acc_correct.stdev}, {"per_seed", acc_correct.per_seed}}},
      {"random_labels",
       {{"mean", acc_random.mean}, {"stdev", acc_random.stdev}, {"per_seed", acc_random.per_seed}}}};
  write_bar_chart((ctx.out_dir / "q2_random_labels.svg").string(),
                  "Correct vs random in-space labels (" + ds.name + ", k=" + std::to_string(k) +
                      ")",
                  {"correct", "random"}, {acc_correct.mean, acc_random.mean}, "accuracy");
  return summary;
}

json run_q3_position(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("triplets-emo");
  PositionalHistogram hist = position_preference(ds, ctx.model, ctx.config.seeds,
                                                 ctx.config.max_samples, &ctx.records);

  json summary = ctx.base_summary(&ds);
  summary["k"] = ds.label_space.labels.size();
  summary["instruction"] = label_menu_instruction(ds.label_space);
  summary["histogram"] = {{"counts", hist.counts}, {"other_count", hist.other_count},
                          {"total", hist.total()}};
  std::vector<std::string> labels;
  std::vector<double> shares;
  for (size_t i = 0; i < hist.counts.size(); ++i) {
    labels.push_back("pos " + std::to_string(i));
    shares.push_back(static_cast<double>(hist.counts[i]) / hist.total());
  }
  labels.push_back("other");
  shares.push_back(static_cast<double>(hist.other_count) / hist.total());
  summary["shares"] = shares;
  write_bar_chart((ctx.out_dir / "q3_position.svg").string(),
                  "Predicted label by demo position (" + ds.name + ")", labels, shares,
                  "share of predictions");
  return summary;
}

json run_q4_copy(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("triplets-emo");
  const int k = ctx.config.k > 0 ? ctx.config.k : 12;
  double rate = copy_rate_run(ds, ctx.model, k, ctx.config.seeds, ctx.config.max_samples,
                              &ctx.records);
  double baseline = 1.0 / static_cast<double>(ds.label_space.labels.size());

  json summary = ctx.base_summary(&ds);
  summary["k"] = k;
  summary["copy_rate"] = rate;
  summary["uniform_baseline"] = baseline;
  summary["ratio_over_baseline"] = rate / baseline;
  write_bar_chart((ctx.out_dir / "q4_copy.svg").string(),
                  "Similar(T)-incorrect copy rate (" + ds.name + ", k=" + std::to_string(k) + ")",
                  {"copy rate", "uniform baseline"}, {rate, baseline}, "rate");
  return summary;
}

json run_triplets(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("triplets-sst2");
  LsbProportions props = lsb_preference(ds, ctx.model, ctx.config.seeds, ctx.config.repeats,
                                        ctx.config.max_samples, &ctx.records);
  json summary = ctx.base_summary(&ds);
  summary["repeats"] = ctx.config.repeats;
  summary["proportions"] = {{"l", props.l}, {"s", props.s}, {"b", props.b},
                            {"others", props.others}};
  write_bar_chart((ctx.out_dir / "triplets_lsb.svg").string(),
                  "Prediction shares over l/s/b triplet prompts (" + ds.name + ")",
                  {"l (lexical)", "s (semantic)", "b (baseline)", "others"},
                  {props.l, props.s, props.b, props.others}, "share");
  return summary;
}

// the one-shot question-classification case study: the same prompt measured
// without and with the task-description instruction
json run_instruction(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("triplets-trec");
  if (ds.instruction.empty())
    throw std::runtime_error("instruction: dataset " + ds.name + " has no instruction text");

  PromptSpec spec;
  spec.markers = {"Question:", "Label:"};
  spec.demos.push_back({"Who killed Gandhi?", "Human"});
  spec.test_input = "What is a fear of shadows?";

  std::string target_surface = ds.task_token.empty() ? "question" : ds.task_token;
  TaskToken target = resolve_task_token(ctx.model.tokenizer(), target_surface,
                                        ds.sub_token_policy);

  auto measure = [&](const PromptSpec& s) {
    TokenSequence tokens = ctx.model.tokenize(render(s));
    LabelPositions anchors = locate_label_positions(s, tokens, ctx.model.tokenizer());
    CaptureRequest req;
    req.positions = anchors.demo_label_positions;
    CaptureResult capture = ctx.model.forward_capture(tokens, req);
    return rank_profile(capture, ctx.model, anchors.demo_label_positions.at(0), target);
  };

  RankProfile without = measure(spec);
  RankProfile with = measure(prepend_instruction(spec, ds.instruction));
  PIRValue pir_without = pir(without);
  PIRValue pir_with = pir(with);

  json summary = ctx.base_summary(&ds);
  summary["prompt"] = render(spec);
  summary["instruction"] = ds.instruction;
  summary["target"] = target.surface;
  summary["without_instruction"] = profile_to_json(without);
  summary["with_instruction"] = profile_to_json(with);
  summary["pir_gain"] = pir_with.value - pir_without.value;

  std::vector<std::string> layer_labels;
  Series s_without{"without instruction", {}};
  Series s_with{"with instruction", {}};
  for (size_t l = 0; l < without.ranks.size(); ++l) {
    layer_labels.push_back(std::to_string(l + 1));
    s_without.ys.push_back(1.0 / without.ranks[l]);
    s_with.ys.push_back(1.0 / with.ranks[l]);
  }
  write_line_chart((ctx.out_dir / "instruction_pir.svg").string(),
                   "Inverse rank of \"" + target.surface + "\" by layer", layer_labels,
                   {s_without, s_with}, "1 / rank");

  ctx.records.push_back({"case_study", 0, "", "", "without_instruction"});
  ctx.records.push_back({"case_study", 0, "", "", "with_instruction"});
  return summary;
}

json run_generation_sweep(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("svo-translation");
  if (ds.examples.size() < 2)
    throw std::runtime_error("generation_sweep: corpus needs at least 2 examples");

  PromptSpec spec;
  spec.markers = ds.markers;
  for (size_t i = 0; i + 1 < ds.examples.size(); ++i) spec.demos.push_back(ds.examples[i]);
  spec.test_input = ds.examples.back().input_text;

  RenderedSpec rendered = render_with_anchors(spec);
  std::vector<size_t> offsets;
  TokenSequence tokens = ctx.model.tokenizer().tokenize_with_offsets(rendered.text, &offsets);

  // token span of the final demo label, the last completed label sentence;
  // overlap semantics, since the first label token absorbs the leading space
  auto [begin, end] = rendered.label_ranges.back();
  std::vector<int> positions;
  std::vector<std::string> token_texts;
  for (size_t t = 0; t < offsets.size(); ++t) {
    size_t tok_begin = offsets[t];
    size_t tok_end = t + 1 < offsets.size() ? offsets[t + 1] : rendered.text.size();
    if (tok_end > begin && tok_begin < end) {
      positions.push_back(static_cast<int>(t));
      token_texts.push_back(ctx.model.tokenizer().token_text(tokens.token_ids[t]));
    }
  }
  if (positions.empty())
    throw std::runtime_error("generation_sweep: label sentence positions unresolvable");

  CaptureRequest req;
  req.positions = positions;
  CaptureResult capture = ctx.model.forward_capture(tokens, req);

  const std::vector<std::string> targets = {"subject", "verb", "object"};
  json curves = json::array();
  std::vector<Series> series;
  json argmaxes = json::array();
  for (const std::string& surface : targets) {
    TaskToken target = resolve_task_token(ctx.model.tokenizer(), surface);
    std::vector<PIRValue> sweep = pir_sweep(capture, ctx.model, positions, target);
    Series s{surface, {}};
    size_t best = 0;
    json curve = json::array();
    for (size_t i = 0; i < sweep.size(); ++i) {
      s.ys.push_back(sweep[i].value);
      if (sweep[i].value > sweep[best].value) best = i;
      curve.push_back({{"position", positions[i]},
                       {"token", token_texts[i]},
                       {"pir", sweep[i].value},
                       {"peak_layer", sweep[i].peak_layer}});
    }
    series.push_back(std::move(s));
    curves.push_back({{"target", surface}, {"curve", curve}});
    argmaxes.push_back({{"target", surface},
                        {"position", positions[best]},
                        {"token", token_texts[best]}});
    ctx.records.push_back({"label_sentence", 0, token_texts[best], surface,
                           "generation_sweep_argmax"});
  }

  json summary = ctx.base_summary(&ds);
  summary["prompt"] = rendered.text;
  summary["label_sentence_tokens"] = token_texts;
  summary["curves"] = curves;
  summary["argmax_positions"] = argmaxes;
  write_line_chart((ctx.out_dir / "generation_sweep.svg").string(),
                   "PIR across the final label sentence", token_texts, series, "PIR");
  return summary;
}

json run_diagnose(RunContext& ctx) {
  DatasetBundle ds = ctx.dataset("capitals");
  PromptSpec spec;
  if (!ctx.config.prompt_json.empty()) {
    std::ifstream is(ctx.config.prompt_json);
    if (!is) throw std::runtime_error("diagnose: cannot open " + ctx.config.prompt_json);
    spec = spec_from_json(json::parse(is));
  } else {
    int idx = ctx.config.sample_index;
    if (idx < 0 || idx >= static_cast<int>(ds.examples.size()))
      throw std::runtime_error("diagnose: sample index out of range");
    const Example& ex = ds.examples[static_cast<size_t>(idx)];
    int k = ctx.config.k > 0 ? ctx.config.k : 1;
    spec = standard_prompt(ds, ex, k, mix_seed(ctx.config.seeds.at(0),
                                               static_cast<uint64_t>(idx)), &ctx.embedder);
  }

  TaskToken target = resolve_task_token(ctx.model.tokenizer(),
                                        ds.task_token.empty() ? "capital" : ds.task_token,
                                        ds.sub_token_policy);
  QuadrantReport report = diagnose(spec, target, ctx.model, &ctx.embedder,
                                   ctx.config.thresholds);

  json summary = ctx.base_summary(&ds);
  summary["prompt"] = render(spec);
  summary["target"] = target.surface;
  summary["report"] = report_to_json(report);
  std::ofstream os(ctx.out_dir / "quadrant.json");
  os << report_to_json(report).dump(2) << "\n";
  ctx.records.push_back({"diagnose", ctx.config.seeds.at(0),
                         quadrant_name(report.coord.quadrant), "", "diagnose"});
  return summary;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.experiment = j.value("experiment", "");
  c.model_path = j.value("model_path", "");
  c.dataset_id = j.value("dataset_id", "");
  c.k = j.value("k", -1);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  if (j.contains("thresholds")) {
    c.thresholds.tau_y = j.at("thresholds").value("tau_y", c.thresholds.tau_y);
    c.thresholds.tau_x = j.at("thresholds").value("tau_x", c.thresholds.tau_x);
  }
  c.output_dir = j.value("output_dir", c.output_dir);
  c.max_samples = j.value("max_samples", c.max_samples);
  if (j.contains("shot_list")) c.shot_list = j.at("shot_list").get<std::vector<int>>();
  c.data_dir = j.value("data_dir", "");
  c.prompt_json = j.value("prompt_json", "");
  c.sample_index = j.value("sample_index", 0);
  c.repeats = j.value("repeats", 3);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  return json{{"experiment", c.experiment},
              {"model_path", c.model_path},
              {"dataset_id", c.dataset_id},
              {"k", c.k},
              {"seeds", c.seeds},
              {"thresholds", {{"tau_y", c.thresholds.tau_y}, {"tau_x", c.thresholds.tau_x}}},
              {"output_dir", c.output_dir},
              {"max_samples", c.max_samples},
              {"shot_list", c.shot_list},
              {"data_dir", c.data_dir},
              {"prompt_json", c.prompt_json},
              {"sample_index", c.sample_index},
              {"repeats", c.repeats}};
}

json run_experiment(const ExperimentConfig& config) {
  if (config.model_path.empty())
    throw std::invalid_argument("run_experiment: model_path is required");
  RunContext ctx(config, GptModel::load(config.model_path));

  json summary;
  if (config.experiment == "q1") summary = run_q1(ctx);
  else if (config.experiment == "q2_shots") summary = run_q2_shots(ctx);
  else if (config.experiment == "q2_random_labels") summary = run_q2_random_labels(ctx);
  else if (config.experiment == "q3_position") summary = run_q3_position(ctx);
  else if (config.experiment == "q4_copy") summary = run_q4_copy(ctx);
  else if (config.experiment == "triplets") summary = run_triplets(ctx);
  else if (config.experiment == "instruction") summary = run_instruction(ctx);
  else if (config.experiment == "generation_sweep") summary = run_generation_sweep(ctx);
  else if (config.experiment == "diagnose") summary = run_diagnose(ctx);
  else
    throw std::invalid_argument("run_experiment: unknown experiment " + config.experiment);

  ctx.finish(summary);
  return summary;
}

}  // namespace icl
