#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/desk.hpp"
#include "pptlab/error.hpp"
#include "pptlab/fewshot.hpp"
#include "pptlab/harness.hpp"
#include "pptlab/report.hpp"
#include "pptlab/synthetic.hpp"
#include "pptlab/training.hpp"

namespace fs = std::filesystem;
using namespace pptlab;

namespace {

struct Globals {
  std::string config;
  fs::path workdir = "pptlab_work";
};

std::string flag_name(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// Fills options of `app` that were not given on the command line.
void apply_config(CLI::App& app, const nlohmann::json& values) {
  for (const auto& [key, value] : values.items()) {
    if (value.is_object()) continue;
    auto* opt = app.get_option_no_throw(flag_name(key));
    if (!opt || opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(scalar_text(v));
    } else {
      opt->add_result(scalar_text(value));
    }
    opt->run_callback();
  }
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed config " + path + ": " + e.what());
  }
}

fs::path or_default(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback : fs::path(value);
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    const auto item = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error("not a number: '" + item + "'");
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump() << "\n"; }

// ------------------------------------------------------------ subcommands

struct GenCorpusArgs {
  std::string kind = "synthetic";
  std::size_t docs = 400;
  std::size_t sentences = 6;
  std::uint64_t seed = 1;
  std::string out;
};

void run_gen_corpus(const GenCorpusArgs& a) {
  if (a.out.empty()) throw Error("missing required option --out");
  std::vector<Document> corpus;
  if (a.kind == "synthetic") {
    SyntheticCorpusConfig c;
    c.n_docs = a.docs;
    c.sentences_per_doc = a.sentences;
    c.seed = a.seed;
    corpus = synthetic_corpus(c);
  } else if (a.kind == "reviews") {
    corpus = synthetic_review_corpus(a.docs, a.sentences, a.seed);
  } else {
    throw Error("unknown corpus kind '" + a.kind + "' (synthetic, reviews)");
  }
  std::vector<std::pair<std::string, std::string>> records;
  for (const auto& d : corpus) {
    std::string text;
    for (const auto& sentence : d.sentences) text += (text.empty() ? "" : " ") + sentence + " .";
    records.emplace_back(d.id, text);
  }
  write_corpus_jsonl(a.out, records);
  print_json({{"documents", corpus.size()}, {"out", a.out}});
}

struct GenTaskArgs {
  std::string corpus;
  std::size_t train_pool = 400;
  std::size_t test = 300;
  std::uint64_t seed = 1;
  std::string out;
};

void run_gen_task(const GenTaskArgs& a) {
  if (a.corpus.empty() || a.out.empty()) throw Error("gen-task needs --corpus and --out");
  const auto corpus = load_corpus_jsonl(a.corpus);
  const auto records = synthetic_next_sentence_task(corpus, a.train_pool, a.test, a.seed);
  write_downstream_jsonl(a.out, records);
  print_json({{"records", records.size()}, {"out", a.out}});
}

struct BuildDataArgs {
  std::string corpus;
  std::string task;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;
  int num_options = 6;
  std::string thresholds;
  double valid_fraction = 0.05;
};

void run_build_data(const BuildDataArgs& a) {
  if (a.corpus.empty() || a.task.empty() || a.out.empty()) throw Error("build-data needs --corpus, --task and --out");
  const auto corpus = load_corpus_jsonl(a.corpus);
  std::vector<PretrainExample> examples;
  nlohmann::ordered_json summary;
  if (a.task == "spc") {
    examples = build_nsp3(corpus, a.n, a.seed);
  } else if (a.task == "mcc") {
    examples = build_nss(corpus, a.n, a.seed, a.num_options);
  } else if (a.task == "unified") {
    examples = build_unified_mc(corpus, a.n, a.seed);
  } else if (a.task == "ssc") {
    auto thresholds = kDefaultSscThresholds;
    if (!a.thresholds.empty()) {
      const auto values = parse_doubles(a.thresholds);
      if (values.size() != 5) throw Error("--thresholds needs five values");
      std::copy(values.begin(), values.end(), thresholds.begin());
    }
    auto r = build_pseudo_ssc(corpus, lexicon_annotator, a.n, a.seed, thresholds);
    summary["candidates"] = r.candidates;
    summary["accepted"] = r.accepted;
    summary["warnings"] = r.warnings;
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    examples = std::move(r.examples);
  } else {
    throw Error("unknown task '" + a.task + "' (spc, mcc, ssc, unified)");
  }
  const auto n_examples = examples.size();
  const auto split = split_validation(std::move(examples), a.valid_fraction, a.seed);
  write_dataset(a.out, a.task, split);
  summary["examples"] = n_examples;
  summary["train"] = split.train.size();
  summary["valid"] = split.valid.size();
  summary["out"] = a.out;
  print_json(summary);
}

struct InitModelArgs {
  std::string corpus;
  std::size_t vocab_size = 2048;
  int d_model = 64;
  int layers = 2;
  int heads = 4;
  int d_ff = 256;
  int max_len = 512;
  std::uint64_t seed = 0;
  std::string out;
};

void run_init_model(const InitModelArgs& a, const Globals& g) {
  if (a.corpus.empty()) throw Error("missing required option --corpus");
  const auto corpus = load_corpus_jsonl(a.corpus);
  std::vector<std::string> texts;
  for (const auto& d : corpus) texts.insert(texts.end(), d.sentences.begin(), d.sentences.end());
  const auto reserved = reserved_words();
  auto vocab = Vocabulary::build(texts, a.vocab_size, reserved);
  ModelConfig mc;
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.d_model = a.d_model;
  mc.n_layers_enc = a.layers;
  mc.n_layers_dec = a.layers;
  mc.n_heads = a.heads;
  mc.d_ff = a.d_ff;
  mc.max_len = a.max_len;
  const auto model = Transformer<float>::init(mc, a.seed);
  const auto out = or_default(a.out, g.workdir / "model.bin");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_model(out, model, vocab);
  print_json({{"vocab", vocab.size()}, {"parameters", model.num_params()}, {"out", out.string()}});
}

struct LmArgs {
  std::string model;
  std::string corpus;
  std::string out;
  LmConfig cfg;
  std::string log;
};

void run_lm_adapt(const LmArgs& a, const Globals& g) {
  if (a.corpus.empty()) throw Error("missing required option --corpus");
  const auto bundle = load_model(or_default(a.model, g.workdir / "model.bin"));
  const auto corpus = load_corpus_jsonl(a.corpus);
  const auto seqs = document_sequences(corpus, bundle.vocab);
  std::optional<TrainLog> log;
  if (!a.log.empty()) log.emplace(a.log);
  const auto r = lm_adapt(bundle.model, seqs, a.cfg, log ? &*log : nullptr);
  const auto out = or_default(a.out, g.workdir / "model_lm.bin");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_model(out, r.model, bundle.vocab);
  print_json({{"valid_loss_before", r.valid_loss_before}, {"valid_loss_after", r.valid_loss_after},
              {"out", out.string()}});
}

struct PretrainArgs {
  std::string data;
  std::string name;
  std::string model;
  std::string out;
  std::size_t prompt_length = kDefaultPromptLength;
  PretrainConfig cfg;
  std::string log;
};

// The single <name>.train.jsonl in `dir` unless a name is given.
std::string dataset_name(const fs::path& dir, const std::string& name) {
  if (!name.empty()) return name;
  std::vector<std::string> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto file = entry.path().filename().string();
    const std::string suffix = ".train.jsonl";
    if (file.size() > suffix.size() && file.compare(file.size() - suffix.size(), suffix.size(), suffix) == 0) {
      found.push_back(file.substr(0, file.size() - suffix.size()));
    }
  }
  if (found.size() != 1) throw Error("expected exactly one *.train.jsonl in " + dir.string() + "; pass --name");
  return found.front();
}

void run_pretrain(const PretrainArgs& a, const Globals& g) {
  if (a.data.empty()) throw Error("missing required option --data");
  const auto bundle = load_model(or_default(a.model, g.workdir / "model.bin"));
  const auto name = dataset_name(a.data, a.name);
  const auto train_ex = read_examples_jsonl(fs::path(a.data) / (name + ".train.jsonl"));
  const auto valid_ex = read_examples_jsonl(fs::path(a.data) / (name + ".valid.jsonl"));
  if (train_ex.empty()) throw Error("no pre-training examples in " + a.data);
  std::vector<Seq2SeqExample> train, valid;
  for (const auto& e : train_ex) train.push_back(encode_pretrain_example(e, bundle.vocab));
  for (const auto& e : valid_ex) valid.push_back(encode_pretrain_example(e, bundle.vocab));
  const auto group = prompt_group(Method::PPT, train_ex.front().task);
  const auto init = init_soft_prompt(PromptInit::Random, bundle.model, a.prompt_length, {}, a.cfg.seed).prompt;
  std::optional<TrainLog> log;
  if (!a.log.empty()) log.emplace(a.log);
  const auto r = pretrain_prompt(bundle.model, init, train, valid, a.cfg, log ? &*log : nullptr);
  const auto out = or_default(a.out, prompt_checkpoint_path(g.workdir, group));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_prompt(out, r.prompt);
  print_json({{"group", group},
              {"best_step", r.best_step},
              {"best_valid_loss", r.best_valid_loss},
              {"train", train.size()},
              {"valid", valid.size()},
              {"out", out.string()}});
}

struct TuneArgs {
  std::string method;
  std::string task;
  std::string name;
  std::vector<std::uint64_t> seeds;
  std::size_t samples = kFewShotSamples;
  bool f1 = false;
  std::string model;
  std::string lm_model;
  std::string results;
  std::string lr_grid;
  std::string ft_lr_grid;
  std::string size_tag = "small";
  std::size_t prompt_length = kDefaultPromptLength;
  int epochs = 50;
  std::size_t batch = 16;
  std::int64_t eval_every = 6;
};

void run_tune(const TuneArgs& a, const Globals& g) {
  if (a.method.empty() || a.task.empty()) throw Error("tune needs --method and --task");
  ExperimentSpec spec;
  spec.method = parse_method(a.method);
  spec.task = a.name.empty() ? fs::path(a.task).stem().string() : a.name;
  if (!a.seeds.empty()) spec.seeds = a.seeds;
  spec.samples = a.samples;
  spec.report_f1 = a.f1;

  ExperimentConfig cfg;
  cfg.workdir = g.workdir;
  cfg.size_tag = a.size_tag;
  cfg.prompt_length = a.prompt_length;
  cfg.tune.epochs = a.epochs;
  cfg.tune.batch_size = a.batch;
  cfg.tune.eval_every = a.eval_every;
  if (!a.lr_grid.empty()) cfg.tune.lr_grid = parse_doubles(a.lr_grid);
  if (!a.ft_lr_grid.empty()) cfg.ft_lr_grid = parse_doubles(a.ft_lr_grid);

  const auto data = load_dataset(a.task);
  const auto bundle = load_model(or_default(a.model, g.workdir / "model.bin"));
  std::optional<ModelBundle> lm;
  if (spec.method == Method::LMAdaption) lm = load_model(or_default(a.lm_model, g.workdir / "model_lm.bin"));
  const ExperimentContext ctx{&bundle.model, lm ? &lm->model : nullptr, &bundle.vocab};

  const auto result = run_experiment(spec, data, cfg, ctx);
  const auto results = or_default(a.results, g.workdir / "results.jsonl");
  if (results.has_parent_path()) fs::create_directories(results.parent_path());
  append_result(results, result);
  print_json({{"method", result.method},
              {"task", result.task},
              {"seeds", result.seeds},
              {"per_seed", result.per_seed},
              {"mean", result.mean},
              {"std", result.std},
              {"results", results.string()}});
}

struct DeskArgs {
  std::vector<std::uint64_t> seeds;
  std::int64_t lm_steps = 1000;
  std::int64_t cue_steps = 3000;
  std::int64_t pretrain_steps = 2000;
  std::string results;
};

void run_desk(const DeskArgs& a, const Globals& g) {
  DeskExperimentConfig cfg;
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  cfg.lm.steps = a.lm_steps;
  cfg.cue.steps = a.cue_steps;
  cfg.pretrain.steps = a.pretrain_steps;
  cfg.workdir = g.workdir / "desk";
  const auto r = run_desk_experiment(cfg, [](const std::string& msg) { std::cerr << msg << "\n"; });
  const auto results = or_default(a.results, g.workdir / "results.jsonl");
  if (results.has_parent_path()) fs::create_directories(results.parent_path());
  append_result(results, r.pt);
  append_result(results, r.ppt);
  print_json({{"pt", {{"per_seed", r.pt_test}, {"mean", r.pt.mean}, {"std", r.pt.std}}},
              {"ppt", {{"per_seed", r.ppt_test}, {"mean", r.ppt.mean}, {"std", r.ppt.std}}},
              {"pretrain_valid_accuracy", r.pretrain_valid_accuracy},
              {"results", results.string()}});
}

struct EvalArgs {
  std::string task;
  std::string model;
  std::string prompt;
  std::string method = "pt";
};

void run_eval(const EvalArgs& a, const Globals& g) {
  if (a.task.empty()) throw Error("missing required option --task");
  const auto data = load_dataset(a.task);
  const auto bundle = load_model(or_default(a.model, g.workdir / "model.bin"));
  const auto method = parse_method(a.method);
  FewShotSplit all;
  all.test = data.test_pool;
  const auto view = method_view(method, data.format, data.n_class, all);
  const auto vids = view.verbalizer.bind(bundle.vocab);
  std::vector<Seq2SeqExample> test;
  std::vector<int> gold;
  for (const auto& inst : view.test) {
    if (!inst.label) throw Error("test instance without label");
    test.push_back(encode_instance(view.pattern, vids, inst, bundle.vocab));
    gold.push_back(*inst.label);
  }
  std::optional<SoftPrompt> prompt;
  if (!a.prompt.empty()) prompt = load_prompt(a.prompt);
  const auto pred = predict(bundle.model, prompt ? &prompt->values : nullptr, test, vids);
  print_json({{"task", fs::path(a.task).stem().string()},
              {"n", test.size()},
              {"accuracy", accuracy(pred, gold)},
              {"macro_f1", macro_f1(pred, gold, data.n_class)}});
}

struct ReportArgs {
  std::string layout = "main";
  std::string in;
  std::string out;
};

void run_report(const ReportArgs& a, const Globals& g) {
  const auto in = or_default(a.in, g.workdir / "results.jsonl");
  const auto out = or_default(a.out, g.workdir / "report");
  const auto results = merge_cells(load_results(in));
  fs::create_directories(out);
  const auto layout = parse_layout(a.layout);
  const auto rep = emit_report(results, layout, out);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << rep.markdown;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pptlab: prompt pre-training experiments"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Globals g;
  std::string workdir = g.workdir.string();
  app.add_option("--config", g.config, "JSON file with option values (flags take precedence)");
  app.add_option("--workdir", workdir, "Artifact directory")->capture_default_str();

  GenCorpusArgs gc;
  auto* gen_corpus = app.add_subcommand("gen-corpus", "Write a synthetic corpus as JSONL");
  gen_corpus->add_option("--kind", gc.kind, "synthetic or reviews")->capture_default_str();
  gen_corpus->add_option("--docs", gc.docs)->capture_default_str();
  gen_corpus->add_option("--sentences", gc.sentences)->capture_default_str();
  gen_corpus->add_option("--seed", gc.seed)->capture_default_str();
  gen_corpus->add_option("--out", gc.out);

  GenTaskArgs gt;
  auto* gen_task = app.add_subcommand("gen-task", "Write a next-sentence downstream task from a corpus");
  gen_task->add_option("--corpus", gt.corpus);
  gen_task->add_option("--train-pool", gt.train_pool)->capture_default_str();
  gen_task->add_option("--test", gt.test)->capture_default_str();
  gen_task->add_option("--seed", gt.seed)->capture_default_str();
  gen_task->add_option("--out", gt.out);

  BuildDataArgs bd;
  auto* build = app.add_subcommand("build-data", "Build a pre-training dataset");
  build->add_option("--corpus", bd.corpus, "Corpus JSONL");
  build->add_option("--task", bd.task, "spc, mcc, ssc or unified");
  build->add_option("--n", bd.n)->capture_default_str();
  build->add_option("--seed", bd.seed)->capture_default_str();
  build->add_option("--out", bd.out, "Output directory");
  build->add_option("--num-options", bd.num_options)->capture_default_str();
  build->add_option("--thresholds", bd.thresholds, "Five comma-separated SSC thresholds");
  build->add_option("--valid-fraction", bd.valid_fraction)->capture_default_str();

  InitModelArgs im;
  auto* init = app.add_subcommand("init-model", "Build a vocabulary and a randomly initialized backbone");
  init->add_option("--corpus", im.corpus);
  init->add_option("--vocab-size", im.vocab_size)->capture_default_str();
  init->add_option("--d-model", im.d_model)->capture_default_str();
  init->add_option("--layers", im.layers)->capture_default_str();
  init->add_option("--heads", im.heads)->capture_default_str();
  init->add_option("--d-ff", im.d_ff)->capture_default_str();
  init->add_option("--max-len", im.max_len)->capture_default_str();
  init->add_option("--seed", im.seed)->capture_default_str();
  init->add_option("--out", im.out, "Default <workdir>/model.bin");

  LmArgs lm;
  auto* lm_cmd = app.add_subcommand("lm-adapt", "Span-corruption training of the backbone");
  lm_cmd->add_option("--model", lm.model, "Default <workdir>/model.bin");
  lm_cmd->add_option("--corpus", lm.corpus);
  lm_cmd->add_option("--out", lm.out, "Default <workdir>/model_lm.bin");
  lm_cmd->add_option("--steps", lm.cfg.steps)->capture_default_str();
  lm_cmd->add_option("--batch", lm.cfg.batch_size)->capture_default_str();
  lm_cmd->add_option("--lr", lm.cfg.lr)->capture_default_str();
  lm_cmd->add_option("--seed", lm.cfg.seed)->capture_default_str();
  lm_cmd->add_option("--log", lm.log, "Training log JSONL");

  PretrainArgs pa;
  auto* pre = app.add_subcommand("pretrain", "Pre-train a soft prompt with the backbone frozen");
  pre->add_option("--data", pa.data, "Directory written by build-data");
  pre->add_option("--name", pa.name, "Dataset name inside --data");
  pre->add_option("--model", pa.model, "Default <workdir>/model.bin");
  pre->add_option("--out", pa.out, "Default <workdir>/prompts/<group>.ppt");
  pre->add_option("--prompt-length", pa.prompt_length)->capture_default_str();
  pre->add_option("--steps", pa.cfg.steps)->capture_default_str();
  pre->add_option("--batch", pa.cfg.batch_size)->capture_default_str();
  pre->add_option("--eval-every", pa.cfg.eval_every)->capture_default_str();
  pre->add_option("--lr", pa.cfg.lr)->capture_default_str();
  pre->add_option("--seed", pa.cfg.seed)->capture_default_str();
  pre->add_option("--log", pa.log, "Training log JSONL");

  TuneArgs ta;
  auto* tune = app.add_subcommand("tune", "Few-shot tuning of one method over seeds");
  tune->add_option("--method", ta.method, "ft, pt, hybrid-pt, lm-adaption, ppt, hybrid-ppt, unified-ppt, pt-mc");
  tune->add_option("--task", ta.task, "Downstream JSONL");
  tune->add_option("--name", ta.name, "Task name in reports (default: file stem)");
  tune->add_option("--seed", ta.seeds, "Repeatable; default 10 20 30 40 50");
  tune->add_option("--samples", ta.samples)->capture_default_str();
  tune->add_flag("--f1", ta.f1, "Report macro-F1");
  tune->add_option("--model", ta.model, "Default <workdir>/model.bin");
  tune->add_option("--lm-model", ta.lm_model, "Default <workdir>/model_lm.bin");
  tune->add_option("--results", ta.results, "Default <workdir>/results.jsonl");
  tune->add_option("--lr-grid", ta.lr_grid, "Comma-separated prompt-tuning grid");
  tune->add_option("--ft-lr-grid", ta.ft_lr_grid, "Comma-separated full-model grid");
  tune->add_option("--size-tag", ta.size_tag)->capture_default_str();
  tune->add_option("--prompt-length", ta.prompt_length)->capture_default_str();
  tune->add_option("--epochs", ta.epochs)->capture_default_str();
  tune->add_option("--batch", ta.batch)->capture_default_str();
  tune->add_option("--eval-every", ta.eval_every)->capture_default_str();
  tune->get_option("--seed")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  DeskArgs da;
  auto* desk = app.add_subcommand("desk", "Desk-scale PT vs PPT run on a generated corpus");
  desk->add_option("--seed", da.seeds, "Repeatable; default 10 20 30 40 50")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  desk->add_option("--lm-steps", da.lm_steps)->capture_default_str();
  desk->add_option("--cue-steps", da.cue_steps)->capture_default_str();
  desk->add_option("--pretrain-steps", da.pretrain_steps)->capture_default_str();
  desk->add_option("--results", da.results, "Default <workdir>/results.jsonl");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a backbone (and prompt) on a task's test pool");
  eval->add_option("--task", ea.task);
  eval->add_option("--model", ea.model, "Default <workdir>/model.bin");
  eval->add_option("--prompt", ea.prompt, "Soft prompt checkpoint");
  eval->add_option("--method", ea.method, "Selects the pattern")->capture_default_str();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Render results as CSV and Markdown tables");
  report->add_option("--layout", ra.layout, "main, uni, sweep or convergence")->capture_default_str();
  report->add_option("--in", ra.in, "Default <workdir>/results.jsonl");
  report->add_option("--out", ra.out, "Default <workdir>/report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    auto* sub = app.get_subcommands().front();
    if (!g.config.empty()) {
      const auto cfg = load_config(g.config);
      if (cfg.contains("workdir") && app.get_option("--workdir")->count() == 0) {
        workdir = cfg["workdir"].get<std::string>();
      }
      apply_config(*sub, cfg);
      if (cfg.contains(sub->get_name()) && cfg[sub->get_name()].is_object()) apply_config(*sub, cfg[sub->get_name()]);
    }
    g.workdir = workdir;

    if (sub == gen_corpus) run_gen_corpus(gc);
    else if (sub == gen_task) run_gen_task(gt);
    else if (sub == build) run_build_data(bd);
    else if (sub == init) run_init_model(im, g);
    else if (sub == lm_cmd) run_lm_adapt(lm, g);
    else if (sub == pre) run_pretrain(pa, g);
    else if (sub == tune) run_tune(ta, g);
    else if (sub == eval) run_eval(ea, g);
    else if (sub == desk) run_desk(da, g);
    else if (sub == report) run_report(ra, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
