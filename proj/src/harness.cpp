#include "pptlab/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/error.hpp"

namespace pptlab {
namespace {

struct MethodName {
  Method method;
  const char* cli;
  const char* display;
};

constexpr MethodName kMethods[] = {
    {Method::FT, "ft", "FT"},
    {Method::PT, "pt", "PT"},
    {Method::HybridPT, "hybrid-pt", "Hybrid PT"},
    {Method::LMAdaption, "lm-adaption", "LM Adaption"},
    {Method::PPT, "ppt", "PPT"},
    {Method::HybridPPT, "hybrid-ppt", "Hybrid PPT"},
    {Method::UnifiedPPT, "unified-ppt", "Unified PPT"},
    {Method::PT_MC, "pt-mc", "PT (MC)"},
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<int> labels_of(const std::vector<TaskInstance>& instances) {
  std::vector<int> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    if (!inst.label) throw Error("evaluation instance without label");
    out.push_back(*inst.label);
  }
  return out;
}

double score(const std::vector<int>& pred, const std::vector<int>& gold, int n_class, bool f1) {
  return f1 ? macro_f1(pred, gold, n_class) : accuracy(pred, gold);
}

}  // namespace

Method parse_method(std::string_view name) {
  const auto n = lower(name);
  for (const auto& m : kMethods) {
    if (n == m.cli || n == lower(m.display)) return m.method;
  }
  throw Error("unknown method '" + std::string(name) + "'");
}

std::string_view method_cli_name(Method m) {
  for (const auto& e : kMethods) {
    if (e.method == m) return e.cli;
  }
  return "?";
}

std::string_view method_display_name(Method m) {
  for (const auto& e : kMethods) {
    if (e.method == m) return e.display;
  }
  return "?";
}

bool is_prompt_method(Method m) { return m != Method::FT; }

bool uses_pretrained_prompt(Method m) {
  return m == Method::PPT || m == Method::HybridPPT || m == Method::UnifiedPPT;
}

std::string prompt_group(Method m, Format format) {
  if (m == Method::UnifiedPPT || m == Method::PT_MC || format == Format::UNIFIED_MC) return "UNIFIED";
  return std::string(to_string(format));
}

std::filesystem::path prompt_checkpoint_path(const std::filesystem::path& workdir, const std::string& group) {
  return workdir / "prompts" / (group + ".ppt");
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw Error("cannot aggregate an empty list");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

MethodView method_view(Method method, Format format, int n_class, const FewShotSplit& split) {
  const bool options = format == Format::MCC || format == Format::UNIFIED_MC;
  const auto builtin = options ? make_builtin_pvp(format, 0, n_class) : make_builtin_pvp(format, n_class);
  if (method == Method::UnifiedPPT || method == Method::PT_MC) {
    const auto unified = make_builtin_pvp(Format::UNIFIED_MC, 0, n_class);
    auto convert = [&](const std::vector<TaskInstance>& in) {
      std::vector<TaskInstance> out;
      out.reserve(in.size());
      for (const auto& inst : in) out.push_back(to_unified(format, inst, builtin.verbalizer));
      return out;
    };
    return {unified.pattern, unified.verbalizer, convert(split.train), convert(split.dev), convert(split.test)};
  }
  auto pattern = builtin.pattern;
  if (method == Method::HybridPT || method == Method::HybridPPT) {
    pattern = attach_hard_prompt(pattern, builtin_hard_prompt(format == Format::UNIFIED_MC ? Format::MCC : format, n_class));
  }
  return {pattern, builtin.verbalizer, split.train, split.dev, split.test};
}

SeedRun run_seed(const ExperimentSpec& spec, const DownstreamDataset& data, const ExperimentConfig& config,
                 const ExperimentContext& ctx, std::uint64_t seed, TrainLog* log) {
  if (!ctx.backbone || !ctx.vocab) throw Error("experiment context needs a backbone and a vocabulary");
  const auto split = sample_fewshot(data, seed, spec.samples);
  const auto view = method_view(spec.method, data.format, data.n_class, split);
  const auto& vocab = *ctx.vocab;
  const auto vids = view.verbalizer.bind(vocab);
  auto encode_all = [&](const std::vector<TaskInstance>& in) {
    std::vector<Seq2SeqExample> out;
    out.reserve(in.size());
    for (const auto& inst : in) out.push_back(encode_instance(view.pattern, vids, inst, vocab));
    return out;
  };
  const auto train = encode_all(view.train);
  const auto dev = encode_all(view.dev);
  const auto test = encode_all(view.test);
  if (test.empty()) throw Error("test pool is empty");
  const auto gold = labels_of(view.test);

  const Transformer<float>* backbone = ctx.backbone;
  if (spec.method == Method::LMAdaption) {
    if (!ctx.lm_adapted) throw Error("lm-adapted backbone not available");
    backbone = ctx.lm_adapted;
  }

  TuneConfig tune = config.tune;
  tune.seed = seed;
  if (spec.report_f1) tune.metric = Metric::MacroF1;

  SeedRun run;
  run.seed = seed;
  TuneResult result;
  if (spec.method == Method::FT) {
    tune.lr_grid = config.ft_lr_grid ? *config.ft_lr_grid : ft_lr_grid(config.size_tag);
    result = full_model_tune(*backbone, train, dev, vids, tune, log);
    run.test_metric = score(predict(*result.backbone, nullptr, test, vids), gold, data.n_class, spec.report_f1);
  } else {
    PromptInitContext pctx;
    pctx.random_std = config.random_prompt_std;
    PromptInit strategy = PromptInit::Random;
    if (uses_pretrained_prompt(spec.method)) {
      const auto group = prompt_group(spec.method, data.format);
      const auto path = prompt_checkpoint_path(config.workdir, group);
      if (!std::filesystem::exists(path)) throw Error("pre-trained prompt not found for group " + group);
      pctx.checkpoint = path;
      strategy = PromptInit::FromPretrained;
    }
    const auto init = init_soft_prompt(strategy, *backbone, config.prompt_length, pctx, seed).prompt;
    result = prompt_tune(*backbone, init, train, dev, vids, tune, log);
    run.test_metric = score(predict(*backbone, &result.prompt->values, test, vids), gold, data.n_class, spec.report_f1);
  }
  run.dev_metric = result.dev_metric;
  run.lr = result.lr;
  run.step = result.step;
  for (const auto& arm : result.arms) {
    if (arm.lr == result.lr) run.dev_curve = arm.dev_curve;
  }
  return run;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const DownstreamDataset& data,
                                const ExperimentConfig& config, const ExperimentContext& ctx) {
  if (spec.seeds.empty()) throw Error("no seeds given");
  ExperimentResult r;
  r.method = std::string(method_display_name(spec.method));
  r.task = spec.task.empty() ? data.name : spec.task;
  r.samples = spec.samples;
  r.metric = spec.report_f1 ? "macro_f1" : "accuracy";
  r.tunable_params = count_tunable(ctx.backbone->config(), is_prompt_method(spec.method) ? config.prompt_length : 0,
                                   is_prompt_method(spec.method) ? TuneMode::PT : TuneMode::FT);
  for (auto seed : spec.seeds) {
    const auto run = run_seed(spec, data, config, ctx, seed);
    r.seeds.push_back(seed);
    r.per_seed.push_back(run.test_metric);
    r.dev_curves.push_back(run.dev_curve);
  }
  const auto agg = aggregate(r.per_seed);
  r.mean = agg.mean;
  r.std = agg.std;
  return r;
}

ExperimentResult merge_results(std::span<const ExperimentResult> parts) {
  if (parts.empty()) throw Error("nothing to merge");
  ExperimentResult out = parts.front();
  out.seeds.clear();
  out.per_seed.clear();
  out.dev_curves.clear();
  std::map<std::uint64_t, std::size_t> seen;
  for (const auto& p : parts) {
    if (p.method != out.method || p.task != out.task || p.samples != out.samples || p.metric != out.metric) {
      throw Error("cannot merge results of different cells");
    }
    for (std::size_t i = 0; i < p.seeds.size(); ++i) {
      if (seen.count(p.seeds[i])) throw Error("duplicate seed " + std::to_string(p.seeds[i]));
      seen[p.seeds[i]] = out.seeds.size();
      out.seeds.push_back(p.seeds[i]);
      out.per_seed.push_back(p.per_seed[i]);
      out.dev_curves.push_back(i < p.dev_curves.size() ? p.dev_curves[i] : std::vector<CurvePoint>{});
    }
  }
  const auto agg = aggregate(out.per_seed);
  out.mean = agg.mean;
  out.std = agg.std;
  return out;
}

std::vector<ExperimentResult> merge_cells(std::span<const ExperimentResult> results) {
  std::vector<std::vector<ExperimentResult>> groups;
  for (const auto& r : results) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      const auto& f = g.front();
      return f.method == r.method && f.task == r.task && f.samples == r.samples && f.metric == r.metric;
    });
    if (it == groups.end()) groups.push_back({r});
    else it->push_back(r);
  }
  std::vector<ExperimentResult> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(merge_results(g));
  return out;
}

std::string result_to_json_line(const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["task"] = r.task;
  j["samples"] = r.samples;
  j["metric"] = r.metric;
  j["seeds"] = r.seeds;
  j["per_seed"] = r.per_seed;
  j["mean"] = r.mean;
  j["std"] = r.std;
  j["tunable_params"] = r.tunable_params;
  auto curves = nlohmann::ordered_json::array();
  for (const auto& c : r.dev_curves) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : c) arr.push_back({p.step, p.value});
    curves.push_back(std::move(arr));
  }
  j["dev_curves"] = std::move(curves);
  return j.dump();
}

ExperimentResult result_from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    ExperimentResult r;
    r.method = j.at("method").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.samples = j.value("samples", kFewShotSamples);
    r.metric = j.value("metric", std::string("accuracy"));
    r.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    r.per_seed = j.at("per_seed").get<std::vector<double>>();
    if (r.seeds.empty()) r.seeds.resize(r.per_seed.size());
    if (r.seeds.size() != r.per_seed.size()) throw Error("seeds and per_seed differ in length");
    r.tunable_params = j.value("tunable_params", std::size_t{0});
    if (j.contains("dev_curves")) {
      for (const auto& c : j.at("dev_curves")) {
        std::vector<CurvePoint> curve;
        for (const auto& p : c) curve.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<double>()});
        r.dev_curves.push_back(std::move(curve));
      }
    }
    const auto agg = aggregate(r.per_seed);
    r.mean = agg.mean;
    r.std = agg.std;
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed result record: ") + e.what());
  }
}

std::vector<ExperimentResult> load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results " + path.string());
  std::vector<ExperimentResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(result_from_json_line(line));
  }
  return out;
}

void append_result(const std::filesystem::path& path, const ExperimentResult& r) {
  std::string contents;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    contents.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (!contents.empty() && contents.back() != '\n') contents.push_back('\n');
  }
  contents += result_to_json_line(r) + "\n";
  write_file_atomic(path, contents);
}

}  // namespace pptlab
