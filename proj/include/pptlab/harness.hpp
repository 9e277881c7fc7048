#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pptlab/fewshot.hpp"
#include "pptlab/model.hpp"
#include "pptlab/soft_prompt.hpp"
#include "pptlab/training.hpp"

namespace pptlab {

enum class Method { FT, PT, HybridPT, LMAdaption, PPT, HybridPPT, UnifiedPPT, PT_MC };

/// CLI spelling: ft, pt, hybrid-pt, lm-adaption, ppt, hybrid-ppt,
/// unified-ppt, pt-mc (the display names are accepted too).
Method parse_method(std::string_view name);
std::string_view method_cli_name(Method m);
/// Row label used in reports.
std::string_view method_display_name(Method m);
/// Every method except FT keeps the backbone frozen.
bool is_prompt_method(Method m);
bool uses_pretrained_prompt(Method m);

inline const std::vector<std::uint64_t> kDefaultSeeds = {10, 20, 30, 40, 50};

/// Prompt group for a method/format pair: SPC, MCC, SSC or UNIFIED.
std::string prompt_group(Method m, Format format);
/// <workdir>/prompts/<group>.ppt
std::filesystem::path prompt_checkpoint_path(const std::filesystem::path& workdir, const std::string& group);

struct ExperimentSpec {
  Method method = Method::PT;
  std::string task;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::size_t samples = kFewShotSamples;
  bool report_f1 = false;  // macro-F1 as the test metric
};

struct ExperimentConfig {
  std::filesystem::path workdir = "pptlab_work";
  TuneConfig tune;                          // lr_grid is replaced for FT
  std::optional<std::vector<double>> ft_lr_grid;
  std::string size_tag = "small";
  std::size_t prompt_length = kDefaultPromptLength;
  double random_prompt_std = kRandomPromptStd;
};

/// Backbones and vocabulary shared by every run.
struct ExperimentContext {
  const Transformer<float>* backbone = nullptr;
  const Transformer<float>* lm_adapted = nullptr;  // for LMAdaption
  const Vocabulary* vocab = nullptr;
};

struct SeedRun {
  std::uint64_t seed = 0;
  double test_metric = 0.0;
  double dev_metric = 0.0;
  double lr = 0.0;
  std::int64_t step = 0;
  std::vector<CurvePoint> dev_curve;  // selected lr arm
};

struct ExperimentResult {
  std::string method;  // display name
  std::string task;
  std::size_t samples = kFewShotSamples;
  std::string metric = "accuracy";
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;
  std::size_t tunable_params = 0;
  std::vector<std::vector<CurvePoint>> dev_curves;  // parallel to seeds; may be empty
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
};

/// Arithmetic mean and population standard deviation.
Aggregate aggregate(std::span<const double> values);

/// The pattern, verbalizer and instances a method trains on.
struct MethodView {
  PatternTemplate pattern;
  Verbalizer verbalizer;
  std::vector<TaskInstance> train, dev, test;
};

MethodView method_view(Method method, Format format, int n_class, const FewShotSplit& split);

SeedRun run_seed(const ExperimentSpec& spec, const DownstreamDataset& data, const ExperimentConfig& config,
                 const ExperimentContext& ctx, std::uint64_t seed, TrainLog* log = nullptr);

ExperimentResult run_experiment(const ExperimentSpec& spec, const DownstreamDataset& data,
                                const ExperimentConfig& config, const ExperimentContext& ctx);

/// Combines single-seed results of one (method, task, samples) cell.
ExperimentResult merge_results(std::span<const ExperimentResult> parts);

/// Groups results by (method, task, samples, metric) in order of first
/// appearance and merges each group.
std::vector<ExperimentResult> merge_cells(std::span<const ExperimentResult> results);

std::string result_to_json_line(const ExperimentResult& r);
ExperimentResult result_from_json_line(std::string_view line);
std::vector<ExperimentResult> load_results(const std::filesystem::path& path);
void append_result(const std::filesystem::path& path, const ExperimentResult& r);

}  // namespace pptlab
