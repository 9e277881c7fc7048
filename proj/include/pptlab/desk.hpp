#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pptlab/harness.hpp"
#include "pptlab/synthetic.hpp"
#include "pptlab/training.hpp"

namespace pptlab {

using Progress = std::function<void(const std::string&)>;

/// Full-model training on cued selection. Every batch carries a random
/// prompt; in half of them one prompt row is replaced by a fixed cue vector
/// and the target is the next sentence, otherwise the target is the previous
/// sentence. The backbone therefore only picks the next sentence when its
/// input carries the cue.
struct CueTrainingConfig {
  std::int64_t steps = 3000;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::size_t prompt_length = kDefaultPromptLength;
  double prompt_std = kRandomPromptStd;
  double clip_norm = kDefaultClipNorm;
  std::int64_t eval_every = 250;
  std::size_t n_eval = 200;
  std::uint64_t seed = 5;
};

struct CueTrainingResult {
  Transformer<float> model;
  Mat<float> cue;                       // 1 x d_model
  std::vector<CurvePoint> cued_next;    // accuracy with the cue row present
  std::vector<CurvePoint> plain_prev;   // accuracy of the default rule
};

CueTrainingResult train_cued_backbone(const Transformer<float>& model, const Vocabulary& vocab,
                                      std::span<const Document> corpus, const CueTrainingConfig& config,
                                      const Progress& progress = {});

/// Desk-scale PT vs PPT comparison on a synthetic corpus: LM adaption and
/// cued training of the backbone on one half of the documents, MCC prompt
/// pre-training on next sentence selection, then few-shot tuning of both
/// methods through the experiment harness on a next-sentence task drawn from
/// the other half.
struct DeskExperimentConfig {
  SyntheticCorpusConfig corpus{.seed = 1};
  std::size_t vocab_size = 2048;
  std::uint64_t model_seed = 7;
  LmConfig lm{.steps = 1000};
  CueTrainingConfig cue;
  std::size_t nss_examples = 4000;
  int nss_options = 4;
  PretrainConfig pretrain{.steps = 2000, .eval_every = 250, .valid_fraction = 0.1};
  std::uint64_t data_seed = 5;
  std::uint64_t prompt_init_seed = 3;
  std::size_t n_train_pool = 400;
  std::size_t n_test = 300;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::size_t samples = kFewShotSamples;
  TuneConfig tune;
  std::filesystem::path workdir = "pptlab_desk";
};

struct DeskExperimentResult {
  std::vector<std::uint64_t> seeds;
  std::vector<double> pt_test, ppt_test;
  std::vector<std::vector<CurvePoint>> pt_curves, ppt_curves;  // dev accuracy of the selected lr arm
  ExperimentResult pt, ppt;
  double lm_loss_before = 0.0, lm_loss_after = 0.0;
  double cued_next_accuracy = 0.0, plain_prev_accuracy = 0.0;
  double pretrain_valid_accuracy = 0.0;  // pre-trained prompt on held-out selection examples
};

DeskExperimentResult run_desk_experiment(const DeskExperimentConfig& config, const Progress& progress = {});

/// First evaluated step whose value reaches `target`.
std::optional<std::int64_t> steps_to_reach(std::span<const CurvePoint> curve, double target);

}  // namespace pptlab
