#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/model.hpp"
#include "pptlab/pvp.hpp"
#include "pptlab/soft_prompt.hpp"

namespace pptlab {

enum class Scheduler { Constant, InverseSqrt };
Scheduler parse_scheduler(std::string_view name);
std::string_view to_string(Scheduler s);

/// Learning rate at optimization step t (1-based).
double lr_schedule(Scheduler scheduler, double base_lr, std::int64_t step);

inline const std::vector<double> kPromptTuneLrGrid = {5e-3, 1e-2, 2e-2, 5e-2};
inline constexpr double kDefaultClipNorm = 1.0;

/// Full-model tuning grid for a model size tag ("small", "base", "large",
/// "xl", "xxl"; case-insensitive).
std::vector<double> ft_lr_grid(std::string_view size_tag);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

class Adam {
 public:
  Adam(std::size_t n, AdamConfig config = {});
  void step(std::span<float> params, std::span<const float> grad, double lr);
  std::int64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

/// Scales `grad` in place to global L2 norm <= max_norm (no-op when
/// max_norm <= 0). Returns the norm before clipping.
double clip_global_norm(std::span<float> grad, double max_norm);

struct TrainLogEntry {
  std::int64_t step = 0;
  double lr = 0.0;
  std::optional<double> train_loss;
  std::optional<double> dev_metric;
  std::string checkpoint_id;
};

/// Training log, optionally mirrored to a JSONL file as entries arrive.
class TrainLog {
 public:
  TrainLog() = default;
  explicit TrainLog(std::filesystem::path path);

  void append(TrainLogEntry entry);
  const std::vector<TrainLogEntry>& entries() const { return entries_; }

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<TrainLogEntry> entries_;
};

std::string log_entry_json(const TrainLogEntry& entry);

// ------------------------------------------------------------- encoding

/// Builtin PVP for a pre-training example: NSP-3 uses the 3-label SPC
/// pair, option tasks the letter pattern for their option count, SSC the
/// 5-label sentiment pair.
Pvp pretrain_pvp(const PretrainExample& example);

Seq2SeqExample encode_pretrain_example(const PretrainExample& example, const Vocabulary& vocab);

/// Renders an instance; the target is the verbalizer token of its label
/// (left empty for unlabeled instances).
Seq2SeqExample encode_instance(const PatternTemplate& pattern, std::span<const TokenId> verbalizer_ids,
                               const TaskInstance& instance, const Vocabulary& vocab);

// ------------------------------------------------------------ metrics

enum class Metric { Accuracy, MacroF1 };
Metric parse_metric(std::string_view name);

double accuracy(std::span<const int> predicted, std::span<const int> gold);
/// Mean per-class F1 over the classes 0..n_classes-1.
double macro_f1(std::span<const int> predicted, std::span<const int> gold, int n_classes);

/// Argmax label of the verbalizer-restricted mask distribution.
std::vector<int> predict(const Transformer<float>& model, const Mat<float>* prompt,
                         std::span<const Seq2SeqExample> examples, std::span<const TokenId> verbalizer_ids);

/// Mean target NLL without gradients.
double mean_loss(const Transformer<float>& model, const Mat<float>* prompt,
                 std::span<const Seq2SeqExample> examples);

/// Gold label of an encoded example: index of its target in verbalizer_ids.
int gold_label(const Seq2SeqExample& example, std::span<const TokenId> verbalizer_ids);

// ------------------------------------------------------ prompt pre-training

struct PretrainConfig {
  std::int64_t steps = 2000;
  std::size_t batch_size = 32;
  std::int64_t eval_every = 50;
  double lr = 0.1;
  Scheduler scheduler = Scheduler::InverseSqrt;
  double valid_fraction = 0.05;
  double clip_norm = kDefaultClipNorm;
  std::uint64_t seed = 0;
};

struct CurvePoint {
  std::int64_t step = 0;
  double value = 0.0;
};

struct PretrainResult {
  SoftPrompt prompt;
  std::int64_t best_step = 0;
  double best_valid_loss = 0.0;
  std::vector<CurvePoint> valid_curve;
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
};

/// Prompt-only training on pre-training data. Validation loss is recorded at
/// step 0 and every eval_every steps; the prompt with the lowest validation
/// loss is returned (ties go to the earlier step).
PretrainResult pretrain_prompt(const Transformer<float>& model, const SoftPrompt& init,
                               std::span<const Seq2SeqExample> train, std::span<const Seq2SeqExample> valid,
                               const PretrainConfig& config, TrainLog* log = nullptr);

/// Splits off config.valid_fraction by example meta, encodes, and trains.
PretrainResult pretrain_prompt(const Transformer<float>& model, const Vocabulary& vocab, const SoftPrompt& init,
                               std::vector<PretrainExample> examples, const PretrainConfig& config,
                               TrainLog* log = nullptr);

// ------------------------------------------------------- few-shot tuning

struct TuneConfig {
  std::vector<double> lr_grid = kPromptTuneLrGrid;
  std::size_t batch_size = 16;
  int epochs = 50;
  std::int64_t eval_every = 6;
  Scheduler scheduler = Scheduler::Constant;
  Metric metric = Metric::Accuracy;
  double clip_norm = kDefaultClipNorm;
  std::uint64_t seed = 0;
};

struct ArmResult {
  double lr = 0.0;
  std::int64_t best_step = 0;
  double best_dev = 0.0;
  std::vector<CurvePoint> dev_curve;
};

struct TuneResult {
  double lr = 0.0;
  std::int64_t step = 0;
  double dev_metric = 0.0;
  std::vector<ArmResult> arms;
  std::optional<SoftPrompt> prompt;           // prompt tuning
  std::optional<Transformer<float>> backbone;  // full-model tuning
};

/// Tunes only the soft prompt over the lr grid, evaluating the dev metric at
/// step 0 and every eval_every steps. Best dev wins; ties go to the earlier
/// checkpoint, then the smaller lr.
TuneResult prompt_tune(const Transformer<float>& model, const SoftPrompt& init,
                       std::span<const Seq2SeqExample> train, std::span<const Seq2SeqExample> dev,
                       std::span<const TokenId> verbalizer_ids, const TuneConfig& config, TrainLog* log = nullptr);

/// Tunes every backbone weight (no soft prompt) with the same protocol.
TuneResult full_model_tune(const Transformer<float>& model, std::span<const Seq2SeqExample> train,
                           std::span<const Seq2SeqExample> dev, std::span<const TokenId> verbalizer_ids,
                           const TuneConfig& config, TrainLog* log = nullptr);

// ------------------------------------------------------------ LM adaption

struct LmConfig {
  std::int64_t steps = 500;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  Scheduler scheduler = Scheduler::Constant;
  double valid_fraction = 0.05;
  double clip_norm = kDefaultClipNorm;
  std::uint64_t seed = 0;
};

struct LmAdaptResult {
  Transformer<float> model;
  double valid_loss_before = 0.0;
  double valid_loss_after = 0.0;
  std::size_t n_valid = 0;
};

/// Span-corruption language modeling on raw token sequences. Sequences are
/// truncated to the model's max_len.
LmAdaptResult lm_adapt(const Transformer<float>& model, std::span<const std::vector<TokenId>> sequences,
                       const LmConfig& config, TrainLog* log = nullptr);

/// One token sequence per document (sentences joined with " . ").
std::vector<std::vector<TokenId>> document_sequences(std::span<const Document> corpus, const Vocabulary& vocab);

}  // namespace pptlab
