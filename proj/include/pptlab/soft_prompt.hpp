#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pptlab/model.hpp"

namespace pptlab {

/// k x d_model matrix prepended to the encoder input.
struct SoftPrompt {
  Mat<float> values;

  std::size_t length() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  std::size_t num_params() const { return static_cast<std::size_t>(values.size()); }
  bool finite() const { return values.allFinite(); }
};

inline constexpr std::size_t kDefaultPromptLength = 100;
inline constexpr double kRandomPromptStd = 0.5;
inline constexpr std::size_t kTopFrequentWords = 1000;

enum class PromptInit {
  Random,
  LabelInit,
  VocabSampling,
  Top1000Sampling,
  TaskRelatedSampling,
  FromPretrained,
};

PromptInit parse_prompt_init(std::string_view name);

/// Strategy-specific inputs; only the fields a strategy needs are read.
struct PromptInitContext {
  std::vector<TokenId> label_token_ids;             // LabelInit
  std::size_t vocab_size = 0;                       // VocabSampling
  std::vector<TokenId> frequency_ranked;            // Top1000Sampling
  std::vector<std::vector<TokenId>> task_texts;     // TaskRelatedSampling
  std::optional<std::filesystem::path> checkpoint;  // FromPretrained
  double random_std = kRandomPromptStd;             // Random
};

struct PromptInitResult {
  SoftPrompt prompt;
  std::vector<TokenId> source_tokens;  // words whose embeddings were copied
};

/// Word-based strategies copy rows of the model's token embedding table.
PromptInitResult init_soft_prompt(PromptInit strategy, const Transformer<float>& model,
                                  std::size_t length, const PromptInitContext& context,
                                  std::uint64_t seed);

/// Binary prompt checkpoint: "PPT1", k (u32 LE), d (u32 LE), 4 zero bytes,
/// then k*d float32 LE values in row-major order.
std::string encode_prompt(const SoftPrompt& prompt);
SoftPrompt decode_prompt(std::string_view bytes);
void save_prompt(const std::filesystem::path& path, const SoftPrompt& prompt);
SoftPrompt load_prompt(const std::filesystem::path& path);

}  // namespace pptlab
