#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pptlab/tokenization.hpp"

namespace pptlab {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  int d_model = 64;
  int n_layers_enc = 2;
  int n_layers_dec = 2;
  int n_heads = 4;
  int d_ff = 256;
  int max_len = 512;        // encoder length, prompt included
  int max_target_len = 8;   // decoder positions
  int vocab_size = 0;

  /// Throws Error naming the offending field.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ParamTensor {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

/// Offsets of every backbone tensor inside one flat buffer.
struct ParamLayout {
  struct Attention {
    std::size_t wq, wk, wv, wo;
  };
  struct EncoderLayer {
    std::size_t norm_attn;
    Attention attn;
    std::size_t norm_ff, ff_in, ff_out;
  };
  struct DecoderLayer {
    std::size_t norm_self;
    Attention self;
    std::size_t norm_cross;
    Attention cross;
    std::size_t norm_ff, ff_in, ff_out;
  };

  std::vector<ParamTensor> tensors;
  std::size_t tok_emb = 0, enc_pos = 0, dec_pos = 0, enc_norm = 0, dec_norm = 0, lm_head = 0;
  std::vector<EncoderLayer> encoder;
  std::vector<DecoderLayer> decoder;
  std::size_t total = 0;

  explicit ParamLayout(const ModelConfig& config);
};

/// Backbone parameter count for a config, computed from the layout.
std::size_t parameter_census(const ModelConfig& config);

enum class TuneMode { PT, FT, LM };

/// One encoder input with a single mask and the decoder targets for it.
/// Classification examples have exactly one target token.
struct Seq2SeqExample {
  std::vector<TokenId> input_ids;
  std::size_t mask_position = 0;
  std::vector<TokenId> targets;
};

/// Replace one random span of 1..3 tokens of `raw` by the mask; the span
/// becomes the target sequence.
Seq2SeqExample make_span_corruption(std::span<const TokenId> raw, std::uint64_t seed,
                                    std::uint64_t stream);

template <typename T>
struct Gradients {
  std::vector<T> backbone;  // empty unless backbone gradients were requested
  Mat<T> prompt;            // 0 x 0 unless a prompt was given and is tunable
};

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  Gradients<T> grads;
};

/// Text-to-text encoder-decoder with pre-norm (RMS) residual blocks, ReLU
/// feed-forward layers, learned absolute positions and no biases. A soft
/// prompt, when given, is prepended to the encoder input embeddings.
template <typename T>
class Transformer {
 public:
  explicit Transformer(const ModelConfig& config);

  /// Scaled normal initialization, deterministic per seed.
  static Transformer init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  Eigen::Map<Mat<T>> tensor(std::size_t index);
  Eigen::Map<const Mat<T>> tensor(std::size_t index) const;
  /// Row `id` of the token embedding table.
  Eigen::Matrix<T, 1, Eigen::Dynamic> embedding(TokenId id) const;

  template <typename U>
  Transformer<U> cast() const {
    Transformer<U> out(config_);
    for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<U>(params_[i]);
    return out;
  }

  /// Probability over the vocabulary for the masked position.
  std::vector<double> mask_distribution(const Mat<T>* prompt, std::span<const TokenId> input_ids,
                                        std::size_t mask_position) const;

  /// Mean target NLL of one example. Gradients are accumulated (added) into
  /// `backbone_grad` / `prompt_grad` when they are non-null; the sum is scaled
  /// by `scale`.
  double example_loss(const Mat<T>* prompt, const Seq2SeqExample& example, T scale,
                      std::vector<T>* backbone_grad, Mat<T>* prompt_grad) const;

  /// FNV-1a over the parameter bytes.
  std::uint64_t hash() const;

 private:
  ModelConfig config_;
  ParamLayout layout_;
  std::vector<T> params_;
};

/// Mean NLL of the batch targets and the gradients implied by `mode`:
/// PT - prompt only; FT - backbone, plus prompt when present; LM - backbone
/// on span-corruption targets built from the raw input_ids with `lm_seed`.
template <typename T>
LossAndGrad<T> loss_and_grad(const Transformer<T>& model, const Mat<T>* prompt,
                             std::span<const Seq2SeqExample> batch, TuneMode mode,
                             std::uint64_t lm_seed = 0);

/// Tunable parameter count: PT -> prompt_len * d_model; FT/LM -> backbone
/// census plus the prompt when one is attached.
std::size_t count_tunable(const ModelConfig& config, std::size_t prompt_len, TuneMode mode);

/// Backbone snapshot with its vocabulary.
struct ModelBundle {
  Transformer<float> model;
  Vocabulary vocab;
};

void save_model(const std::filesystem::path& path, const Transformer<float>& model,
                const Vocabulary& vocab);
ModelBundle load_model(const std::filesystem::path& path);

extern template class Transformer<float>;
extern template class Transformer<double>;

}  // namespace pptlab
