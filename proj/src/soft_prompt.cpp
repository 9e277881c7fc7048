#include "pptlab/soft_prompt.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/error.hpp"
#include "pptlab/rng.hpp"

namespace pptlab {
namespace {

constexpr char kMagic[4] = {'P', 'P', 'T', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

SoftPrompt copy_rows(const Transformer<float>& model, std::span<const TokenId> ids) {
  SoftPrompt p;
  p.values.resize(static_cast<Eigen::Index>(ids.size()), model.config().d_model);
  for (std::size_t i = 0; i < ids.size(); ++i) p.values.row(static_cast<Eigen::Index>(i)) = model.embedding(ids[i]);
  return p;
}

std::vector<TokenId> sample_from(std::span<const TokenId> pool, std::size_t length, Rng& rng) {
  if (pool.empty()) throw Error("prompt initialization: empty word pool");
  std::vector<TokenId> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) out.push_back(pool[rng.uniform_index(pool.size())]);
  return out;
}

}  // namespace

PromptInit parse_prompt_init(std::string_view name) {
  if (name == "random") return PromptInit::Random;
  if (name == "label_init") return PromptInit::LabelInit;
  if (name == "vocab_sampling") return PromptInit::VocabSampling;
  if (name == "top1000_sampling") return PromptInit::Top1000Sampling;
  if (name == "task_related_sampling") return PromptInit::TaskRelatedSampling;
  if (name == "from_pretrained") return PromptInit::FromPretrained;
  throw Error("unknown prompt initialization '" + std::string(name) + "'");
}

PromptInitResult init_soft_prompt(PromptInit strategy, const Transformer<float>& model,
                                  std::size_t length, const PromptInitContext& ctx,
                                  std::uint64_t seed) {
  Rng rng(seed);
  const auto d = model.config().d_model;
  PromptInitResult out;
  switch (strategy) {
    case PromptInit::Random: {
      out.prompt.values.resize(static_cast<Eigen::Index>(length), d);
      for (Eigen::Index i = 0; i < out.prompt.values.size(); ++i) {
        out.prompt.values.data()[i] = static_cast<float>(rng.normal() * ctx.random_std);
      }
      return out;
    }
    case PromptInit::LabelInit: {
      if (ctx.label_token_ids.empty()) throw Error("label_init needs a verbalizer");
      for (std::size_t i = 0; i < length; ++i) {
        out.source_tokens.push_back(ctx.label_token_ids[i % ctx.label_token_ids.size()]);
      }
      break;
    }
    case PromptInit::VocabSampling: {
      if (ctx.vocab_size <= Vocabulary::kNumSpecial) throw Error("vocab_sampling needs the vocabulary");
      std::vector<TokenId> pool;
      for (auto id = static_cast<TokenId>(Vocabulary::kNumSpecial); id < static_cast<TokenId>(ctx.vocab_size); ++id) {
        pool.push_back(id);
      }
      out.source_tokens = sample_from(pool, length, rng);
      break;
    }
    case PromptInit::Top1000Sampling: {
      if (ctx.frequency_ranked.empty()) throw Error("top1000_sampling needs corpus frequency ranks");
      const auto n = std::min(kTopFrequentWords, ctx.frequency_ranked.size());
      out.source_tokens = sample_from(std::span(ctx.frequency_ranked).first(n), length, rng);
      break;
    }
    case PromptInit::TaskRelatedSampling: {
      std::vector<TokenId> pool;
      for (const auto& text : ctx.task_texts) {
        for (TokenId id : text) {
          if (id >= static_cast<TokenId>(Vocabulary::kNumSpecial)) pool.push_back(id);
        }
      }
      if (pool.empty()) throw Error("task_related_sampling needs downstream training texts");
      out.source_tokens = sample_from(pool, length, rng);
      break;
    }
    case PromptInit::FromPretrained: {
      if (!ctx.checkpoint) throw Error("from_pretrained needs a prompt checkpoint");
      out.prompt = load_prompt(*ctx.checkpoint);
      if (out.prompt.length() != length || out.prompt.dim() != static_cast<std::size_t>(d)) {
        throw Error("prompt shape mismatch");
      }
      return out;
    }
  }
  out.prompt = copy_rows(model, out.source_tokens);
  return out;
}

std::string encode_prompt(const SoftPrompt& prompt) {
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(prompt.length()));
  put_u32(out, static_cast<std::uint32_t>(prompt.dim()));
  put_u32(out, 0);
  out.reserve(kHeaderBytes + 4 * prompt.num_params());
  for (Eigen::Index i = 0; i < prompt.values.size(); ++i) {
    std::uint32_t bits;
    const float f = prompt.values.data()[i];
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  return out;
}

SoftPrompt decode_prompt(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw Error("not a prompt checkpoint");
  }
  const auto k = get_u32(bytes, 4);
  const auto d = get_u32(bytes, 8);
  if (get_u32(bytes, 12) != 0) throw Error("prompt checkpoint: reserved bytes must be zero");
  const std::size_t count = static_cast<std::size_t>(k) * d;
  if (bytes.size() != kHeaderBytes + 4 * count) throw Error("prompt checkpoint: size does not match header");
  SoftPrompt p;
  p.values.resize(k, d);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(bytes, kHeaderBytes + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    p.values.data()[i] = f;
  }
  return p;
}

void save_prompt(const std::filesystem::path& path, const SoftPrompt& prompt) {
  write_file_atomic(path, encode_prompt(prompt));
}

SoftPrompt load_prompt(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open prompt checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_prompt(bytes);
}

}  // namespace pptlab
