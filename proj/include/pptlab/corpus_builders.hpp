#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pptlab/pvp.hpp"

namespace pptlab {

struct Document {
  std::string id;
  std::vector<std::string> sentences;
};

/// Split on '.', '?' or '!' followed by whitespace (or end of text). The
/// delimiter is dropped, pieces are trimmed and empty pieces skipped.
std::vector<std::string> split_sentences(std::string_view text);
Document make_document(std::string id, std::string_view text);

/// JSONL, one {"id": ..., "text": ...} record per line.
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path);
void write_corpus_jsonl(const std::filesystem::path& path,
                        std::span<const std::pair<std::string, std::string>> records);

inline constexpr std::size_t kMinSentenceTokens = 5;
inline constexpr double kMaxLengthRatio = 100.0;
inline constexpr int kMaxRetries = 100;
inline constexpr std::size_t kFixedSixQueryCap = 389;
inline constexpr std::size_t kFixedSixOptionCap = 86;
inline constexpr std::array<double, 5> kDefaultSscThresholds = {0.95, 0.50, 0.50, 0.50, 0.70};

struct SentenceRef {
  std::size_t doc = 0;  // index into the corpus
  std::size_t sentence = 0;
  friend bool operator==(const SentenceRef&, const SentenceRef&) = default;
};

struct ExampleMeta {
  /// NSP-3: {first, second}. Option tasks: {query, option_1, ..., option_n}
  /// in displayed order. SSC: {sentence}.
  std::vector<SentenceRef> refs;
  std::vector<std::string> doc_ids;  // parallel to refs
  /// Option tasks: permutation[displayed] = construction slot, where slot 0
  /// is the positive, then same-document and cross-document negatives.
  std::vector<std::size_t> permutation;
  std::optional<double> confidence;  // SSC annotator confidence
};

struct PretrainExample {
  Format task = Format::SPC;
  std::map<std::string, std::string> input;
  /// NSP-3: 0/1/2. Option tasks: 1-based displayed position of the
  /// positive. SSC: 0..4.
  int label = 0;
  std::string target_token;
  ExampleMeta meta;
};

struct OptionConfig {
  int num_options = 0;
  std::size_t max_query_len = 0;
  std::size_t max_option_len = 0;
  int n_positive = 0;
  int n_neg_same_doc = 0;
  int n_neg_diff_doc = 0;

  /// Cross-document negatives the builders actually emit. Rows 11..16 of the
  /// table list one negative more than num_options allows; the surplus is
  /// dropped from the cross-document side.
  int emitted_neg_diff() const { return num_options - n_positive - n_neg_same_doc; }

  friend bool operator==(const OptionConfig&, const OptionConfig&) = default;
};

/// Row of the option-count configuration table, 2..16 options.
OptionConfig option_config_for(int num_options);

std::size_t token_count(std::string_view text);
/// First `cap` normalized tokens, space-joined.
std::string truncate_tokens(std::string_view text, std::size_t cap);

/// Three-way next sentence prediction: 2 adjacent, 1 same document
/// non-adjacent, 0 different documents.
std::vector<PretrainExample> build_nsp3(std::span<const Document> corpus, std::size_t n,
                                        std::uint64_t seed);

/// Next sentence selection. With 6 options this is the fixed pre-training
/// task (query/option caps 389/86); other counts use the table row caps.
std::vector<PretrainExample> build_nss(std::span<const Document> corpus, std::size_t n,
                                       std::uint64_t seed, int num_options = 6);

/// Next sentence selection with the option count drawn uniformly from 2..16
/// per example and the table row caps.
std::vector<PretrainExample> build_unified_mc(std::span<const Document> corpus, std::size_t n,
                                              std::uint64_t seed);

/// Sentence -> (label 0..4, confidence in [0, 1]).
using Annotator = std::function<std::pair<int, double>(const std::string&)>;

struct PseudoSscResult {
  std::vector<PretrainExample> examples;
  std::vector<std::string> warnings;
  std::size_t candidates = 0;  // sentences shown to the annotator
  std::size_t accepted = 0;    // sentences passing their label threshold
};

PseudoSscResult build_pseudo_ssc(std::span<const Document> corpus, const Annotator& annotator,
                                 std::size_t n, std::uint64_t seed,
                                 std::array<double, 5> thresholds = kDefaultSscThresholds);

/// Rule-based sentiment annotator over a small signed lexicon.
std::pair<int, double> lexicon_annotator(const std::string& sentence);

/// Label recomputed from meta against the corpus; nullopt if meta is
/// inconsistent (e.g. an option task without exactly one adjacent option).
std::optional<int> rederive_label(std::span<const Document> corpus, const PretrainExample& ex);

struct ExampleSplit {
  std::vector<PretrainExample> train;
  std::vector<PretrainExample> valid;
};

/// Hold out `fraction` of the examples. Examples with identical meta always
/// land on the same side.
ExampleSplit split_validation(std::vector<PretrainExample> examples, double fraction,
                              std::uint64_t seed);
std::string meta_key(const PretrainExample& ex);

std::string example_to_json_line(const PretrainExample& ex);
PretrainExample example_from_json_line(std::string_view line);
void write_examples_jsonl(const std::filesystem::path& path, std::span<const PretrainExample> examples);
std::vector<PretrainExample> read_examples_jsonl(const std::filesystem::path& path);

/// Writes <dir>/<name>.train.jsonl and <dir>/<name>.valid.jsonl.
void write_dataset(const std::filesystem::path& dir, const std::string& name,
                   const ExampleSplit& split);

/// Write via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace pptlab
