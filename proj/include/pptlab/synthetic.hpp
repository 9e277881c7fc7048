#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/fewshot.hpp"
#include "pptlab/rng.hpp"

namespace pptlab {

/// Generated documents. Every document draws its content words from one
/// topic and sentence i opens with the ordinal marker "k<i>", so adjacency
/// can be read off the text.
struct SyntheticCorpusConfig {
  std::size_t n_docs = 600;
  std::size_t sentences_per_doc = 6;
  int n_topics = 12;
  std::size_t words_per_topic = 16;
  /// Shared filler words. Empty means the first 24 reserved words, which
  /// keeps pattern and verbalizer tokens in the training text.
  std::vector<std::string> common_words = {};
  std::size_t min_content = 4;
  std::size_t max_content = 7;
  double common_rate = 0.3;  // share of content slots filled by common words
  std::uint64_t seed = 0;
};

std::vector<Document> synthetic_corpus(const SyntheticCorpusConfig& config);

/// Review-like sentences mixing lexicon sentiment words with filler words.
std::vector<Document> synthetic_review_corpus(std::size_t n_docs, std::size_t sentences_per_doc, std::uint64_t seed);

enum class Direction { Next, Previous };

/// Four-option selection around a query sentence s_i (0 < i < n-1): the
/// options are s_{i+1}, s_{i-1}, another sentence of the same document and a
/// sentence of another document, in shuffled order. The label (1-based
/// position) points at s_{i+1} for Next and s_{i-1} for Previous.
PretrainExample cued_selection_example(std::span<const Document> corpus, Rng& rng, Direction direction);

/// Downstream next-sentence task in the cued layout, so the previous
/// sentence is always a distractor. The train pool comes from the first half
/// of `corpus` and the test pool from the second half.
std::vector<DownstreamRecord> synthetic_next_sentence_task(std::span<const Document> corpus, std::size_t n_train_pool,
                                                           std::size_t n_test, std::uint64_t seed);

}  // namespace pptlab
