#pragma once

#include <string>
#include <vector>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/rng.hpp"

namespace pptlab::testing {

// Sentences of `min_tokens`..`max_tokens` lowercase words, each document
// tagged by a distinct first word so sentences never collide across docs.
inline std::vector<Document> toy_corpus(std::size_t n_docs, std::size_t n_sentences, std::uint64_t seed,
                                        std::size_t min_tokens = 5, std::size_t max_tokens = 9) {
  static const std::vector<std::string> words = {"river", "stone", "lamp",  "green", "quiet", "bread",
                                                 "cloud", "paper", "train", "salt",  "window", "maple",
                                                 "glass", "north", "honey", "field", "copper", "tide"};
  Rng rng(seed);
  std::vector<Document> docs;
  for (std::size_t d = 0; d < n_docs; ++d) {
    Document doc;
    doc.id = "doc" + std::to_string(d);
    for (std::size_t s = 0; s < n_sentences; ++s) {
      const auto len = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(min_tokens), static_cast<int>(max_tokens)));
      std::string sentence = "d" + std::to_string(d) + "s" + std::to_string(s);
      for (std::size_t t = 1; t < len; ++t) sentence += " " + words[rng.uniform_index(words.size())];
      doc.sentences.push_back(sentence);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline std::string words_sentence(std::size_t n, const std::string& word = "word") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + word + std::to_string(i);
  return s;
}

}  // namespace pptlab::testing
