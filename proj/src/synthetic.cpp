#include "pptlab/synthetic.hpp"

#include <algorithm>

#include "pptlab/error.hpp"
#include "pptlab/pvp.hpp"
#include "pptlab/rng.hpp"
#include "pptlab/tokenization.hpp"

namespace pptlab {
namespace {

constexpr std::size_t kDefaultCommonWords = 24;
constexpr std::uint64_t kTestStream = 0x5E57ULL;

std::string topic_word(int topic, std::size_t j) { return "t" + std::to_string(topic) + "w" + std::to_string(j); }
std::string ordinal_word(std::size_t i) { return "k" + std::to_string(i); }

}  // namespace

std::vector<Document> synthetic_corpus(const SyntheticCorpusConfig& c) {
  if (c.n_topics < 1 || c.words_per_topic == 0 || c.min_content > c.max_content || c.sentences_per_doc == 0) {
    throw Error("invalid synthetic corpus config");
  }
  auto common = c.common_words;
  if (common.empty()) {
    const auto reserved = reserved_words();
    common.assign(reserved.begin(), reserved.begin() + static_cast<std::ptrdiff_t>(std::min(kDefaultCommonWords, reserved.size())));
  }
  Rng rng(c.seed);
  std::vector<Document> docs;
  docs.reserve(c.n_docs);
  for (std::size_t d = 0; d < c.n_docs; ++d) {
    Document doc;
    doc.id = "syn" + std::to_string(d);
    const int topic = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(c.n_topics)));
    for (std::size_t s = 0; s < c.sentences_per_doc; ++s) {
      std::string sentence = ordinal_word(s);
      const auto n = static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(c.min_content), static_cast<int>(c.max_content)));
      for (std::size_t i = 0; i < n; ++i) {
        sentence.push_back(' ');
        if (rng.uniform01() < c.common_rate) sentence += common[rng.uniform_index(common.size())];
        else sentence += topic_word(topic, rng.uniform_index(c.words_per_topic));
      }
      doc.sentences.push_back(std::move(sentence));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> synthetic_review_corpus(std::size_t n_docs, std::size_t sentences_per_doc, std::uint64_t seed) {
  static const std::vector<std::string> kPolar = {"awful", "terrible", "bad", "poor", "boring", "dull",
                                                  "good", "nice", "fine", "great", "excellent", "love"};
  static const std::vector<std::string> kFiller = {"the", "movie", "plot", "was", "and", "acting",
                                                   "food", "service", "very", "really", "place", "story"};
  Rng rng(seed);
  std::vector<Document> docs;
  for (std::size_t d = 0; d < n_docs; ++d) {
    Document doc{"rev" + std::to_string(d), {}};
    for (std::size_t s = 0; s < sentences_per_doc; ++s) {
      std::string sentence;
      const auto len = static_cast<std::size_t>(rng.uniform_int(5, 10));
      const auto polar = rng.uniform_index(4);
      for (std::size_t i = 0; i < len; ++i) {
        if (i) sentence.push_back(' ');
        sentence += i < polar ? kPolar[rng.uniform_index(kPolar.size())] : kFiller[rng.uniform_index(kFiller.size())];
      }
      doc.sentences.push_back(std::move(sentence));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

PretrainExample cued_selection_example(std::span<const Document> corpus, Rng& rng, Direction direction) {
  std::size_t usable = 0;
  for (const auto& d : corpus) usable += d.sentences.size() >= 4;
  if (usable == 0 || corpus.size() < 2) throw Error("cued selection needs a document with 4+ sentences and 2+ documents");
  for (;;) {
    const auto d = rng.uniform_index(corpus.size());
    const auto& sents = corpus[d].sentences;
    if (sents.size() < 4) continue;
    const auto i = 1 + rng.uniform_index(sents.size() - 2);
    std::size_t far = 0;
    do far = rng.uniform_index(sents.size());
    while (far + 1 == i || far == i || far == i + 1);
    std::size_t other = 0;
    do other = rng.uniform_index(corpus.size());
    while (other == d || corpus[other].sentences.empty());
    const SentenceRef slots[4] = {{d, i + 1}, {d, i - 1}, {d, far}, {other, rng.uniform_index(corpus[other].sentences.size())}};

    std::vector<std::size_t> perm = {0, 1, 2, 3};
    rng.shuffle(perm.begin(), perm.end());
    PretrainExample ex;
    ex.task = Format::MCC;
    ex.input["sq"] = normalize(sents[i]);
    ex.meta.refs.push_back({d, i});
    const std::size_t want = direction == Direction::Next ? 0 : 1;
    for (std::size_t p = 0; p < 4; ++p) {
      const auto r = slots[perm[p]];
      ex.input["s" + std::to_string(p + 1)] = normalize(corpus[r.doc].sentences[r.sentence]);
      ex.meta.refs.push_back(r);
      if (perm[p] == want) ex.label = static_cast<int>(p) + 1;
    }
    ex.meta.permutation = perm;
    for (const auto& r : ex.meta.refs) ex.meta.doc_ids.push_back(corpus[r.doc].id);
    ex.target_token = normalize(option_letter(static_cast<std::size_t>(ex.label - 1)));
    return ex;
  }
}

std::vector<DownstreamRecord> synthetic_next_sentence_task(std::span<const Document> corpus, std::size_t n_train_pool,
                                                           std::size_t n_test, std::uint64_t seed) {
  const auto half = corpus.size() / 2;
  if (half < 2) throw Error("synthetic task needs at least 4 documents");
  std::vector<DownstreamRecord> out;
  auto emit = [&](std::span<const Document> docs, std::size_t n, Rng rng, const std::string& pool) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto ex = cued_selection_example(docs, rng, Direction::Next);
      out.push_back({pool, Format::MCC, TaskInstance{ex.input, ex.label - 1}});
    }
  };
  emit(corpus.first(half), n_train_pool, Rng(seed), "train");
  emit(corpus.subspan(half), n_test, Rng(seed, kTestStream), "test");
  return out;
}

}  // namespace pptlab
