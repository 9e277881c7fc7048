#include "pptlab/corpus_builders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pptlab/error.hpp"
#include "pptlab/rng.hpp"

namespace pptlab {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<const char*, 5> kSentiment = {"terrible", "bad", "maybe", "good", "great"};
constexpr std::array<const char*, 3> kNsp3Words = {"no", "maybe", "yes"};

// Streams for derived generators; kept distinct so per-example draws never
// alias the label or order shuffles.
constexpr std::uint64_t kLabelStream = 0xFFFF0001ULL;
constexpr std::uint64_t kOrderStream = 0xFFFF0002ULL;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\n\r\f\v");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\n\r\f\v");
  return std::string(s.substr(b, e - b + 1));
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Sentence lengths and validity, precomputed once per corpus.
struct CorpusIndex {
  std::vector<std::vector<std::size_t>> lengths;
  std::vector<std::vector<bool>> valid;

  explicit CorpusIndex(std::span<const Document> corpus) {
    lengths.resize(corpus.size());
    valid.resize(corpus.size());
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      for (const auto& s : corpus[d].sentences) {
        const auto n = token_count(s);
        lengths[d].push_back(n);
        valid[d].push_back(n >= kMinSentenceTokens);
      }
    }
  }

  bool ok(std::size_t d, std::size_t s) const { return s < valid[d].size() && valid[d][s]; }

  bool ratio_ok(SentenceRef a, SentenceRef b) const {
    const double la = static_cast<double>(lengths[a.doc][a.sentence]);
    const double lb = static_cast<double>(lengths[b.doc][b.sentence]);
    return std::max(la, lb) / std::min(la, lb) <= kMaxLengthRatio;
  }

  std::vector<std::size_t> valid_sentences(std::size_t d) const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < valid[d].size(); ++s) {
      if (valid[d][s]) out.push_back(s);
    }
    return out;
  }
};

void fill_doc_ids(std::span<const Document> corpus, ExampleMeta& meta) {
  meta.doc_ids.clear();
  for (const auto& r : meta.refs) meta.doc_ids.push_back(corpus[r.doc].id);
}

const std::string& sentence_at(std::span<const Document> corpus, SentenceRef r) {
  return corpus[r.doc].sentences[r.sentence];
}

// ---------------------------------------------------------------- NSP-3

struct Nsp3Sampler {
  std::span<const Document> corpus;
  const CorpusIndex& index;
  std::vector<SentenceRef> adjacent;           // (d, i) with i, i+1 valid
  std::vector<std::size_t> docs_with_far_pair;  // docs with valid i, j, |i-j| >= 2
  std::vector<std::size_t> docs_with_valid;

  Nsp3Sampler(std::span<const Document> c, const CorpusIndex& idx) : corpus(c), index(idx) {
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const auto vs = index.valid_sentences(d);
      if (!vs.empty()) docs_with_valid.push_back(d);
      if (vs.size() >= 2 && vs.back() - vs.front() >= 2) docs_with_far_pair.push_back(d);
      for (std::size_t i = 0; i + 1 < corpus[d].sentences.size(); ++i) {
        if (index.ok(d, i) && index.ok(d, i + 1)) adjacent.push_back({d, i});
      }
    }
  }

  bool feasible(int label) const {
    switch (label) {
      case 2: return !adjacent.empty();
      case 1: return !docs_with_far_pair.empty();
      default: return docs_with_valid.size() >= 2;
    }
  }

  std::optional<std::pair<SentenceRef, SentenceRef>> draw(int label, Rng& rng) const {
    if (label == 2) {
      const auto a = adjacent[rng.uniform_index(adjacent.size())];
      const SentenceRef b{a.doc, a.sentence + 1};
      if (!index.ratio_ok(a, b)) return std::nullopt;
      return std::pair{a, b};
    }
    if (label == 1) {
      const auto d = docs_with_far_pair[rng.uniform_index(docs_with_far_pair.size())];
      const auto vs = index.valid_sentences(d);
      const auto i = vs[rng.uniform_index(vs.size())];
      const auto j = vs[rng.uniform_index(vs.size())];
      const auto gap = i > j ? i - j : j - i;
      if (gap < 2) return std::nullopt;
      const SentenceRef a{d, i}, b{d, j};
      if (!index.ratio_ok(a, b)) return std::nullopt;
      return std::pair{a, b};
    }
    const auto da = docs_with_valid[rng.uniform_index(docs_with_valid.size())];
    const auto db = docs_with_valid[rng.uniform_index(docs_with_valid.size())];
    if (da == db) return std::nullopt;
    const auto va = index.valid_sentences(da);
    const auto vb = index.valid_sentences(db);
    const SentenceRef a{da, va[rng.uniform_index(va.size())]};
    const SentenceRef b{db, vb[rng.uniform_index(vb.size())]};
    if (!index.ratio_ok(a, b)) return std::nullopt;
    return std::pair{a, b};
  }
};

// ------------------------------------------------------- option tasks

struct OptionSampler {
  std::span<const Document> corpus;
  const CorpusIndex& index;
  OptionConfig config;
  std::size_t query_cap;
  std::size_t option_cap;
  std::vector<SentenceRef> queries;
  std::vector<std::size_t> docs_with_valid;

  OptionSampler(std::span<const Document> c, const CorpusIndex& idx, OptionConfig cfg,
                std::size_t qcap, std::size_t ocap)
      : corpus(c), index(idx), config(cfg), query_cap(qcap), option_cap(ocap) {
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const auto vs = index.valid_sentences(d);
      if (!vs.empty()) docs_with_valid.push_back(d);
      for (std::size_t i = 0; i + 1 < corpus[d].sentences.size(); ++i) {
        if (!index.ok(d, i) || !index.ok(d, i + 1)) continue;
        if (same_doc_negatives(d, i).size() >= static_cast<std::size_t>(config.n_neg_same_doc)) {
          queries.push_back({d, i});
        }
      }
    }
    if (docs_with_valid.size() < static_cast<std::size_t>(1 + config.emitted_neg_diff())) {
      throw Error("insufficient distinct documents");
    }
    if (queries.empty()) {
      throw Error("insufficient corpus: no query sentence supports " +
                  std::to_string(config.num_options) + " options");
    }
  }

  // The left neighbour is excluded as well as the positive.
  std::vector<std::size_t> same_doc_negatives(std::size_t d, std::size_t i) const {
    std::vector<std::size_t> out;
    for (auto j : index.valid_sentences(d)) {
      if (j + 1 == i || j == i || j == i + 1) continue;
      out.push_back(j);
    }
    return out;
  }

  PretrainExample draw(Rng& rng, Format tag) const {
    const auto q = queries[rng.uniform_index(queries.size())];
    std::vector<SentenceRef> slots;  // construction order
    slots.push_back({q.doc, q.sentence + 1});

    auto same = same_doc_negatives(q.doc, q.sentence);
    rng.shuffle(same.begin(), same.end());
    for (int k = 0; k < config.n_neg_same_doc; ++k) slots.push_back({q.doc, same[static_cast<std::size_t>(k)]});

    std::vector<std::size_t> others;
    for (auto d : docs_with_valid) {
      if (d != q.doc) others.push_back(d);
    }
    rng.shuffle(others.begin(), others.end());
    for (int k = 0; k < config.emitted_neg_diff(); ++k) {
      const auto d = others[static_cast<std::size_t>(k)];
      const auto vs = index.valid_sentences(d);
      slots.push_back({d, vs[rng.uniform_index(vs.size())]});
    }

    std::vector<std::size_t> perm(slots.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm.begin(), perm.end());

    PretrainExample ex;
    ex.task = tag;
    ex.input["sq"] = truncate_tokens(sentence_at(corpus, q), query_cap);
    ex.meta.refs.push_back(q);
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
      const auto ref = slots[perm[pos]];
      ex.input["s" + std::to_string(pos + 1)] = truncate_tokens(sentence_at(corpus, ref), option_cap);
      ex.meta.refs.push_back(ref);
      if (perm[pos] == 0) ex.label = static_cast<int>(pos + 1);
    }
    ex.meta.permutation = std::move(perm);
    ex.target_token = normalize(option_letter(static_cast<std::size_t>(ex.label - 1)));
    fill_doc_ids(corpus, ex.meta);
    return ex;
  }
};

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '?' && c != '!') continue;
    const bool boundary = i + 1 == text.size() || is_space(text[i + 1]);
    if (!boundary) continue;
    auto piece = trim(text.substr(start, i - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = i + 1;
  }
  auto tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

Document make_document(std::string id, std::string_view text) {
  return {std::move(id), split_sentences(text)};
}

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      docs.push_back(make_document(j.at("id").get<std::string>(), j.at("text").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      throw Error("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

void write_corpus_jsonl(const std::filesystem::path& path,
                        std::span<const std::pair<std::string, std::string>> records) {
  std::string out;
  for (const auto& [id, text] : records) {
    ojson j;
    j["id"] = id;
    j["text"] = text;
    out += j.dump() + "\n";
  }
  write_file_atomic(path, out);
}

OptionConfig option_config_for(int num_options) {
  // num, len(q), len(op), pos, neg-same, neg-diff
  static constexpr int kTable[15][6] = {
      {2, 400, 50, 1, 1, 0},   {3, 400, 50, 1, 1, 1},   {4, 400, 50, 1, 1, 2},
      {5, 400, 40, 1, 1, 3},   {6, 300, 40, 1, 1, 4},   {7, 250, 30, 1, 2, 4},
      {8, 200, 30, 1, 2, 5},   {9, 200, 30, 1, 2, 6},   {10, 150, 20, 1, 2, 7},
      {11, 150, 20, 1, 3, 8},  {12, 150, 20, 1, 3, 9},  {13, 150, 20, 1, 3, 10},
      {14, 150, 20, 1, 3, 11}, {15, 150, 20, 1, 3, 12}, {16, 150, 20, 1, 3, 13},
  };
  if (num_options < 2 || num_options > 16) throw Error("unsupported option count");
  const auto& r = kTable[num_options - 2];
  return {r[0], static_cast<std::size_t>(r[1]), static_cast<std::size_t>(r[2]), r[3], r[4], r[5]};
}

std::size_t token_count(std::string_view text) { return tokenize(text).size(); }

std::string truncate_tokens(std::string_view text, std::size_t cap) {
  auto toks = tokenize(text);
  if (toks.size() > cap) toks.resize(cap);
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<PretrainExample> build_nsp3(std::span<const Document> corpus, std::size_t n,
                                        std::uint64_t seed) {
  const CorpusIndex index(corpus);
  const Nsp3Sampler sampler(corpus, index);

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
  Rng label_rng(seed, kLabelStream);
  label_rng.shuffle(labels.begin(), labels.end());

  for (int label : {2, 1, 0}) {
    const bool needed = std::find(labels.begin(), labels.end(), label) != labels.end();
    if (needed && !sampler.feasible(label)) {
      throw Error("insufficient corpus for label " + std::to_string(label));
    }
  }

  std::vector<PretrainExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    const int label = labels[i];
    std::optional<std::pair<SentenceRef, SentenceRef>> pair;
    for (int attempt = 0; attempt < kMaxRetries && !pair; ++attempt) pair = sampler.draw(label, rng);
    if (!pair) throw Error("insufficient corpus for label " + std::to_string(label));

    PretrainExample ex;
    ex.task = Format::SPC;
    ex.label = label;
    ex.target_token = kNsp3Words[static_cast<std::size_t>(label)];
    ex.input["s1"] = normalize(sentence_at(corpus, pair->first));
    ex.input["s2"] = normalize(sentence_at(corpus, pair->second));
    ex.meta.refs = {pair->first, pair->second};
    fill_doc_ids(corpus, ex.meta);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<PretrainExample> build_nss(std::span<const Document> corpus, std::size_t n,
                                       std::uint64_t seed, int num_options) {
  const auto config = option_config_for(num_options);
  const bool fixed_six = num_options == 6;
  const CorpusIndex index(corpus);
  const OptionSampler sampler(corpus, index, config,
                              fixed_six ? kFixedSixQueryCap : config.max_query_len,
                              fixed_six ? kFixedSixOptionCap : config.max_option_len);
  std::vector<PretrainExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    out.push_back(sampler.draw(rng, Format::MCC));
  }
  return out;
}

std::vector<PretrainExample> build_unified_mc(std::span<const Document> corpus, std::size_t n,
                                              std::uint64_t seed) {
  const CorpusIndex index(corpus);
  std::map<int, OptionSampler> samplers;
  std::vector<PretrainExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    const int k = rng.uniform_int(2, kMaxOptions);
    auto it = samplers.find(k);
    if (it == samplers.end()) {
      const auto cfg = option_config_for(k);
      it = samplers.try_emplace(k, corpus, index, cfg, cfg.max_query_len, cfg.max_option_len).first;
    }
    out.push_back(it->second.draw(rng, Format::UNIFIED_MC));
  }
  return out;
}

PseudoSscResult build_pseudo_ssc(std::span<const Document> corpus, const Annotator& annotator,
                                 std::size_t n, std::uint64_t seed,
                                 std::array<double, 5> thresholds) {
  for (double t : thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw Error("thresholds must lie in (0, 1]");
  }
  const CorpusIndex index(corpus);
  std::vector<SentenceRef> candidates;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (auto s : index.valid_sentences(d)) candidates.push_back({d, s});
  }
  Rng order(seed, kOrderStream);
  order.shuffle(candidates.begin(), candidates.end());

  PseudoSscResult result;
  std::array<std::vector<PretrainExample>, 5> buckets;
  for (const auto& ref : candidates) {
    ++result.candidates;
    const auto& sentence = sentence_at(corpus, ref);
    const auto [label, confidence] = annotator(sentence);
    if (label < 0 || label > 4) throw Error("annotator returned label out of range");
    if (confidence < thresholds[static_cast<std::size_t>(label)]) continue;
    ++result.accepted;
    PretrainExample ex;
    ex.task = Format::SSC;
    ex.label = label;
    ex.target_token = kSentiment[static_cast<std::size_t>(label)];
    ex.input["s"] = normalize(sentence);
    ex.meta.refs = {ref};
    ex.meta.confidence = confidence;
    fill_doc_ids(corpus, ex.meta);
    buckets[static_cast<std::size_t>(label)].push_back(std::move(ex));
  }

  std::size_t nonempty = 0;
  for (std::size_t l = 0; l < buckets.size(); ++l) {
    if (buckets[l].empty()) {
      result.warnings.push_back("label " + std::to_string(l) +
                                " has no examples above its threshold; labels are unbalanced");
    } else {
      ++nonempty;
    }
  }
  if (nonempty == 0) throw Error("annotator produced nothing above thresholds");

  // Round-robin over labels so majority labels are downsampled.
  std::array<std::size_t, 5> taken{};
  bool progress = true;
  while (result.examples.size() < n && progress) {
    progress = false;
    for (std::size_t l = 0; l < buckets.size() && result.examples.size() < n; ++l) {
      if (taken[l] < buckets[l].size()) {
        result.examples.push_back(buckets[l][taken[l]++]);
        progress = true;
      }
    }
  }
  Rng shuffle_rng(seed, kLabelStream);
  shuffle_rng.shuffle(result.examples.begin(), result.examples.end());
  return result;
}

std::pair<int, double> lexicon_annotator(const std::string& sentence) {
  static const std::map<std::string, int> kLexicon = {
      {"awful", -2},     {"terrible", -2}, {"horrible", -2}, {"worst", -2}, {"hate", -2},
      {"dreadful", -2},  {"bad", -1},      {"poor", -1},     {"boring", -1}, {"dull", -1},
      {"weak", -1},      {"sad", -1},      {"good", 1},      {"nice", 1},    {"fine", 1},
      {"pleasant", 1},   {"solid", 1},     {"happy", 1},     {"great", 2},   {"excellent", 2},
      {"wonderful", 2},  {"love", 2},      {"best", 2},      {"superb", 2},
  };
  int positive = 0;
  int negative = 0;
  for (const auto& tok : tokenize(sentence)) {
    auto it = kLexicon.find(tok);
    if (it == kLexicon.end()) continue;
    if (it->second > 0) positive += it->second;
    else negative -= it->second;
  }
  const int score = positive - negative;
  int label = 2;
  if (score <= -2) label = 0;
  else if (score == -1) label = 1;
  else if (score == 1) label = 3;
  else if (score >= 2) label = 4;
  const double hits = static_cast<double>(positive + negative);
  if (label == 2) return {label, 1.0 / (1.0 + hits)};
  // Margin normalized by total polar mass, mapped into (0.5, 1).
  const double margin = std::abs(static_cast<double>(score)) / (hits + 1.0);
  return {label, 0.5 + 0.5 * margin};
}

std::optional<int> rederive_label(std::span<const Document> corpus, const PretrainExample& ex) {
  const auto& refs = ex.meta.refs;
  for (const auto& r : refs) {
    if (r.doc >= corpus.size() || r.sentence >= corpus[r.doc].sentences.size()) return std::nullopt;
  }
  switch (ex.task) {
    case Format::SPC: {
      if (refs.size() != 2) return std::nullopt;
      if (refs[0].doc != refs[1].doc) return 0;
      if (refs[1].sentence == refs[0].sentence + 1) return 2;
      const auto gap = refs[0].sentence > refs[1].sentence ? refs[0].sentence - refs[1].sentence
                                                          : refs[1].sentence - refs[0].sentence;
      return gap >= 2 ? std::optional<int>(1) : std::nullopt;
    }
    case Format::MCC:
    case Format::UNIFIED_MC: {
      if (refs.size() < 3) return std::nullopt;
      const auto q = refs[0];
      std::optional<int> found;
      for (std::size_t i = 1; i < refs.size(); ++i) {
        if (refs[i].doc == q.doc && refs[i].sentence == q.sentence + 1) {
          if (found) return std::nullopt;
          found = static_cast<int>(i);
        }
      }
      return found;
    }
    case Format::SSC:
      if (refs.size() != 1 || !ex.meta.confidence) return std::nullopt;
      return ex.label;
  }
  return std::nullopt;
}

std::string meta_key(const PretrainExample& ex) {
  std::string key(to_string(ex.task));
  for (const auto& r : ex.meta.refs) key += "|" + std::to_string(r.doc) + ":" + std::to_string(r.sentence);
  return key;
}

ExampleSplit split_validation(std::vector<PretrainExample> examples, double fraction,
                              std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw Error("validation fraction must be in [0, 1)");
  std::map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto [it, inserted] = group_of.try_emplace(meta_key(examples[i]), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::vector<std::size_t> order(groups.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  Rng rng(seed, kOrderStream);
  rng.shuffle(order.begin(), order.end());

  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(examples.size())));
  std::vector<bool> is_valid(examples.size(), false);
  std::size_t held = 0;
  for (auto g : order) {
    if (held >= target) break;
    for (auto i : groups[g]) is_valid[i] = true;
    held += groups[g].size();
  }
  ExampleSplit split;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (is_valid[i] ? split.valid : split.train).push_back(std::move(examples[i]));
  }
  return split;
}

std::string example_to_json_line(const PretrainExample& ex) {
  ojson j;
  j["task"] = std::string(to_string(ex.task));
  ojson input = ojson::object();
  for (const auto& [k, v] : ex.input) input[k] = v;
  j["input"] = std::move(input);
  j["label"] = ex.label;
  j["target_token"] = ex.target_token;
  ojson meta;
  ojson refs = ojson::array();
  for (std::size_t i = 0; i < ex.meta.refs.size(); ++i) {
    ojson r;
    r["doc"] = i < ex.meta.doc_ids.size() ? ex.meta.doc_ids[i] : std::string();
    r["doc_index"] = ex.meta.refs[i].doc;
    r["sentence"] = ex.meta.refs[i].sentence;
    refs.push_back(std::move(r));
  }
  meta["refs"] = std::move(refs);
  if (!ex.meta.permutation.empty()) meta["permutation"] = ex.meta.permutation;
  if (ex.meta.confidence) meta["confidence"] = *ex.meta.confidence;
  j["meta"] = std::move(meta);
  return j.dump();
}

PretrainExample example_from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    PretrainExample ex;
    ex.task = parse_format(j.at("task").get<std::string>());
    for (const auto& [k, v] : j.at("input").items()) ex.input[k] = v.get<std::string>();
    ex.label = j.at("label").get<int>();
    ex.target_token = j.at("target_token").get<std::string>();
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      if (m.contains("refs")) {
        for (const auto& r : m.at("refs")) {
          ex.meta.refs.push_back({r.at("doc_index").get<std::size_t>(), r.at("sentence").get<std::size_t>()});
          ex.meta.doc_ids.push_back(r.value("doc", std::string()));
        }
      }
      if (m.contains("permutation")) ex.meta.permutation = m.at("permutation").get<std::vector<std::size_t>>();
      if (m.contains("confidence")) ex.meta.confidence = m.at("confidence").get<double>();
    }
    return ex;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed example record: ") + e.what());
  }
}

void write_examples_jsonl(const std::filesystem::path& path, std::span<const PretrainExample> examples) {
  std::string out;
  for (const auto& ex : examples) out += example_to_json_line(ex) + "\n";
  write_file_atomic(path, out);
}

std::vector<PretrainExample> read_examples_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::vector<PretrainExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(example_from_json_line(line));
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::string& name, const ExampleSplit& split) {
  std::filesystem::create_directories(dir);
  write_examples_jsonl(dir / (name + ".train.jsonl"), split.train);
  write_examples_jsonl(dir / (name + ".valid.jsonl"), split.valid);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pptlab
